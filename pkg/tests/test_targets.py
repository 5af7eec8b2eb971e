import logging
import math

import numpy as np
import pytest

from chebyshev_feature_nn.sampling import exponential, make_generator, uniform
from chebyshev_feature_nn.targets import (
    MULTIMODAL_COUNT,
    Dataset,
    Equidistant,
    FunctionKind,
    TargetFunction,
    UniformRandom,
    check_domain,
    eval_target,
    make_equidistant_dataset,
    make_target,
    make_uniform_dataset,
    read_points_csv,
    sample_multimodal_params,
    target_values,
)


def grid(*values: float) -> np.ndarray:
    return np.array(values, dtype=np.float64)[:, np.newaxis]


def test_eval_target_reference_values() -> None:
    assert eval_target(make_target("f1"), 0.7) == 0.7
    assert eval_target(make_target("f4"), 0.0) == 1.0
    assert eval_target(make_target("f2"), 0.0) == pytest.approx(
        1.0414709848, abs=1e-10
    )
    assert eval_target(make_target("f7", dim=3), [1.0, 1.0, 1.0]) == 3.0


def test_f3_is_exactly_zero_at_integers() -> None:
    values = target_values(make_target("f3"), grid(-1.0, 0.0, 1.0))

    assert values.tolist() == [0.0, 0.0, 0.0]
    assert eval_target(make_target("f3"), 0.5) == pytest.approx(1.0)


def test_f6_sign_at_zero_is_zero() -> None:
    values = target_values(make_target("f6"), grid(-0.5, 0.0, 0.5))

    assert values.tolist() == [-1.0, 0.0, 1.0]


def test_f8_peaks_at_its_centre() -> None:
    f = make_target("f8", dim=2)

    # centre omega = 1 maps to x = 1 under (x + 1) / 2
    assert eval_target(f, [1.0, 1.0]) == 1.0
    assert eval_target(f, [-1.0, -1.0]) == pytest.approx(math.exp(-2.0))


def test_f6_is_odd() -> None:
    x = np.linspace(-1.0, 1.0, 201)[:, np.newaxis]
    f = make_target("f6")

    assert np.array_equal(target_values(f, -x), -target_values(f, x))


def test_f3_is_nonnegative() -> None:
    x = np.linspace(-1.0, 1.0, 1001)[:, np.newaxis]

    values = target_values(make_target("f3"), x)

    assert np.all(values >= 0.0)


@pytest.mark.parametrize("dim", [1, 3, 10])
def test_f8_stays_in_unit_interval(dim: int) -> None:
    dataset = make_uniform_dataset(make_target("f8", dim=dim), 2000, seed=dim)

    assert np.all(dataset.values > 0.0)
    assert np.all(dataset.values <= 1.0)


def test_f9_matches_term_by_term_sum() -> None:
    gen = make_generator(12)
    f = TargetFunction(
        kind=FunctionKind.F9,
        dim=3,
        modal_alpha=uniform(gen, -10.0, 10.0, 4),
        modal_sigma=uniform(gen, 0.5, 2.0, (4, 3)),
        modal_omega=uniform(gen, -1.0, 1.0, (4, 3)),
    )
    points = uniform(gen, -1.0, 1.0, (25, 3))

    expected = []
    for x in points:
        total = 0.0
        for i in range(4):
            exponent = 0.0
            for j in range(3):
                shifted = (x[j] + 1.0) / 2.0 - f.modal_omega[i, j]
                exponent += f.modal_sigma[i, j] ** 2 * shifted**2
            total += f.modal_alpha[i] * math.exp(-exponent)
        expected.append(total)

    assert np.allclose(target_values(f, points), expected, rtol=1e-13, atol=1e-13)


def test_eval_target_rejects_dimension_mismatch() -> None:
    with pytest.raises(ValueError, match="dimension"):
        eval_target(make_target("f7", dim=3), [0.1, 0.2])


def test_eval_target_rejects_points_outside_domain() -> None:
    with pytest.raises(ValueError, match=r"\[-1, 1\]"):
        eval_target(make_target("f1"), 1.5)


def test_target_function_validates_parameters() -> None:
    with pytest.raises(ValueError, match="requires m"):
        TargetFunction(kind=FunctionKind.F4)
    with pytest.raises(ValueError, match="does not apply"):
        TargetFunction(kind=FunctionKind.F1, m=3.0)
    with pytest.raises(ValueError, match="one-dimensional"):
        TargetFunction(kind=FunctionKind.F2, dim=2)
    with pytest.raises(ValueError, match="shape"):
        TargetFunction(
            kind=FunctionKind.F8,
            dim=2,
            gauss_sigma=np.ones(3),
            gauss_omega=np.ones(2),
        )


def test_make_target_rejects_unknown_id() -> None:
    with pytest.raises(ValueError, match="unknown function id"):
        make_target("f10")


def test_equidistant_dataset_includes_endpoints() -> None:
    identity = make_equidistant_dataset(make_target("f1"), 3)
    absolute = make_equidistant_dataset(make_target("f5"), 3)

    assert identity.points[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert identity.values.tolist() == [-1.0, 0.0, 1.0]
    assert absolute.values.tolist() == [1.0, 0.0, 1.0]
    assert identity.provenance == Equidistant()


def test_equidistant_dataset_spacing() -> None:
    dataset = make_equidistant_dataset(make_target("f2"), 3000)

    assert dataset.size == 3000
    assert np.allclose(np.diff(dataset.points[:, 0]), 2.0 / 2999, rtol=0, atol=1e-15)


def test_equidistant_dataset_rejects_multi_dimensional_target() -> None:
    with pytest.raises(ValueError, match="1-D"):
        make_equidistant_dataset(make_target("f7", dim=2), 10)


def test_uniform_dataset_shape_and_domain() -> None:
    dataset = make_uniform_dataset(make_target("f7", dim=2), 20000, seed=42)

    assert dataset.points.shape == (20000, 2)
    assert np.all(np.abs(dataset.points) <= 1.0)
    assert dataset.provenance == UniformRandom(42)


def test_uniform_dataset_is_deterministic() -> None:
    f = make_target("f7", dim=2)
    first = make_uniform_dataset(f, 5, seed=7)
    second = make_uniform_dataset(f, 5, seed=7)

    assert np.array_equal(first.points, second.points)
    assert np.array_equal(first.values, second.values)


def test_uniform_dataset_coordinates_are_centred() -> None:
    dataset = make_uniform_dataset(make_target("f8", dim=10), 10000, seed=1)

    assert np.all(np.abs(dataset.points.mean(axis=0)) < 0.05)


def test_multimodal_params_shape_and_ranges() -> None:
    f = sample_multimodal_params(5, seed=3)
    small = sample_multimodal_params(2, seed=3)

    assert f.modal_count == MULTIMODAL_COUNT
    assert np.all(f.modal_sigma == 1.0)
    assert np.all(np.abs(small.modal_omega) <= 1.0)
    assert np.all(np.abs(small.modal_alpha) <= 10.0)


def test_multimodal_params_are_deterministic() -> None:
    first = sample_multimodal_params(2, seed=3)
    second = sample_multimodal_params(2, seed=3)

    assert np.array_equal(first.modal_alpha, second.modal_alpha)
    assert np.array_equal(first.modal_omega, second.modal_omega)


def test_dataset_rejects_mismatched_lengths() -> None:
    with pytest.raises(ValueError, match="does not match"):
        Dataset(grid(0.0, 0.5), np.zeros(3), Equidistant())


def test_check_domain_rejects_nan() -> None:
    with pytest.raises(ValueError):
        check_domain(np.array([[np.nan]]))


def test_sampling_draws_are_seeded() -> None:
    a = exponential(make_generator(5), 5.0, 1000)
    b = exponential(make_generator(5), 5.0, 1000)

    assert np.array_equal(a, b)
    assert np.all(a >= 0)
    assert np.all(uniform(make_generator(1), -1.0, 1.0, 100) < 1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        make_generator(-1)


def test_read_points_csv_skips_comments_and_value_column(tmp_path) -> None:
    path = tmp_path / "points.csv"
    path.write_text("# provenance\nx1,x2,f\n0.5,-0.25,1\n1,0,2\n")

    points = read_points_csv(path)

    assert points.tolist() == [[0.5, -0.25], [1.0, 0.0]]


def test_read_points_csv_rejects_malformed_rows(tmp_path) -> None:
    path = tmp_path / "points.csv"
    path.write_text("x1\nabc\n")

    with pytest.raises(ValueError, match="malformed"):
        read_points_csv(path)


def test_read_points_csv_logs_point_count(tmp_path, caplog) -> None:
    path = tmp_path / "points.csv"
    path.write_text("x1,x2\n0.5,0.25\n-1,1\n")

    with caplog.at_level(logging.DEBUG, logger="chebyshev_feature_nn.targets"):
        read_points_csv(path)

    assert f"Read 2 points from {path}" in caplog.messages
