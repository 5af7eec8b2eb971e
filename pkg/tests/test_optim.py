import numpy as np
import pytest

from chebyshev_feature_nn.optim import (
    AdamConfig,
    LbfgsConfig,
    TerminationReason,
    lr_at_epoch,
    run_adam,
    run_lbfgs,
    strong_wolfe,
)
from chebyshev_feature_nn.sampling import make_generator, normal, uniform


class Quadratic:
    """0.5 (x - x*)' A (x - x*), minimum value exactly zero."""

    def __init__(self, a: np.ndarray, minimizer: np.ndarray):
        self.a = a
        self.minimizer = minimizer

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        e = x - self.minimizer
        g = self.a @ e
        return 0.5 * float(e @ g), g


class Rosenbrock:
    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        a, b = x
        loss = (1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2
        grad = np.array(
            [-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]
        )
        return float(loss), grad


class Constant:
    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        return 3.0, np.zeros_like(x)


class BreaksAfter:
    """x^2 that turns into NaN after a fixed number of evaluations."""

    def __init__(self, good_evaluations: int):
        self.remaining = good_evaluations

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self.remaining -= 1
        if self.remaining < 0:
            return float("nan"), np.full_like(x, np.nan)
        return float(x @ x), 2.0 * x


class UndefinedBeyond:
    """scale * (z - 0.95)^2 on one coordinate, NaN for z >= edge."""

    def __init__(self, edge: float, scale: float = 1.0):
        self.edge = edge
        self.scale = scale

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        if x[0] >= self.edge:
            return float("nan"), np.full_like(x, np.nan)
        e = x[0] - 0.95
        return self.scale * e * e, np.array([2.0 * self.scale * e])


class Recording:
    def __init__(self, objective: Rosenbrock):
        self.objective = objective
        self.seen: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        loss, grad = self.objective.evaluate(x)
        self.seen[loss] = (x.copy(), grad)
        return loss, grad


def spd_quadratic(n: int, condition: float, seed: int) -> Quadratic:
    gen = make_generator(seed)
    q, _ = np.linalg.qr(normal(gen, 1.0, (n, n)))
    eigenvalues = np.geomspace(1.0, condition, n)
    a = q @ np.diag(eigenvalues) @ q.T
    return Quadratic((a + a.T) / 2.0, uniform(gen, -1.0, 1.0, n))


def dense_bfgs_iterates(
    objective: Quadratic, x0: np.ndarray, iterations: int, cfg: LbfgsConfig
) -> list[np.ndarray]:
    x = x0.copy()
    loss, grad = objective.evaluate(x)
    h = np.eye(x.size)
    iterates = []
    for k in range(iterations):
        direction = -h @ grad
        step = min(1.0, 1.0 / float(np.sum(np.abs(grad)))) if k == 0 else 1.0
        result = strong_wolfe(
            objective.evaluate,
            x,
            step,
            direction,
            loss,
            grad,
            c1=cfg.wolfe_c1,
            c2=cfg.wolfe_c2,
            max_evals=cfg.max_linesearch,
            rtol=cfg.linesearch_rtol,
        )
        assert result.success
        s = result.step * direction
        y = result.grad - grad
        rho = 1.0 / float(y @ s)
        eye = np.eye(x.size)
        h = (eye - rho * np.outer(s, y)) @ h @ (eye - rho * np.outer(y, s))
        h += rho * np.outer(s, s)
        x, loss, grad = x + s, result.loss, result.grad
        iterates.append(x)
    return iterates


def test_learning_rate_schedule() -> None:
    cfg = AdamConfig()

    assert lr_at_epoch(cfg, 0) == 0.01
    assert lr_at_epoch(cfg, 99) == 0.01
    assert lr_at_epoch(cfg, 100) == pytest.approx(0.0097)
    assert lr_at_epoch(cfg, 250) == pytest.approx(0.009409)


def test_adam_first_step_moves_by_learning_rate() -> None:
    objective = Quadratic(np.array([[2.0]]), np.array([0.0]))

    trace = run_adam(objective, np.array([1.0]), AdamConfig(epochs=1))

    assert trace.params[0] == pytest.approx(0.99, abs=1e-9)
    assert trace.losses == [1.0]
    assert trace.evaluations == 1


def test_adam_zero_gradient_leaves_params_unchanged() -> None:
    x0 = np.array([0.3, -0.7])

    trace = run_adam(Constant(), x0, AdamConfig(epochs=50))

    assert np.array_equal(trace.params, x0)
    assert trace.reason is TerminationReason.MAX_ITERS


def test_adam_stops_on_stagnation() -> None:
    trace = run_adam(Constant(), np.zeros(2), AdamConfig(epochs=1000))

    assert trace.reason is TerminationReason.LOSS_STAGNATION
    assert len(trace.losses) == 201


def test_adam_converges_on_quadratic() -> None:
    objective = Quadratic(
        np.diag([1.0, 2.0, 3.0, 4.0, 5.0]),
        np.array([0.5, -0.3, 0.2, 0.1, -0.4]),
    )

    trace = run_adam(objective, np.zeros(5), AdamConfig(epochs=5000))

    assert trace.final_loss < 1e-4
    assert trace.final_loss < 1e-3 * trace.losses[0]


def test_adam_returns_best_params_on_non_finite_loss() -> None:
    trace = run_adam(BreaksAfter(5), np.array([1.0]), AdamConfig(epochs=100))

    assert trace.reason is TerminationReason.NON_FINITE
    assert len(trace.losses) == 5
    assert np.all(np.isfinite(trace.params))
    assert float(trace.params @ trace.params) == min(trace.losses)


def test_adam_is_deterministic() -> None:
    objective = spd_quadratic(4, 10.0, seed=1)
    cfg = AdamConfig(epochs=300)

    first = run_adam(objective, np.zeros(4), cfg)
    second = run_adam(objective, np.zeros(4), cfg)

    assert first.losses == second.losses
    assert np.array_equal(first.params, second.params)


def test_adam_config_validation() -> None:
    with pytest.raises(ValueError, match="beta1"):
        AdamConfig(beta1=0.999, beta2=0.9)
    with pytest.raises(ValueError, match="epochs"):
        AdamConfig(epochs=0)


def test_lbfgs_at_minimizer_stops_immediately() -> None:
    objective = spd_quadratic(3, 10.0, seed=2)

    trace = run_lbfgs(objective, objective.minimizer.copy(), LbfgsConfig())

    assert trace.reason is TerminationReason.GRAD_TOL
    assert np.array_equal(trace.params, objective.minimizer)
    assert trace.losses == []


def test_lbfgs_solves_convex_quadratic() -> None:
    objective = spd_quadratic(10, 100.0, seed=3)

    trace = run_lbfgs(objective, np.zeros(10), LbfgsConfig(max_iters=50))

    _, grad = objective.evaluate(trace.params)
    assert np.linalg.norm(grad) < 1e-10
    assert np.allclose(trace.params, objective.minimizer, rtol=0, atol=1e-8)


def test_lbfgs_losses_never_increase() -> None:
    trace = run_lbfgs(Rosenbrock(), np.array([-1.2, 1.0]), LbfgsConfig(max_iters=60))

    assert all(b <= a for a, b in zip(trace.losses, trace.losses[1:]))


def test_lbfgs_solves_rosenbrock() -> None:
    trace = run_lbfgs(
        Rosenbrock(), np.array([-1.2, 1.0]), LbfgsConfig(max_iters=200)
    )

    assert np.allclose(trace.params, [1.0, 1.0], rtol=0, atol=1e-6)
    assert len(trace.losses) <= 200


def test_lbfgs_matches_dense_bfgs_without_initial_scaling() -> None:
    objective = spd_quadratic(4, 20.0, seed=4)
    x0 = np.zeros(4)
    reference = dense_bfgs_iterates(
        objective, x0, 3, LbfgsConfig(scale_initial_hessian=False)
    )

    for k, expected in enumerate(reference, start=1):
        cfg = LbfgsConfig(max_iters=k, history=10, scale_initial_hessian=False)
        trace = run_lbfgs(objective, x0, cfg)

        assert len(trace.losses) == k
        assert np.allclose(trace.params, expected, rtol=0, atol=1e-8)


def test_lbfgs_returns_finite_params_on_non_finite_start() -> None:
    trace = run_lbfgs(BreaksAfter(0), np.array([1.0]), LbfgsConfig())

    assert trace.reason is TerminationReason.NON_FINITE
    assert trace.params.tolist() == [1.0]


def test_lbfgs_is_deterministic() -> None:
    objective = spd_quadratic(6, 50.0, seed=5)
    cfg = LbfgsConfig(max_iters=20)

    first = run_lbfgs(objective, np.zeros(6), cfg)
    second = run_lbfgs(objective, np.zeros(6), cfg)

    assert first.losses == second.losses
    assert np.array_equal(first.params, second.params)


@pytest.mark.parametrize("step", [1e-3, 1.0, 50.0])
def test_strong_wolfe_conditions_hold(step: float) -> None:
    objective = spd_quadratic(5, 30.0, seed=6)
    x = np.zeros(5)
    loss, grad = objective.evaluate(x)
    direction = -grad
    c1, c2 = 1e-4, 0.1

    result = strong_wolfe(objective.evaluate, x, step, direction, loss, grad, c1, c2)

    gtd = float(grad @ direction)
    assert result.success
    assert result.loss <= loss + c1 * result.step * gtd
    assert abs(float(result.grad @ direction)) <= -c2 * gtd
    assert result.loss == objective.evaluate(x + result.step * direction)[0]


def test_strong_wolfe_backs_out_of_undefined_region() -> None:
    objective = UndefinedBeyond(edge=2.0)
    x = np.array([0.5])
    loss, grad = objective.evaluate(x)
    direction = -grad

    result = strong_wolfe(objective.evaluate, x, 10.0, direction, loss, grad)

    gtd = float(grad @ direction)
    assert result.success
    assert np.isfinite(result.loss)
    assert x[0] + result.step * direction[0] < 2.0
    assert result.loss <= loss + 1e-4 * result.step * gtd
    assert abs(float(result.grad @ direction)) <= -0.9 * gtd


def test_lbfgs_makes_progress_next_to_undefined_region() -> None:
    objective = UndefinedBeyond(edge=0.99, scale=10.0)

    trace = run_lbfgs(objective, np.array([0.5]), LbfgsConfig(max_iters=20))

    assert trace.losses
    assert trace.params[0] < 0.99
    assert trace.final_loss < 1e-8


def test_every_accepted_lbfgs_step_satisfies_wolfe_conditions() -> None:
    cfg = LbfgsConfig(max_iters=25)
    objective = Recording(Rosenbrock())
    x0 = np.array([-1.2, 1.0])

    trace = run_lbfgs(objective, x0, cfg)

    x = x0
    loss, grad = Rosenbrock().evaluate(x0)
    assert len(trace.losses) > 5
    for next_loss in trace.losses:
        next_x, next_grad = objective.seen[next_loss]
        s = next_x - x
        gts = float(grad @ s)
        assert gts < 0
        slack = 1e-12 * abs(gts)
        assert next_loss <= loss + cfg.wolfe_c1 * gts + slack
        assert abs(float(next_grad @ s)) <= -cfg.wolfe_c2 * gts + slack
        x, loss, grad = next_x, next_loss, next_grad
