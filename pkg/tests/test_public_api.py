import numpy as np

from chebyshev_feature_nn import (
    AdamConfig,
    CfnnArchitecture,
    ExperimentConfig,
    LbfgsConfig,
    Scale,
    Suite,
    TrainConfig,
    __version__,
    deserialize_model,
    make_equidistant_dataset,
    make_target,
    serialize_model,
    train_multistage,
)
from chebyshev_feature_nn.experiment import ExperimentConfig as ModuleExperimentConfig
from chebyshev_feature_nn.multistage import train_multistage as module_train_multistage
from chebyshev_feature_nn.version import __version__ as module_version


def test_canonical_api_reexports_module_objects():
    assert ModuleExperimentConfig is ExperimentConfig
    assert module_train_multistage is train_multistage
    assert module_version == __version__


def test_train_save_and_reload_through_package_api():
    f = make_target("f1")
    train = make_equidistant_dataset(f, 16)
    cfg = TrainConfig(adam=AdamConfig(epochs=20), lbfgs=LbfgsConfig(max_iters=10))
    arch = CfnnArchitecture(input_dim=1, hidden_layers=2, width=4)

    model, reports = train_multistage(f, train, 1, cfg, arch=arch)
    restored = deserialize_model(serialize_model(model))

    assert len(reports) == 1
    assert np.array_equal(restored.predict(train.points), model.predict(train.points))


def test_suite_config_from_strings():
    cfg = ExperimentConfig.for_suite("ablation2", "desk")

    assert cfg.suite is Suite.ABLATION2
    assert cfg.scale is Scale.DESK
