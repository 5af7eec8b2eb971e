from .experiment import (  # NOQA
    CellReport,
    ExperimentConfig,
    Scale,
    Suite,
    SuiteReport,
    rmse,
    rmse_saturated,
    run_1d_suite,
    run_ablation,
    run_multidim_suite,
    run_suite,
)
from .modelfile import (  # NOQA
    ModelFile,
    RunMetadata,
    deserialize_model,
    serialize_model,
)
from .multistage import (  # NOQA
    ComposedModel,
    StageModel,
    StageReport,
    StageSchedule,
    StageTrainingError,
    TrainConfig,
    default_schedule,
    fixed_schedule,
    predict_composed,
    residual_normalizer,
    train_multistage,
    train_stage,
)
from .network import (  # NOQA
    CfnnArchitecture,
    CfnnParams,
    FeatureLayer,
    NetworkObjective,
    backward,
    forward,
    init_params,
    mse_loss,
)
from .optim import (  # NOQA
    AdamConfig,
    LbfgsConfig,
    OptimTrace,
    TerminationReason,
    run_adam,
    run_lbfgs,
    strong_wolfe,
)
from .targets import (  # NOQA
    Dataset,
    FunctionKind,
    TargetFunction,
    eval_target,
    make_equidistant_dataset,
    make_target,
    make_uniform_dataset,
    sample_multimodal_params,
)
from .version import __version__  # NOQA
