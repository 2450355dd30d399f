"""optparity: desk-scale optimizer parity benchmarking toolkit."""

from .param_store import (
    ParamGroup,
    ParamStore,
    build_param_store,
    global_l2_norm,
    select_groups,
)
from .optim import (
    GroupState,
    OptimizerConfig,
    OptimizerState,
    RoutingRule,
    adam_update,
    composite_step,
    effective_gradient,
    heavy_ball_update,
    lamb_update,
    lars_update,
    nesterov_update,
)
from .schedule import ScheduleSpec, eval_schedule, export_schedule, max_discontinuity
from .model import (
    Batch,
    BnRunningStats,
    MlpConfig,
    backward,
    bn_forward,
    finite_difference_check,
    forward,
    gen_synthetic_dataset,
    init_mlp,
)
from .tuner import (
    SearchDim,
    SeedSummary,
    TrialRecord,
    halton_point,
    map_unit,
    multi_seed_eval,
    run_study,
    sample_trial,
    select_best,
)
from .harness import (
    ExperimentConfig,
    TrainResult,
    parse_config,
    patch_config,
    read_results,
    report,
    run_ablation,
    run_training,
    write_results,
)

__version__ = "0.1.0"
