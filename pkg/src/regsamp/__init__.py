"""Importance-sampling coresets for regularized linear classification losses.

Build small weighted samples whose loss uniformly (1 +- eps)-approximates
the full regularized objective, stream them with rejection or weighted
reservoir sampling, stress them against adversarial hard instances, and
measure empirical sample-complexity scaling.
"""

__version__ = "0.1.0"

from .bench import (
    FellerResult,
    ScalingCurve,
    TrialConfig,
    failure_rate,
    feller_check,
    min_sample_size,
    scaling_curve,
    unbiasedness_check,
    wilson_interval,
)
from .errors import RegsampError
from .hardness import (
    FailureVerdict,
    HardInstance,
    check_failure,
    gen_coupon_relu,
    gen_lin_logistic,
    gen_lin_relu,
    gen_lin_sigmoid,
    gen_moment_curve,
    gen_quad_hinge,
    gen_quad_logistic,
    gen_quad_relu,
    gen_quad_sigmoid,
    isolating_direction,
    load_hard_instance,
    reduction_scale,
)
from .losses import (
    LossSpec,
    RegSpec,
    check_bounded_derivative,
    decompose,
    eval_loss,
    eval_loss_derivative,
    eval_regularizer,
    make_loss,
    make_reg,
)
from .model import (
    Constants,
    Instance,
    ObjectiveSpec,
    compute_constants,
    fold_label,
    gaussian_instance,
    load_instance,
    make_instance,
    normalize_instance,
    save_instance,
    stream_atoms,
)
from .objective import (
    OptReport,
    QuerySet,
    build_query_set,
    coreset_objective,
    estimate_opt,
    exhaustive_sample,
    full_objective,
    max_relative_error,
    opt_lower_bound,
    recommended_sample_size,
    relative_error,
    sensitivity,
)
from .sampler import (
    CategoricalSampler,
    SEstimate,
    WeightedSample,
    derive_rng,
    draw_iid,
    estimate_S,
    mixture_probabilities,
    rejection_stream,
    score,
    weight,
    weighted_reservoir,
    weights_from_estimate,
)
