"""Fixed-point operator calculus in R^n.

Build operators from metric projections onto primitive convex sets, relax,
compose and combine them with certified class constants, and drive the
resulting fixed-point iterations with fixed or extrapolated step sizes.
"""

from .errors import (
    CompositionUncertifiedError,
    ConfigError,
    DimensionMismatchError,
    FejerViolationError,
    FixopsError,
    MissingNormError,
    SigmaEvaluationError,
    ZeroOperatorError,
)
from .hilbert import LinearMap, as_point, estimate_norm, inner, norm
from .operators import (
    Ball,
    Box,
    ClassCertificate,
    ClassTag,
    Halfspace,
    Hyperplane,
    Intersection,
    Operator,
    compose,
    convex_combination,
    generalized_relax,
    identity,
    landweber,
    project,
    projection,
    relax,
)
from .parameter_algebra import (
    ChainGamma,
    CompositionVerdict,
    chain_gamma,
    demicontraction_to_relaxed_cutter,
    gamma_star,
    lemma_A_holds,
    lemma_B_holds,
    nu_star,
    nu_star_value,
    relax_demicontraction,
    relaxed_cutter_to_demicontraction,
    rfne_to_spc,
    spc_to_rfne,
)
from .extrapolation import (
    ExtrapolationState,
    lemma_a_plus_b,
    tau_hat_ball_affine,
    tau_star_common,
    tau_star_pair,
)
from .solver import (
    IterationTrace,
    Status,
    StepRule,
    StoppingRule,
    fejer_check,
    iterate,
    preset_dr,
    preset_eadc,
    preset_km,
    preset_maruster,
    preset_moudafi,
    preset_raspc,
)
from .verify import (
    CheckReport,
    Claim,
    check_class,
    composition_identity_slack,
    default_sampler,
    fix_collapse_witness,
    fixv_characterization,
    not_relaxed_cutter_witness,
    optimality_h,
    sharpness_witness,
)

__version__ = "0.1.0"
