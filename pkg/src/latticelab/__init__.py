"""Order, uo- and bounded-uo convergence diagnostics on finite function lattices."""

from .config import CheckConfig, ProofConstants, parse_constants
from .convergence import (
    CertificatePolicy,
    ConvergenceVerdict,
    FamilyMetadata,
    PairedVerdict,
    SampledPolicy,
    SequenceFamily,
    TruncationModel,
    buo_equals_order,
    check_buo_cauchy,
    check_buo_convergence,
    check_order_convergence,
    dominating_element,
    norm_bound,
    pointwise_limit,
    truncation_family,
)
from .core import (
    Carrier,
    LatticeElement,
    Membership,
    SpaceTag,
    Tail,
    abs_,
    difference,
    join,
    le,
    meet,
    member_of,
    ones,
    p_norm,
    pos_part,
    sup_norm,
    truncate,
)
from .counterexamples import (
    EscapeReport,
    HatScenario,
    LipCounterexample,
    RefinementFamily,
    build_refinement,
    hat_family,
    hat_scenario,
    lip_counterexample,
    running_meets,
    verify_escape,
)
from .envelopes import (
    ClosedForm,
    EnvelopeResult,
    ModulusCurve,
    error_bound,
    inf_convolution,
    inf_convolution_ladder,
    lipschitz_constant,
    modulus_of_continuity,
)
from .errors import (
    DominatingConditionError,
    HorizonExhaustedError,
    InputError,
    InternalInvariantError,
    LatticeLabError,
    LimitInSpaceRefusal,
    MetadataError,
    MetricValidationError,
    PointwiseDivergenceError,
    UndecidableTailError,
)
from .metric import (
    FiniteMetricSpace,
    discreteness_constant,
    dist_to_set,
    dist_to_set_all,
    find_close_pair,
    isolation_profile,
    isolation_radius,
    max_slope,
)
from .witnesses import (
    BlockWitness,
    JumpWitness,
    RefutationCertificate,
    extract_big_jump_witness,
    extract_lp_block_witness,
    refute_order_boundedness,
    verify_block_witness,
    verify_jump_witness,
)

__version__ = "0.1.0"
