"""Numerical lab for SL(2,R) cocycles over irrational circle rotations."""

__version__ = "0.1.0"

from .linalg import (  # noqa: F401
    ContractViolation,
    DomainError,
    Mat2,
    RZRDecomposition,
    diag,
    operator_norm,
    rot,
    rzr_decompose,
    rzr_of_matrix,
    zrz,
)
from .rotation import (  # noqa: F401
    BrjunoReport,
    ConditionAReport,
    RotationNumber,
    TruncationError,
    brjuno_sum,
    check_condition_A,
    circle_dist,
    convergents,
)
from .model import (  # noqa: F401
    BumpSpec,
    CocycleModel,
    HypothesisReport,
    ModelError,
    StepProfile,
    build_two_bump_model,
    constant_angle_model,
    model_from_file,
    phi_hat_eval,
    theta_eval,
    verify_hypotheses,
)
from .dynamics import (  # noqa: F401
    HyperbolicityCertificate,
    LyapunovEstimate,
    certify_uh,
    cocycle,
    lyapunov,
    oseledets_directions,
)
from .collisions import (  # noqa: F401
    CollisionTable,
    DominanceVerdict,
    FactorizedWord,
    collision_table,
    collision_time,
    critical_set,
    dominance,
    word,
)
from .resonance import (  # noqa: F401
    AsymptoticDiagnostics,
    BlockDecomposition,
    PreconditionError,
    ResonanceWindow,
    block_decompose,
    find_resonance,
    lemma3_validate,
    lemma4_validate,
    lemma5_validate,
    mu_of_F,
    select_n_pm,
)
