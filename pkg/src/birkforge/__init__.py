"""Exact-arithmetic Birkhoff normal forms and divergence certificates.

The pipeline: truncated series over Gaussian rationals (series), implicit
symplectic maps from mixed generating functions (transform), degree-by-degree
normalization with full trace (normalizer), small-divisor floors and
Liouville stages (divisors), the sparse divergent Hamiltonian and its
certificate (forge), and exact identity verification (verify). The cli
module wires file I/O around all of it.
"""

from .errors import (
    BirkforgeError,
    GrowthCheckFailed,
    HypothesisViolated,
    NonRealResidual,
    NormalizationOrderInfeasible,
    OrderExceedsCertification,
    ResonanceAtOrder,
    SearchBudgetExhausted,
    SeriesFormatError,
    StageCertificateInvalid,
    SymmetryViolated,
    TauTooSmall,
)
from .rationals import (
    GaussianRational,
    GR_I,
    GR_ONE,
    GR_ZERO,
    factorial_exact,
    format_rational,
    mpq_to_sci,
    parse_rational,
    to_mpq,
)
from .series import (
    ExponentPair,
    TruncatedSeries,
    dumps_series,
    from_coefficients,
    loads_series,
    monomial,
    read_series,
    variable,
    write_series,
    zero_series,
)
from .transform import (
    GeneratingFunction,
    LinearSubstitution,
    MixedMapSolution,
    apply_linear,
    canonicity_check,
    forward_map,
    lift_polynomial,
    pushforward,
    solve_mixed_map,
    substitute,
)
from .normalizer import (
    ALL_AT_ONCE,
    DEGREE_BY_DEGREE,
    FrequencyVector,
    NormalForm,
    NormalizationTrace,
    TraceEntry,
    diagonal_coefficient,
    normalize,
    residual_at,
    validate_real_symmetric,
)
from .divisors import (
    DivisorFloor,
    LiouvilleStage,
    build_liouville_stages,
    divisor_floor,
    loads_stages,
    stage_inequality_margin,
    verify_stage_chain,
)
from .forge import (
    CoefficientChoice,
    DivergenceCertificate,
    DivergenceStageRecord,
    ForgeResult,
    GrowthReport,
    choose_coefficient,
    forge,
    growth_report,
)
from .verify import (
    IdentityReport,
    verify_quadratic_correction,
    verify_reality_restriction,
    verify_singular_coefficient,
    verify_uniqueness,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_AT_ONCE",
    "BirkforgeError",
    "CoefficientChoice",
    "DEGREE_BY_DEGREE",
    "DivergenceCertificate",
    "DivergenceStageRecord",
    "DivisorFloor",
    "ExponentPair",
    "ForgeResult",
    "FrequencyVector",
    "GR_I",
    "GR_ONE",
    "GR_ZERO",
    "GaussianRational",
    "GeneratingFunction",
    "GrowthCheckFailed",
    "GrowthReport",
    "HypothesisViolated",
    "IdentityReport",
    "LinearSubstitution",
    "LiouvilleStage",
    "MixedMapSolution",
    "NonRealResidual",
    "NormalForm",
    "NormalizationOrderInfeasible",
    "NormalizationTrace",
    "OrderExceedsCertification",
    "ResonanceAtOrder",
    "SearchBudgetExhausted",
    "SeriesFormatError",
    "StageCertificateInvalid",
    "SymmetryViolated",
    "TauTooSmall",
    "TraceEntry",
    "TruncatedSeries",
    "apply_linear",
    "build_liouville_stages",
    "canonicity_check",
    "choose_coefficient",
    "diagonal_coefficient",
    "divisor_floor",
    "dumps_series",
    "factorial_exact",
    "forge",
    "format_rational",
    "forward_map",
    "from_coefficients",
    "growth_report",
    "lift_polynomial",
    "loads_series",
    "loads_stages",
    "monomial",
    "mpq_to_sci",
    "normalize",
    "parse_rational",
    "pushforward",
    "read_series",
    "residual_at",
    "solve_mixed_map",
    "stage_inequality_margin",
    "substitute",
    "to_mpq",
    "validate_real_symmetric",
    "variable",
    "verify_quadratic_correction",
    "verify_reality_restriction",
    "verify_singular_coefficient",
    "verify_stage_chain",
    "verify_uniqueness",
    "write_series",
    "zero_series",
]
