"""Fixed points of two-sided smoothing transforms: moment analysis,
population simulation, tail asymptotics, and the second-moment-boundary
construction."""

from .errors import (
    ConfigError,
    DegenerateSamplesError,
    DivergenceError,
    DomainError,
    EmptyInputError,
    ExtrapolationUnstableError,
    GridError,
    InapplicableError,
    InvalidParameterError,
    MeanEquationError,
    MissingMeanError,
    MonteCarloInconclusiveError,
    NoGammaError,
    NoRootError,
    ParseError,
    PoolFormatError,
    PreconditionFailedError,
    SingleRootError,
    SmoothtailError,
    TreeBudgetExceededError,
    ValidationError,
    WindowTooSmallError,
)
from .weight_models import (
    NDiscrete,
    NFixed,
    NGeometric,
    QLinked,
    QNormal,
    QPareto,
    QPointMass,
    QUniform,
    TFiniteMixture,
    TPointMass,
    TSignedLognormal,
    TUniform,
    WeightModel,
    canonicalize,
    model_from_dict,
    model_to_dict,
    sample_weights,
    validate_model,
)
from .moments import (
    AssumptionCheck,
    AssumptionReport,
    GammaResult,
    MCValue,
    MeanSolution,
    MomentProfile,
    RootPair,
    check_assumptions,
    estimate_domain,
    eval_m,
    eval_m_derivative,
    eval_m_epsilon,
    eval_mu,
    find_gamma,
    find_roots,
    moment_profile,
    solve_mean_equation,
)
from .engine import (
    ConvergenceDiagnostics,
    DegeneracyResult,
    SamplePool,
    detect_degeneracy,
    export_pool_csv,
    init_pool,
    iterate_once,
    read_pool,
    resolve_initial_value,
    run_to_convergence,
    sample_branching_tree,
    write_pool,
)
from .tails import (
    HillEstimate,
    IdentityReport,
    IdentityRow,
    KEstimate,
    KGridSpec,
    SubadditiveBoundResult,
    TailScanResult,
    TransformSample,
    VarianceIdentityResult,
    Verdict,
    check_identity,
    default_hill_k,
    draw_transform_sample,
    empirical_tail,
    estimate_G,
    estimate_K,
    hill_curve,
    hill_estimate,
    positivity_verdict,
    subadditive_bound_check,
    tail_limit_scan,
    variance_identity_check,
)
from .special import (
    CharfnPoint,
    FixedPointCheckRow,
    MixtureSolution,
    SecondMomentDiagnostic,
    alpha2_charfn,
    alpha2_sample,
    build_alpha2_solution,
    second_moment_rule,
    solve_squared_W,
    squared_model,
    verify_alpha2_fixed_point,
)
from .config import (
    DEFAULT_SEED,
    RunConfig,
    config_to_dict,
    dumps_toml,
    load_config,
    parse_config,
    resolve_seed,
)
from .rng import stream

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SmoothtailError",
    "InvalidParameterError",
    "DomainError",
    "NoRootError",
    "SingleRootError",
    "MonteCarloInconclusiveError",
    "NoGammaError",
    "MeanEquationError",
    "MissingMeanError",
    "DivergenceError",
    "TreeBudgetExceededError",
    "EmptyInputError",
    "DegenerateSamplesError",
    "GridError",
    "ExtrapolationUnstableError",
    "WindowTooSmallError",
    "InapplicableError",
    "PreconditionFailedError",
    "PoolFormatError",
    "ConfigError",
    "ParseError",
    "ValidationError",
    # weight models
    "WeightModel",
    "NFixed",
    "NGeometric",
    "NDiscrete",
    "TSignedLognormal",
    "TPointMass",
    "TUniform",
    "TFiniteMixture",
    "QPointMass",
    "QNormal",
    "QUniform",
    "QPareto",
    "QLinked",
    "validate_model",
    "canonicalize",
    "sample_weights",
    "model_to_dict",
    "model_from_dict",
    # moments
    "MCValue",
    "RootPair",
    "GammaResult",
    "MeanSolution",
    "MomentProfile",
    "AssumptionCheck",
    "AssumptionReport",
    "eval_m",
    "eval_mu",
    "eval_m_epsilon",
    "eval_m_derivative",
    "find_roots",
    "find_gamma",
    "solve_mean_equation",
    "estimate_domain",
    "moment_profile",
    "check_assumptions",
    # engine
    "SamplePool",
    "ConvergenceDiagnostics",
    "DegeneracyResult",
    "init_pool",
    "resolve_initial_value",
    "iterate_once",
    "run_to_convergence",
    "sample_branching_tree",
    "detect_degeneracy",
    "write_pool",
    "read_pool",
    "export_pool_csv",
    # tails
    "TransformSample",
    "KGridSpec",
    "KEstimate",
    "HillEstimate",
    "TailScanResult",
    "IdentityRow",
    "IdentityReport",
    "VarianceIdentityResult",
    "SubadditiveBoundResult",
    "Verdict",
    "empirical_tail",
    "default_hill_k",
    "hill_estimate",
    "hill_curve",
    "estimate_G",
    "draw_transform_sample",
    "estimate_K",
    "check_identity",
    "tail_limit_scan",
    "variance_identity_check",
    "subadditive_bound_check",
    "positivity_verdict",
    # special
    "MixtureSolution",
    "CharfnPoint",
    "FixedPointCheckRow",
    "SecondMomentDiagnostic",
    "squared_model",
    "solve_squared_W",
    "build_alpha2_solution",
    "alpha2_sample",
    "alpha2_charfn",
    "verify_alpha2_fixed_point",
    "second_moment_rule",
    # config
    "DEFAULT_SEED",
    "RunConfig",
    "parse_config",
    "load_config",
    "config_to_dict",
    "dumps_toml",
    "resolve_seed",
    # rng
    "stream",
]
