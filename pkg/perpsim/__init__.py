from .errors import (
    ConfigError,
    ConvergenceError,
    CramerConditionError,
    DomainError,
    EstimationError,
    LyapunovRefusal,
    ModelError,
    NumericError,
    PerpsimError,
    PreconditionError,
    ReducibleMatrixError,
)
from .estimators import (
    SamplerConfig,
    crude,
    estimate_cstar,
    load_estimator,
    naive_is,
    state_dependent,
    state_independent,
)
from .lyapunov import LyapunovParams, classify, select_params, verify_drift
from .model import ModelSpec, make_arch1, make_custom, make_normal_walk, make_two_state_demo, validate
from .parser import PerpConfigParser, Scenario, load_config, parse_config
from .rng import RngStream
from .runner import PerpRunner, emit_csv, run_scenario
from .slope import SlopeFit, slope_check
from .spectral import TiltEnvelope, find_theta_star, principal_eig, psi
from .stats import SummaryStats

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "CramerConditionError",
    "DomainError",
    "EstimationError",
    "LyapunovParams",
    "LyapunovRefusal",
    "ModelError",
    "ModelSpec",
    "NumericError",
    "PerpConfigParser",
    "PerpRunner",
    "PerpsimError",
    "PreconditionError",
    "ReducibleMatrixError",
    "RngStream",
    "SamplerConfig",
    "Scenario",
    "SlopeFit",
    "SummaryStats",
    "TiltEnvelope",
    "classify",
    "crude",
    "emit_csv",
    "estimate_cstar",
    "find_theta_star",
    "load_config",
    "load_estimator",
    "make_arch1",
    "make_custom",
    "make_normal_walk",
    "make_two_state_demo",
    "naive_is",
    "parse_config",
    "principal_eig",
    "psi",
    "run_scenario",
    "select_params",
    "slope_check",
    "state_dependent",
    "state_independent",
    "validate",
    "verify_drift",
]
