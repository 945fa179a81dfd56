import importlib

import numpy as np

from ..errors import ConfigError, EstimationError, PreconditionError
from .base import Estimator, ReplicationResult, SamplerConfig, TerminationCause, default_n_star
from .crude import CrudeEstimator, crude
from .naive import NaiveEstimator, naive_is
from .state_dependent import StateDependentEstimator, state_dependent
from .state_independent import StateIndependentEstimator, state_independent

ALIASES = {"si": "state_independent", "sd": "state_dependent"}
NAMES = ("crude", "naive", "si", "sd")


def load_estimator(name):
    """
    Resolve an estimator class from its short name (crude, naive, si, sd).

    Each module exports one class named after the module in CamelCase plus "Estimator".
    """
    module_name = ALIASES.get(name, name)
    try:
        module = importlib.import_module(f"perpsim.estimators.{module_name}")
    except ImportError as e:
        raise ConfigError(f"Estimator module {name} not found: {e}") from e

    class_name = "".join(part.capitalize() for part in module_name.split("_")) + "Estimator"
    cls = getattr(module, class_name, None)
    if cls is None:
        raise ConfigError(f"Class {class_name} not found in module {module_name}")
    return cls


def estimate_cstar(phi_hat, delta, theta_star):
    """c* estimate phi_hat / delta^theta*."""
    if not phi_hat > 0:
        raise EstimationError(f"phi_hat must be positive to estimate c*, got {phi_hat}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must be in (0,1), got {delta}")
    return phi_hat / delta ** theta_star


def running_cv(values, checkpoints):
    """CV of the first N values for every N in checkpoints (nan when the mean is 0)."""
    values = np.asarray(values, dtype=float)
    out = []
    for n in checkpoints:
        head = values[:n]
        mean = head.mean()
        out.append(float(head.std(ddof=1) / mean) if mean != 0 else float("nan"))
    return out


__all__ = [
    "CrudeEstimator",
    "Estimator",
    "NaiveEstimator",
    "ReplicationResult",
    "SamplerConfig",
    "StateDependentEstimator",
    "StateIndependentEstimator",
    "TerminationCause",
    "crude",
    "default_n_star",
    "estimate_cstar",
    "load_estimator",
    "naive_is",
    "running_cv",
    "state_dependent",
    "state_independent",
]
