"""
Constants, Lyapunov function and region classification of the state-dependent sampler.

The sampler state is (x, z) with z = (1 - d) * exp(-s). It tilts while z exceeds the state
threshold c_delta * delta * (u*(x) u_shift(x))^(1/kappa), runs the nominal dynamics below it and
stops once z <= 0. Here kappa = 2 theta* - rho and rho = 1 / log(1/delta).
"""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import LyapunovRefusal, PreconditionError
from .log import get_logger
from .spectral import psi_second_sup
from .tilting import StepSampler

logger = get_logger(__name__)

MIN_DRIFT_SAMPLES = 100_000
SHRINK = 0.45


class Region(Enum):
    TILT = "C"
    NOMINAL = "C'"
    TERMINAL = "B"


@dataclass(frozen=True, eq=False)
class LyapunovParams:
    """
    Constants of the state-dependent sampler at one delta.

    ``m`` and ``M`` are derived from the eigenvectors when not given. ``guaranteed`` is False
    when the drift budget was allowed to exceed 1.
    """
    delta: float
    rho: float
    c_delta: float
    theta_star: float
    u_star: np.ndarray
    u_shift: np.ndarray
    b0: float = 1.0
    b1: float = math.nan
    b2: float = math.nan
    B1: float = math.nan
    B2: float = math.nan
    mu: float = math.nan
    m: float | None = None
    M: float | None = None
    budget: float = math.nan
    guaranteed: bool = True
    b2_method: str = ""
    log_weight: np.ndarray = field(init=False, repr=False)
    log_thresholds: np.ndarray = field(init=False, repr=False)
    threshold_values: tuple = field(init=False, repr=False)

    def __post_init__(self):
        u_star = np.asarray(self.u_star, dtype=float)
        u_shift = np.asarray(self.u_shift, dtype=float)
        log_weight = np.log(u_star) + np.log(u_shift)
        weights = np.exp(log_weight / self.kappa)
        object.__setattr__(self, "u_star", u_star)
        object.__setattr__(self, "u_shift", u_shift)
        object.__setattr__(self, "log_weight", log_weight)
        object.__setattr__(
            self,
            "log_thresholds",
            math.log(self.c_delta) + math.log(self.delta) + log_weight / self.kappa,
        )
        object.__setattr__(self, "threshold_values", tuple(np.exp(self.log_thresholds).tolist()))
        if self.m is None:
            object.__setattr__(self, "m", float(weights.min()))
        if self.M is None:
            object.__setattr__(self, "M", float(weights.max()))

    @property
    def kappa(self):
        return 2.0 * self.theta_star - self.rho

    @property
    def thresholds(self):
        return np.exp(self.log_thresholds)

    def as_dict(self):
        return {
            "delta": self.delta,
            "rho": self.rho,
            "c_delta": self.c_delta,
            "theta_star": self.theta_star,
            "b0": self.b0,
            "b1": self.b1,
            "b2": self.b2,
            "b2_method": self.b2_method,
            "B1": self.B1,
            "B2": self.B2,
            "mu": self.mu,
            "m": self.m,
            "M": self.M,
            "budget": self.budget,
            "guaranteed": self.guaranteed,
            "thresholds": self.thresholds.tolist(),
        }


@dataclass(frozen=True)
class RecipeConstants:
    b0: float
    b1: float
    b2: float
    B1: float
    B2: float
    b2_method: str

    def budget(self, rho, theta_star, mu):
        kappa = 2.0 * theta_star - rho
        if self.B1 * rho >= 1.0:
            return math.inf
        return (
            self.b0 * self.b2 * rho / self.B2 ** kappa
            + (1.0 - rho * mu + self.b1 * rho * rho) / (1.0 - self.B1 * rho) ** kappa
        )


def _reward_moment_bound(model, env):
    theta = env.theta_star
    p = 2.0 * theta
    chi = np.array([f.cgf(theta) for f in model.increments])

    if all(r.is_constant for r in model.rewards):
        reward_term = max(max(r.moment(p) for r in model.rewards), 1.0)
        if model.n_states == 1:
            return reward_term, "single state, constant reward"
        expected = float((model.kernel @ np.exp(chi)).max())
        return reward_term * expected, "constant rewards"

    per_state = np.array([max(r.moment(p), 1.0) for r in model.rewards]) * np.maximum(np.exp(chi), 1.0)
    return float((model.kernel @ per_state).max()), "moment bound"


def recipe_constants(model, env, grid_n=256):
    theta, mu = env.theta_star, env.mu
    b0 = 1.0
    b1 = psi_second_sup(model, theta, grid_n)
    b2, method = _reward_moment_bound(model, env)
    B1 = SHRINK * mu / (2.0 * theta)
    B2 = max((b0 * b2 / (SHRINK * mu)) ** (1.0 / theta), 1.0)
    return RecipeConstants(b0=b0, b1=b1, b2=b2, B1=B1, B2=B2, b2_method=method)


def select_params(model, env, delta, grid_n=256, enforce_budget=True, constants=None):
    """
    Build the constants of the state-dependent sampler at ``delta``.

    :param enforce_budget: refuse when the drift-budget inequality fails; otherwise return
        params flagged ``guaranteed=False``
    :param constants: precomputed RecipeConstants (they do not depend on delta)
    :raises LyapunovRefusal: rho >= theta*, or the budget fails while enforced
    """
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must be in (0,1), got {delta}")

    theta, mu = env.theta_star, env.mu
    rho = 1.0 / math.log(1.0 / delta)
    constants = constants or recipe_constants(model, env, grid_n)

    if not rho < theta:
        raise LyapunovRefusal(
            f"delta={delta:g} too large for the state-dependent sampler (rho={rho:.4g} >= theta*={theta:.4g})",
            delta=delta,
            largest_admissible_delta=largest_admissible_delta(model, env, constants=constants),
        )

    budget = constants.budget(rho, theta, mu)
    guaranteed = budget <= 1.0
    if not guaranteed and enforce_budget:
        raise LyapunovRefusal(
            f"delta={delta:g} too large for guaranteed efficiency (drift budget {budget:.4g} > 1); use SI or crude",
            delta=delta,
            largest_admissible_delta=largest_admissible_delta(model, env, constants=constants),
        )

    kappa = 2.0 * theta - rho
    c_delta = (constants.B2 / constants.B1) * rho ** (-(1.0 + 1.0 / kappa))
    shifted = env.with_shift(rho)

    params = LyapunovParams(
        delta=delta,
        rho=rho,
        c_delta=c_delta,
        theta_star=theta,
        u_star=env.u_star,
        u_shift=shifted.u_shift,
        b0=constants.b0,
        b1=constants.b1,
        b2=constants.b2,
        B1=constants.B1,
        B2=constants.B2,
        mu=mu,
        budget=budget,
        guaranteed=guaranteed,
        b2_method=constants.b2_method,
    )

    if guaranteed:
        logger.info("Lyapunov params at delta=%g: rho=%.6g c_delta=%.6g budget=%.6g", delta, rho, c_delta, budget)
    else:
        logger.warning(
            "drift budget %.4g > 1 at delta=%g; state-dependent sampler runs without the efficiency guarantee",
            budget,
            delta,
        )
    return params


def largest_admissible_delta(model, env, grid_n=256, constants=None):
    """
    Largest delta whose drift budget is <= 1, by a halving scan on rho followed by bisection.

    Returns None if no rho down to 1e-6 is admissible.
    """
    theta, mu = env.theta_star, env.mu
    constants = constants or recipe_constants(model, env, grid_n)

    def admissible(rho):
        return rho < theta and constants.budget(rho, theta, mu) <= 1.0

    bad = min(theta, 1.0 / constants.B1) * (1.0 - 1e-9)
    if admissible(bad):
        return math.exp(-1.0 / bad)

    good = bad / 2.0
    while not admissible(good):
        bad = good
        good /= 2.0
        if good < 1e-6:
            return None

    for _ in range(80):
        mid = 0.5 * (good + bad)
        if admissible(mid):
            good = mid
        else:
            bad = mid
    return math.exp(-1.0 / good)


def h_value(p, s, d, x):
    if d >= 1.0:
        return 1.0
    log_h = p.kappa * (math.log(p.c_delta) + s + math.log(p.delta) - math.log1p(-d)) + p.log_weight[x]
    return 1.0 if log_h >= 0.0 else math.exp(log_h)


def log_h_value(p, s, d, x):
    """Vectorized log h; arrays broadcast against each other."""
    s, d, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(d, dtype=float), np.asarray(x))
    alive = d < 1.0
    one_minus = np.where(alive, 1.0 - d, 1.0)
    log_h = p.kappa * (math.log(p.c_delta) + s + math.log(p.delta) - np.log(one_minus)) + p.log_weight[x]
    return np.where(alive, np.minimum(log_h, 0.0), 0.0)


def classify(p, x, z):
    if z <= 0.0:
        return Region.TERMINAL
    if z > p.threshold_values[x]:
        return Region.TILT
    return Region.NOMINAL


@dataclass(frozen=True)
class DriftCheck:
    probe: tuple
    ratio: float
    std_err: float
    passed: bool


def random_probes(rng, p, k, n_states=None):
    """k states (s, d, x) inside C, with z between e^0.1 and e^6 times the threshold."""
    gen = rng.generator
    n_states = n_states or len(p.u_star)
    probes = []
    for _ in range(k):
        x = int(gen.integers(n_states))
        d = float(gen.uniform(0.0, 0.9))
        log_z = float(p.log_thresholds[x]) + float(gen.uniform(0.1, 6.0))
        probes.append((math.log1p(-d) - log_z, d, x))
    return probes


def verify_drift(rng, model, env, p, probe_states, n=MIN_DRIFT_SAMPLES):
    """
    Monte Carlo check of E[r(w, W1) h(W1)] <= h(w) for probes w inside C.

    W1 is one nominal step from w and r = u*(x)/u*(y) * exp(-theta* gamma).
    """
    if n < MIN_DRIFT_SAMPLES:
        raise PreconditionError(f"n={n} too small; verify_drift needs n >= {MIN_DRIFT_SAMPLES}")
    for s, d, x in probe_states:
        if d >= 1.0 or classify(p, x, (1.0 - d) * math.exp(-s)) is not Region.TILT:
            raise PreconditionError(f"probe (s={s:g}, d={d:g}, x={x}) is not inside C")

    sampler = StepSampler(rng, model)
    log_u = np.log(env.u_star)
    checks = []
    for s, d, x in probe_states:
        batch = sampler.nominal_batch(x, n)
        s1 = s + batch.gammas
        with np.errstate(over="ignore"):
            d1 = d + p.delta * batch.rewards * np.exp(s1)
        log_r = -p.theta_star * batch.gammas + log_u[x] - log_u[batch.states]
        values = np.exp(log_r + log_h_value(p, s1, d1, batch.states) - log_h_value(p, s, d, x))
        ratio = float(values.mean())
        std_err = float(values.std(ddof=1) / math.sqrt(n))
        checks.append(DriftCheck(probe=(s, d, x), ratio=ratio, std_err=std_err, passed=ratio <= 1.0 + 3.0 * std_err))
    return checks
