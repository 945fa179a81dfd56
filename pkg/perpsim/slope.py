"""
Log-log slope of the state-independent estimates against delta.

phi(delta) behaves like c* delta^theta*, so the fitted slope estimates theta* and each point
gives an estimate of c*.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, PreconditionError
from .estimators import estimate_cstar
from .log import get_logger
from .runner import CHUNK_SIZE, prepare_run, simulate
from .spectral import find_theta_star

logger = get_logger(__name__)

MIN_POINTS = 3
MIN_DECADES = 2.0


@dataclass(frozen=True)
class SlopePoint:
    delta: float
    estimate: float
    std_err: float
    c_star: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    std_err: float
    intercept: float
    points: tuple
    theta_star: float = math.nan

    @property
    def relative_error(self):
        return abs(self.slope - self.theta_star) / self.theta_star


def slope_check(model, deltas, reps, seed=0, workers=1, a=0.9, delta_map=None, chunk_size=CHUNK_SIZE):
    """
    Fit log phi_hat = intercept + slope * log delta by weighted least squares.

    Each point is weighted by phi_hat / SE, the inverse of its standard error on the log scale.

    :param deltas: at least three levels spanning two decades
    :param delta_map: maps a level to the perpetuity delta (ARCH scenarios); identity when None
    :raises PreconditionError: too few deltas or too narrow a span
    :raises EstimationError: some phi_hat is 0
    """
    deltas = sorted(float(d) for d in deltas)
    if len(deltas) < MIN_POINTS:
        raise PreconditionError(f"slope needs at least {MIN_POINTS} deltas, got {len(deltas)}")
    if math.log10(deltas[-1] / deltas[0]) < MIN_DECADES:
        raise PreconditionError(f"deltas must span at least {MIN_DECADES:g} decades, got {deltas[0]:g}..{deltas[-1]:g}")
    if reps < 2:
        raise PreconditionError(f"slope needs reps >= 2, got {reps}")

    env = find_theta_star(model)
    points = []
    for delta in deltas:
        effective = delta_map(delta) if delta_map else delta
        prepared = prepare_run(model, "si", effective, a=a, env=env, n_star_delta=delta)
        stats = simulate(prepared, reps, seed, workers, chunk_size)
        if not stats.mean > 0:
            raise EstimationError(f"phi_hat = 0 at delta={delta:g}; increase reps")
        points.append(
            SlopePoint(
                delta=delta,
                estimate=stats.mean,
                std_err=stats.std_err,
                c_star=estimate_cstar(stats.mean, delta, env.theta_star),
            )
        )
        logger.info("delta=%g phi_hat=%.6g se=%.3g", delta, stats.mean, stats.std_err)

    x = np.log([p.delta for p in points])
    y = np.log([p.estimate for p in points])
    rel_se = np.array([p.std_err / p.estimate for p in points])
    rel_se = np.maximum(rel_se, np.finfo(float).eps)

    coef, cov = np.polyfit(x, y, 1, w=1.0 / rel_se, cov="unscaled")
    fit = SlopeFit(
        slope=float(coef[0]),
        std_err=float(math.sqrt(cov[0, 0])),
        intercept=float(coef[1]),
        points=tuple(points),
        theta_star=env.theta_star,
    )
    logger.info("slope = %.6g +- %.3g (theta* = %.6g)", fit.slope, fit.std_err, fit.theta_star)
    return fit


def slope_for_scenario(sc, workers=1):
    """slope_check over the scenario's ``deltas`` (SI estimator, the scenario's seed and reps)."""
    if sc.estimator != "si":
        logger.info("slope always uses the state-independent sampler; ignoring estimator=%s", sc.estimator)
    if sc.reps is None:
        raise PreconditionError(f"scenario {sc.label}: slope needs reps, not budget_ms")
    deltas = sc.deltas or ([sc.delta] if sc.delta is not None else [])
    return slope_check(
        sc.build_model(),
        deltas,
        sc.reps,
        seed=sc.seed,
        workers=workers,
        a=sc.a,
        delta_map=sc.perpetuity_delta,
    )
