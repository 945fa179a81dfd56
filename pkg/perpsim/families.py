"""
Increment (gamma) and reward (lambda) laws with closed-form log-moment-generating functions.

Every family draws vectors from a ``numpy.random.Generator``; scalar draws are served
from those vectors by the tilting module.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, polygamma

from .errors import DomainError, ModelError

LOG_2 = math.log(2.0)
GAMMALN_HALF = float(gammaln(0.5))


@dataclass(frozen=True)
class LogChiSquareIncrement:
    """
    gamma = log c + log W with W ~ chi-square(1).

    Tilting by theta turns W into Gamma(shape theta + 1/2, scale 2).
    """
    c: float
    tag = "logchi2"

    def __post_init__(self):
        if not self.c > 0:
            raise ModelError(f"log-chi-square constant must be positive, got {self.c}")

    @property
    def domain(self):
        return (-0.5, math.inf)

    def cgf(self, theta):
        check_domain(self, theta)
        return float(theta * math.log(2.0 * self.c) + gammaln(theta + 0.5) - GAMMALN_HALF)

    def tilted_mean(self, theta):
        return float(math.log(self.c) + digamma(theta + 0.5) + LOG_2)

    def variance(self):
        return float(polygamma(1, 0.5))

    def sample(self, gen, size):
        return self.sample_tilted(gen, 0.0, size)

    def sample_tilted(self, gen, theta, size):
        return math.log(self.c) + np.log(gen.gamma(theta + 0.5, 2.0, size))

    def describe(self):
        return f"logchi2:{self.c!r}"


@dataclass(frozen=True)
class NormalIncrement:
    """gamma ~ normal(mean, sigma^2); tilting shifts the mean by theta * sigma^2."""
    mean: float
    sigma: float
    tag = "normal"

    def __post_init__(self):
        if self.sigma < 0:
            raise ModelError(f"normal sigma must be non-negative, got {self.sigma}")

    @property
    def domain(self):
        return (-math.inf, math.inf)

    def cgf(self, theta):
        return self.mean * theta + 0.5 * self.sigma ** 2 * theta ** 2

    def tilted_mean(self, theta):
        return self.mean + theta * self.sigma ** 2

    def variance(self):
        return self.sigma ** 2

    def sample(self, gen, size):
        return self.sample_tilted(gen, 0.0, size)

    def sample_tilted(self, gen, theta, size):
        if self.sigma == 0:
            return np.full(size, self.mean, dtype=float)
        return gen.normal(self.tilted_mean(theta), self.sigma, size)

    def describe(self):
        return f"normal:{self.mean!r}:{self.sigma!r}"


@dataclass(frozen=True)
class ConstantReward:
    value: float
    tag = "const"

    @property
    def is_constant(self):
        return True

    def moment(self, alpha):
        if self.value == 0:
            return 0.0
        return self.value ** alpha

    def min_value(self):
        return self.value

    def sample(self, gen, size):
        return np.full(size, self.value, dtype=float)

    def describe(self):
        return f"const:{self.value!r}"


@dataclass(frozen=True)
class LognormalReward:
    mu: float
    sigma: float
    tag = "lognormal"

    def __post_init__(self):
        if self.sigma < 0:
            raise ModelError(f"lognormal sigma must be non-negative, got {self.sigma}")

    @property
    def is_constant(self):
        return False

    def moment(self, alpha):
        return math.exp(alpha * self.mu + 0.5 * alpha ** 2 * self.sigma ** 2)

    def min_value(self):
        return 0.0

    def sample(self, gen, size):
        return gen.lognormal(self.mu, self.sigma, size)

    def describe(self):
        return f"lognormal:{self.mu!r}:{self.sigma!r}"


IncrementFamily = LogChiSquareIncrement | NormalIncrement
RewardFamily = ConstantReward | LognormalReward


def check_domain(family, theta):
    lo, hi = family.domain
    if not lo < theta < hi:
        raise DomainError(f"theta={theta!r} outside the CGF domain ({lo}, {hi}) of {family.describe()}")


def parse_increment(text) -> IncrementFamily:
    """``logchi2:C`` or ``normal:MEAN:SIGMA``."""
    tag, *args = text.strip().split(":")
    try:
        values = [float(v) for v in args]
    except ValueError as e:
        raise ModelError(f"bad increment family {text!r}: {e}") from e

    if tag == "logchi2" and len(values) == 1:
        return LogChiSquareIncrement(values[0])
    if tag == "normal" and len(values) == 2:
        return NormalIncrement(values[0], values[1])
    raise ModelError(f"bad increment family {text!r}; expected logchi2:C or normal:MEAN:SIGMA")


def parse_reward(text) -> RewardFamily:
    """``const:W`` or ``lognormal:MU:SIGMA``."""
    tag, *args = text.strip().split(":")
    try:
        values = [float(v) for v in args]
    except ValueError as e:
        raise ModelError(f"bad reward family {text!r}: {e}") from e

    if tag == "const" and len(values) == 1:
        return ConstantReward(values[0])
    if tag == "lognormal" and len(values) == 2:
        return LognormalReward(values[0], values[1])
    raise ModelError(f"bad reward family {text!r}; expected const:W or lognormal:MU:SIGMA")
