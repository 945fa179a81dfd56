import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ConfigError, PreconditionError

TILT_BLOCK = 32


class TerminationCause(str, Enum):
    HIT = "hit"
    TRUNCATED = "truncated"
    CAPPED = "capped"


@dataclass(slots=True)
class ReplicationResult:
    value: float
    steps: int
    cause: TerminationCause
    log_lr_final: float = 0.0
    max_s: float = 0.0


@dataclass(frozen=True)
class SamplerConfig:
    """
    Knobs shared by all samplers.

    :param delta: perpetuity scale (barrier at D = 1)
    :param a: switch-off level of the state-independent sampler
    :param n_star: nominal continuation length after the switch-off; ceil(10 log(1/delta)) when None
    :param step_cap: hard cap on the steps of one replication
    :param d0: initial value of D (test hook)
    :param demo: allow the naive full-tilt sampler
    :param debug: check that D never decreases and that the Z recursion tracks (s, d)
    :param block: steps drawn per vectorized block
    """
    delta: float
    a: float = 0.9
    n_star: int | None = None
    step_cap: int = 1_000_000
    d0: float = 0.0
    demo: bool = False
    debug: bool = False
    block: int = 256

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must be in (0,1), got {self.delta}")
        if not 0 < self.a < 1:
            raise ConfigError(f"a must be in (0,1), got {self.a}")
        if self.n_star is None:
            object.__setattr__(self, "n_star", default_n_star(self.delta))
        if self.n_star < 1:
            raise ConfigError(f"n_star must be >= 1, got {self.n_star}")
        if self.step_cap < self.n_star:
            raise ConfigError(f"step_cap ({self.step_cap}) must be >= n_star ({self.n_star})")
        if self.block < 1:
            raise ConfigError(f"block must be >= 1, got {self.block}")


def default_n_star(delta, factor=10.0):
    return max(1, math.ceil(factor * math.log(1.0 / delta)))


class Estimator:
    """
    One-replication sampler. Subclasses implement ``replicate(rng)``.

    Instances only hold immutable inputs, so one instance serves any number of streams.
    """
    name = ""
    bias = ""
    needs_env = False
    needs_lyap = False

    def __init__(self, model, env=None, lyap=None, cfg=None):
        if cfg is None:
            raise PreconditionError(f"{type(self).__name__} needs a SamplerConfig")
        if self.needs_env and env is None:
            raise PreconditionError(f"{type(self).__name__} needs a TiltEnvelope")
        if self.needs_lyap and lyap is None:
            raise PreconditionError(f"{type(self).__name__} needs LyapunovParams")
        self.model = model
        self.env = env
        self.lyap = lyap
        self.cfg = cfg

    def replicate(self, rng):
        raise NotImplementedError


def advance(s, d, block, delta):
    """Running S and D along a path block starting from (s, d)."""
    S = s + np.cumsum(block.gammas)
    with np.errstate(over="ignore", invalid="ignore"):
        D = d + delta * np.cumsum(block.rewards * np.exp(S))
    return S, D


def first_index(mask):
    """Index of the first True entry, or None."""
    idx = int(np.argmax(mask))
    return idx if mask[idx] else None


def check_monotone(d, D):
    if np.any(np.diff(np.concatenate(([d], D))) < 0):
        raise AssertionError("D decreased along the path")
