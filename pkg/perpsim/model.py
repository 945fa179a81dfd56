"""
Markov-modulated perpetuity models.

A model is a finite irreducible Markov chain with kernel K(x, y). On every transition into a
state y the log-discount S moves by gamma(y) and the perpetuity collects the reward
lambda(y) * delta * exp(S).

States are addressed by integer index; ``labels`` only serve display.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .families import (
    ConstantReward,
    IncrementFamily,
    LogChiSquareIncrement,
    NormalIncrement,
    RewardFamily,
    check_domain,
    parse_increment,
    parse_reward,
)

ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """
    Immutable model description, safe to share across worker processes.

    :param kernel: row-stochastic transition matrix
    :param increments: per-state increment family (law of gamma on entering the state)
    :param rewards: per-state reward family
    :param labels: display names of the states
    :param initial_state: index of x0
    :param name: short model name used in CSV rows
    :param params: constructor parameters (used for metadata and the ARCH level mapping)
    """
    kernel: np.ndarray
    increments: tuple[IncrementFamily, ...]
    rewards: tuple[RewardFamily, ...]
    labels: tuple = ()
    initial_state: int = 0
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] < 1:
            raise ModelError(f"kernel must be a non-empty square matrix, got shape {kernel.shape}")
        n = kernel.shape[0]
        if len(self.increments) != n or len(self.rewards) != n:
            raise ModelError(
                f"{n} states but {len(self.increments)} increment and {len(self.rewards)} reward families"
            )
        if not 0 <= self.initial_state < n:
            raise ModelError(f"initial_state {self.initial_state} outside 0..{n - 1}")

        kernel.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "increments", tuple(self.increments))
        object.__setattr__(self, "rewards", tuple(self.rewards))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i + 1) for i in range(n)))

    @property
    def n_states(self):
        return self.kernel.shape[0]

    def cgf_domain(self):
        lo = max(f.domain[0] for f in self.increments)
        hi = min(f.domain[1] for f in self.increments)
        return lo, hi

    def describe(self):
        return {
            "name": self.name,
            "kernel": self.kernel.tolist(),
            "increments": [f.describe() for f in self.increments],
            "rewards": [r.describe() for r in self.rewards],
            "initial_state": self.initial_state,
            **self.params,
        }


def make_arch1(alpha0, alpha1):
    """
    Stationary ARCH(1) as a single-state perpetuity: reward alpha0, increment log alpha1 + log chi2.

    The ARCH level 1/delta corresponds to the perpetuity level alpha1/delta; that mapping is
    done by the runner, not here.
    """
    if not alpha0 > 0:
        raise ModelError(f"parameter out of range: alpha0={alpha0} must be > 0")
    if not 0 < alpha1 < 1:
        raise ModelError(f"parameter out of range: alpha1={alpha1} must be in (0,1)")

    return ModelSpec(
        kernel=[[1.0]],
        increments=(LogChiSquareIncrement(alpha1),),
        rewards=(ConstantReward(alpha0),),
        labels=("s",),
        name="arch1",
        params={"alpha0": alpha0, "alpha1": alpha1},
    )


def make_two_state_demo():
    return ModelSpec(
        kernel=[[0.5, 0.5], [1.0, 0.0]],
        increments=(LogChiSquareIncrement(2.0 / 3.0), LogChiSquareIncrement(3.0 / 4.0)),
        rewards=(ConstantReward(1.0), ConstantReward(2.0)),
        labels=("1", "2"),
        name="two_state",
    )


def make_normal_walk(mu0, sigma=1.0, reward=1.0):
    """Single-state walk with gamma ~ normal(-mu0, sigma^2); theta* = 2 mu0 / sigma^2."""
    if not mu0 > 0:
        raise ModelError(f"parameter out of range: mu0={mu0} must be > 0")
    if not sigma > 0:
        raise ModelError(f"parameter out of range: sigma={sigma} must be > 0")

    return ModelSpec(
        kernel=[[1.0]],
        increments=(NormalIncrement(-mu0, sigma),),
        rewards=(ConstantReward(reward),),
        labels=("s",),
        name="normal",
        params={"mu0": mu0, "sigma": sigma},
    )


def make_custom(kernel, increments, rewards, labels=(), initial_state=0, name="custom"):
    """
    Build and validate an arbitrary model.

    ``increments`` and ``rewards`` may be family objects or their text forms
    (``logchi2:C``, ``normal:M:S``, ``const:W``, ``lognormal:M:S``).
    """
    increments = tuple(parse_increment(f) if isinstance(f, str) else f for f in increments)
    rewards = tuple(parse_reward(r) if isinstance(r, str) else r for r in rewards)
    model = ModelSpec(
        kernel=kernel,
        increments=increments,
        rewards=rewards,
        labels=tuple(labels),
        initial_state=initial_state,
        name=name,
    )

    violations = validate(model)
    if violations:
        raise ModelError("invalid model: " + "; ".join(violations))
    return model


def cgf(model, x, theta):
    return model.increments[x].cgf(theta)


def cgf_vector(model, theta):
    """chi(y, theta) for every state y."""
    for family in model.increments:
        check_domain(family, theta)
    return np.array([f.cgf(theta) for f in model.increments])


def is_irreducible(adjacency):
    """Reachability closure of a boolean adjacency matrix."""
    adjacency = np.asarray(adjacency, dtype=bool)
    n = adjacency.shape[0]
    reach = adjacency | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(n)) + 1)):
        reach = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
    return bool(reach.all())


def validate(model):
    """
    Check the model assumptions and return the violations as a list of messages (empty when valid).
    """
    violations = []
    K = model.kernel

    for i, row in enumerate(K):
        if (row < 0).any():
            violations.append(f"row {i} has negative entries")
        total = float(row.sum())
        if abs(total - 1.0) > ROW_TOL:
            violations.append(f"row {i} sums to {total:g}")

    if not is_irreducible(K > 0):
        violations.append("kernel is reducible")

    for label, family in zip(model.labels, model.rewards):
        if family.min_value() < 0:
            violations.append(f"state {label}: negative reward")

    for label, family in zip(model.labels, model.increments):
        lo, hi = family.domain
        if not (lo < 0 < hi):
            violations.append(f"state {label}: CGF domain does not contain a neighbourhood of 0")
        if not family.variance() > 0:
            violations.append(f"state {label}: degenerate increment")

    return violations
