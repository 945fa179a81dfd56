"""
Streaming mean/variance (Welford) with an associative merge, plus step and cap counters.
"""
import math
from dataclasses import dataclass, replace

from .estimators.base import TerminationCause

Z_95 = 1.96


@dataclass
class SummaryStats:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    steps_total: int = 0
    max_steps: int = 0
    capped_count: int = 0

    def push(self, value, steps=0, capped=False):
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        self.steps_total += steps
        if steps > self.max_steps:
            self.max_steps = steps
        if capped:
            self.capped_count += 1
        return self

    def add(self, result):
        return self.push(result.value, result.steps, result.cause is TerminationCause.CAPPED)

    def merge(self, other):
        """Combine two disjoint samples (Chan et al. pairwise update); returns a new object."""
        if other.n == 0:
            return replace(self)
        if self.n == 0:
            return replace(other)

        n = self.n + other.n
        delta = other.mean - self.mean
        return SummaryStats(
            n=n,
            mean=self.mean + delta * other.n / n,
            m2=self.m2 + other.m2 + delta * delta * self.n * other.n / n,
            steps_total=self.steps_total + other.steps_total,
            max_steps=max(self.max_steps, other.max_steps),
            capped_count=self.capped_count + other.capped_count,
        )

    @classmethod
    def from_values(cls, values):
        stats = cls()
        for v in values:
            stats.push(float(v))
        return stats

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    @property
    def std(self):
        return math.sqrt(self.variance) if self.n > 1 else math.nan

    @property
    def std_err(self):
        return self.std / math.sqrt(self.n) if self.n > 1 else math.nan

    @property
    def cv(self):
        """std / mean; None when the mean is 0 (reported as NA)."""
        if self.mean == 0 or self.n < 2:
            return None
        return self.std / self.mean

    @property
    def ci_lo(self):
        return self.mean - Z_95 * self.std_err

    @property
    def ci_hi(self):
        return self.mean + Z_95 * self.std_err

    @property
    def mean_steps(self):
        return self.steps_total / self.n if self.n else math.nan
