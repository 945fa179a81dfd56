import math

import numpy as np
import pytest

from perpsim.estimators import ReplicationResult, TerminationCause
from perpsim.stats import SummaryStats


class TestSummaryStats:
    def test_single_pass(self):
        stats = SummaryStats.from_values([1.0, 2.0, 3.0, 4.0])
        assert stats.n == 4
        assert stats.mean == pytest.approx(2.5)
        assert stats.variance == pytest.approx(5.0 / 3.0)
        assert stats.std_err == pytest.approx(math.sqrt(5.0 / 3.0) / 2.0)
        assert stats.cv == pytest.approx(math.sqrt(5.0 / 3.0) / 2.5)
        assert stats.ci_lo == pytest.approx(2.5 - 1.96 * stats.std_err)
        assert stats.ci_hi == pytest.approx(2.5 + 1.96 * stats.std_err)

    def test_zero_mean_has_no_cv(self):
        stats = SummaryStats.from_values([0.0] * 10)
        assert stats.cv is None
        assert stats.std_err == 0.0

    def test_single_value(self):
        stats = SummaryStats.from_values([3.0])
        assert math.isnan(stats.std_err)
        assert stats.cv is None

    def test_merge_matches_single_pass(self):
        gen = np.random.default_rng(3)
        values = gen.lognormal(0.0, 2.0, 5000)
        whole = SummaryStats.from_values(values)

        cuts = np.sort(gen.choice(np.arange(1, len(values)), size=7, replace=False))
        merged = SummaryStats()
        for part in np.split(values, cuts):
            merged = merged.merge(SummaryStats.from_values(part))

        assert merged.n == whole.n
        assert merged.mean == pytest.approx(whole.mean, rel=1e-12)
        assert merged.m2 == pytest.approx(whole.m2, rel=1e-12)

    def test_merge_commutes(self):
        a = SummaryStats.from_values([1.0, 5.0, 2.0])
        b = SummaryStats.from_values([7.0, 0.5])
        ab, ba = a.merge(b), b.merge(a)
        assert ab.mean == pytest.approx(ba.mean, rel=1e-12)
        assert ab.m2 == pytest.approx(ba.m2, rel=1e-12)

    def test_merge_empty(self):
        a = SummaryStats.from_values([1.0, 2.0])
        assert a.merge(SummaryStats()) == a
        assert SummaryStats().merge(a) == a
        assert a.merge(SummaryStats()) is not a

    def test_step_counters(self):
        stats = SummaryStats()
        stats.add(ReplicationResult(1.0, 10, TerminationCause.HIT))
        stats.add(ReplicationResult(0.0, 30, TerminationCause.CAPPED))
        stats.add(ReplicationResult(0.0, 5, TerminationCause.TRUNCATED))
        assert stats.mean_steps == pytest.approx(15.0)
        assert stats.max_steps == 30
        assert stats.capped_count == 1

        other = SummaryStats().push(2.0, steps=50, capped=True)
        merged = stats.merge(other)
        assert merged.max_steps == 50
        assert merged.capped_count == 2
        assert merged.steps_total == 95

    def test_interval_coverage(self):
        covered = 0
        for seed in range(100):
            values = np.random.default_rng(seed).normal(0.3, 1.0, 400)
            stats = SummaryStats.from_values(values)
            covered += stats.ci_lo <= 0.3 <= stats.ci_hi
        # 95 expected, binomial sd about 2.2
        assert 88 <= covered <= 100
