import math

import numpy as np
import pytest

from perpsim.errors import ConfigError, EstimationError, PreconditionError
from perpsim.estimators import (
    CrudeEstimator,
    NaiveEstimator,
    SamplerConfig,
    StateDependentEstimator,
    StateIndependentEstimator,
    TerminationCause,
    crude,
    default_n_star,
    estimate_cstar,
    load_estimator,
    naive_is,
    running_cv,
    state_dependent,
    state_independent,
)
from perpsim.estimators.base import TILT_BLOCK
from perpsim.lyapunov import select_params
from perpsim.rng import RngStream
from perpsim.stats import SummaryStats


def run(estimator, reps, seed=0):
    stats = SummaryStats()
    for i in range(reps):
        stats.add(estimator.replicate(RngStream(seed, i)))
    return stats


class TestConfig:
    def test_default_n_star(self):
        assert default_n_star(1e-3) == math.ceil(10 * math.log(1e3))
        assert SamplerConfig(delta=0.1).n_star == 24

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"delta": 0.0}, "delta must be in"),
            ({"delta": 1.0}, "delta must be in"),
            ({"delta": 0.1, "a": 1.0}, "a must be in"),
            ({"delta": 0.1, "n_star": 0}, "n_star must be"),
            ({"delta": 0.1, "n_star": 50, "step_cap": 10}, "step_cap"),
            ({"delta": 0.1, "block": 0}, "block must be"),
        ],
    )
    def test_invalid(self, kwargs, message):
        with pytest.raises(ConfigError, match=message):
            SamplerConfig(**kwargs)


class TestRegistry:
    @pytest.mark.parametrize(
        "name, cls",
        [
            ("crude", CrudeEstimator),
            ("naive", NaiveEstimator),
            ("si", StateIndependentEstimator),
            ("sd", StateDependentEstimator),
            ("state_independent", StateIndependentEstimator),
        ],
    )
    def test_load(self, name, cls):
        assert load_estimator(name) is cls

    def test_unknown(self):
        with pytest.raises(ConfigError):
            load_estimator("bogus")

    def test_missing_env(self, arch):
        with pytest.raises(PreconditionError, match="TiltEnvelope"):
            StateIndependentEstimator(arch, cfg=SamplerConfig(delta=0.1))

    def test_missing_lyap(self, arch, arch_env):
        with pytest.raises(PreconditionError, match="LyapunovParams"):
            StateDependentEstimator(arch, arch_env, cfg=SamplerConfig(delta=0.1))


class TestCrude:
    def test_start_above_barrier(self, arch):
        result = crude(RngStream(0), arch, SamplerConfig(delta=0.1, d0=1.0))
        assert (result.value, result.steps, result.cause) == (1.0, 0, TerminationCause.HIT)

    def test_values_are_indicators(self, arch):
        stats = SummaryStats()
        for i in range(300):
            result = crude(RngStream(1, i), arch, SamplerConfig(delta=0.3, step_cap=1000, debug=True))
            assert result.value in (0.0, 1.0)
            assert (result.cause is TerminationCause.HIT) == (result.value == 1.0)
            stats.add(result)
        assert 0 < stats.mean < 1

    def test_tiny_delta_gives_zero(self, two_state):
        est = CrudeEstimator(two_state, cfg=SamplerConfig(delta=1e-4, step_cap=1000))
        stats = run(est, 200)
        assert stats.mean == 0.0
        assert stats.cv is None
        assert stats.max_steps == 1000


class TestNaive:
    def test_requires_demo(self, arch, arch_env):
        with pytest.raises(PreconditionError, match="demo"):
            NaiveEstimator(arch, arch_env, cfg=SamplerConfig(delta=0.1))

    def test_hits_with_likelihood_ratio(self, walk, walk_env):
        result = naive_is(RngStream(3), walk, walk_env, SamplerConfig(delta=0.01, demo=True))
        assert result.cause is TerminationCause.HIT
        assert result.value == pytest.approx(math.exp(result.log_lr_final))


class TestStateIndependent:
    def test_replication(self, arch, arch_env):
        cfg = SamplerConfig(delta=1e-3, debug=True)
        for i in range(50):
            result = state_independent(RngStream(4, i), arch, arch_env, cfg)
            assert result.cause in (TerminationCause.HIT, TerminationCause.TRUNCATED)
            if result.cause is TerminationCause.HIT:
                assert result.value == pytest.approx(math.exp(result.log_lr_final))
            else:
                assert result.value == 0.0

    def test_start_above_barrier(self, arch, arch_env):
        result = state_independent(RngStream(0), arch, arch_env, SamplerConfig(delta=0.1, d0=1.0))
        assert result.cause is TerminationCause.HIT
        assert result.value == 1.0

    def test_agrees_with_crude(self, arch, arch_env):
        delta = 0.1
        c = run(CrudeEstimator(arch, cfg=SamplerConfig(delta=delta, step_cap=1000)), 20_000, seed=5)
        s = run(StateIndependentEstimator(arch, arch_env, cfg=SamplerConfig(delta=delta)), 5_000, seed=6)
        assert abs(c.mean - s.mean) < 4 * math.hypot(c.std_err, s.std_err)

    def test_cv_is_moderate(self, arch, arch_env):
        delta = 1e-3 / 0.75
        s = run(StateIndependentEstimator(arch, arch_env, cfg=SamplerConfig(delta=delta, n_star=70)), 2_000, seed=7)
        assert 1.0 <= s.cv <= 3.0

    @pytest.mark.parametrize("cap", [5, TILT_BLOCK + 3])
    def test_tilted_phase_respects_step_cap(self, arch, arch_env, cap):
        result = state_independent(RngStream(10), arch, arch_env, SamplerConfig(delta=1e-30, n_star=1, step_cap=cap))
        assert result.cause is TerminationCause.CAPPED
        assert result.steps == cap


class TestStateDependent:
    def test_start_above_barrier(self, walk, walk_env):
        lyap = select_params(walk, walk_env, 0.05, enforce_budget=False)
        result = state_dependent(RngStream(0), walk, walk_env, lyap, SamplerConfig(delta=0.05, d0=1.0))
        assert (result.value, result.steps, result.cause) == (1.0, 0, TerminationCause.HIT)

    def test_replications_terminate(self, walk, walk_env):
        lyap = select_params(walk, walk_env, 0.05, enforce_budget=False)
        est = StateDependentEstimator(walk, walk_env, lyap, SamplerConfig(delta=0.05, debug=True))
        stats = SummaryStats()
        for i in range(100):
            result = est.replicate(RngStream(8, i))
            assert result.cause is TerminationCause.HIT
            assert result.value == pytest.approx(math.exp(result.log_lr_final))
            stats.add(result)
        assert stats.capped_count == 0
        assert math.isfinite(stats.mean) and stats.mean > 0

    def test_step_cap(self, walk, walk_env):
        lyap = select_params(walk, walk_env, 1e-4, enforce_budget=False)
        est = StateDependentEstimator(walk, walk_env, lyap, SamplerConfig(delta=1e-4, n_star=1, step_cap=1))
        result = est.replicate(RngStream(9))
        assert result.cause is TerminationCause.CAPPED
        assert result.value == 0.0


class TestHelpers:
    def test_estimate_cstar(self):
        assert estimate_cstar(1e-4, 1e-2, 2.0) == pytest.approx(1.0)
        with pytest.raises(EstimationError):
            estimate_cstar(0.0, 1e-2, 2.0)
        with pytest.raises(PreconditionError):
            estimate_cstar(1e-4, 2.0, 2.0)

    def test_running_cv(self):
        values = np.array([1.0, 3.0, 0.0, 0.0, 2.0, 2.0])
        cv = running_cv(values, [2, 6])
        assert cv[0] == pytest.approx(np.std([1.0, 3.0], ddof=1) / 2.0)
        assert cv[1] == pytest.approx(np.std(values, ddof=1) / values.mean())
        assert math.isnan(running_cv(np.zeros(4), [4])[0])
