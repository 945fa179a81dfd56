import math

import numpy as np
import pytest

from perpsim.errors import LyapunovRefusal, PreconditionError
from perpsim.lyapunov import (
    LyapunovParams,
    Region,
    classify,
    h_value,
    largest_admissible_delta,
    log_h_value,
    random_probes,
    recipe_constants,
    select_params,
    verify_drift,
)
from perpsim.rng import RngStream


@pytest.fixture(scope="module")
def walk_params(walk, walk_env):
    return select_params(walk, walk_env, 1e-3, enforce_budget=False)


@pytest.fixture(scope="module")
def two_state_params(two_state, two_state_env):
    return select_params(two_state, two_state_env, 1e-2, enforce_budget=False)


class TestConstants:
    def test_normal_walk_recipe(self, walk, walk_env):
        c = recipe_constants(walk, walk_env)
        assert c.b0 == 1.0
        assert c.b1 == pytest.approx(1.0, abs=1e-5)
        assert c.b2 == 1.0
        assert c.b2_method == "single state, constant reward"
        assert c.B1 == pytest.approx(0.45 * 1.0 / 4.0, rel=1e-6)
        assert c.B2 >= 1.0

    def test_two_state_recipe(self, two_state, two_state_env):
        c = recipe_constants(two_state, two_state_env)
        assert c.b2_method == "constant rewards"
        assert c.b2 > 1.0

    def test_params(self, walk_params, walk_env):
        p = walk_params
        assert p.rho == pytest.approx(1.0 / math.log(1e3))
        assert p.kappa == pytest.approx(2.0 * walk_env.theta_star - p.rho)
        assert p.c_delta > 0
        assert p.thresholds.shape == (1,)
        assert p.m == p.M
        assert isinstance(p.guaranteed, bool)
        assert p.as_dict()["thresholds"] == p.thresholds.tolist()

    def test_two_state_thresholds(self, two_state_params):
        p = two_state_params
        assert p.thresholds.shape == (2,)
        assert p.m <= p.M
        expected = p.c_delta * p.delta * (p.u_star * p.u_shift) ** (1.0 / p.kappa)
        np.testing.assert_allclose(p.thresholds, expected, rtol=1e-12)


class TestRefusal:
    def test_rho_not_below_theta_star(self, walk, walk_env):
        # theta* = 2, so delta = 0.7 gives rho = 2.8
        with pytest.raises(LyapunovRefusal) as info:
            select_params(walk, walk_env, 0.7)
        assert info.value.delta == 0.7
        assert info.value.exit_code == 3

    def test_rho_refusal_even_when_forced(self, walk, walk_env):
        with pytest.raises(LyapunovRefusal):
            select_params(walk, walk_env, 0.7, enforce_budget=False)

    def test_enforced_budget(self, arch, arch_env):
        try:
            p = select_params(arch, arch_env, 1e-2)
        except LyapunovRefusal as e:
            assert e.delta == 1e-2
            assert e.largest_admissible_delta is None or 0 < e.largest_admissible_delta < 1
        else:
            assert p.guaranteed
            assert p.budget <= 1.0

    def test_largest_admissible_delta_is_admissible(self, arch, arch_env):
        largest = largest_admissible_delta(arch, arch_env)
        if largest is not None:
            p = select_params(arch, arch_env, largest * 0.999)
            assert p.guaranteed

    def test_bad_delta(self, walk, walk_env):
        with pytest.raises(PreconditionError):
            select_params(walk, walk_env, 1.5)


class TestRegions:
    def test_terminal(self, walk_params):
        assert classify(walk_params, 0, 0.0) is Region.TERMINAL
        assert classify(walk_params, 0, -1.0) is Region.TERMINAL

    def test_threshold(self, walk_params):
        thr = walk_params.threshold_values[0]
        assert classify(walk_params, 0, thr * 1.01) is Region.TILT
        assert classify(walk_params, 0, thr) is Region.NOMINAL
        assert classify(walk_params, 0, thr * 0.5) is Region.NOMINAL

    def test_h_is_one_at_barrier(self, walk_params):
        assert h_value(walk_params, 0.0, 1.0, 0) == 1.0
        assert h_value(walk_params, 3.0, 1.5, 0) == 1.0

    @pytest.mark.parametrize("params", ["walk_params", "two_state_params"])
    def test_classify_matches_h(self, params, request):
        # TILT exactly where h < 1, on random states
        p = request.getfixturevalue(params)
        gen = np.random.default_rng(11)
        n_states = len(p.u_star)
        mismatches = 0
        for _ in range(10_000):
            x = int(gen.integers(n_states))
            d = float(gen.uniform(0.0, 1.2))
            s = float(gen.uniform(-15.0, 15.0))
            z = (1.0 - d) * math.exp(-s)
            tilt = classify(p, x, z) is Region.TILT
            if tilt != (h_value(p, s, d, x) < 1.0):
                mismatches += 1
        assert mismatches == 0

    @pytest.mark.parametrize("params", ["walk_params", "two_state_params"])
    def test_h_nondecreasing(self, params, request):
        p = request.getfixturevalue(params)
        s_grid = np.linspace(-20.0, 20.0, 200)
        d_grid = np.linspace(-2.0, 1.2, 200)
        for x in range(len(p.u_star)):
            for d in (-1.0, 0.0, 0.5, 0.99):
                h = np.array([h_value(p, float(s), d, x) for s in s_grid])
                assert np.diff(h).min() >= -1e-12
            for s in (-10.0, 0.0, 5.0):
                h = np.array([h_value(p, s, float(d), x) for d in d_grid])
                assert np.diff(h).min() >= -1e-12

    def test_log_h_vectorized(self, two_state_params):
        p = two_state_params
        s = np.array([-2.0, 0.0, 1.0, 5.0])
        d = np.array([0.0, 0.5, 0.9, 1.0])
        x = np.array([0, 1, 0, 1])
        expected = [math.log(h_value(p, *args)) for args in zip(s, d, x)]
        np.testing.assert_allclose(np.exp(log_h_value(p, s, d, x)), np.exp(expected), rtol=1e-10)


class TestDrift:
    def test_probes_inside_c(self, two_state_params):
        probes = random_probes(RngStream(1), two_state_params, 50)
        assert len(probes) == 50
        for s, d, x in probes:
            assert classify(two_state_params, x, (1.0 - d) * math.exp(-s)) is Region.TILT

    def test_deep_probe_passes(self, walk, walk_env, walk_params):
        p = walk_params
        d = 0.5
        log_z = float(p.log_thresholds[0]) + 6.0
        probe = (math.log1p(-d) - log_z, d, 0)
        (check,) = verify_drift(RngStream(2), walk, walk_env, p, [probe])
        assert check.passed
        assert check.ratio < 1.0

    def test_too_few_samples(self, walk, walk_env, walk_params):
        with pytest.raises(PreconditionError, match="too small"):
            verify_drift(RngStream(2), walk, walk_env, walk_params, [], n=1000)

    def test_probe_outside_c(self, walk, walk_env, walk_params):
        thr = walk_params.threshold_values[0]
        probe = (math.log(0.5) - math.log(thr * 0.5), 0.5, 0)
        with pytest.raises(PreconditionError, match="not inside C"):
            verify_drift(RngStream(2), walk, walk_env, walk_params, [probe])

    def test_explicit_params(self, walk_env):
        p = LyapunovParams(
            delta=0.01,
            rho=1.0 / math.log(100.0),
            c_delta=5.0,
            theta_star=walk_env.theta_star,
            u_star=np.ones(1),
            u_shift=np.ones(1),
        )
        assert p.threshold_values[0] == pytest.approx(0.05)
        assert p.m == p.M == 1.0
