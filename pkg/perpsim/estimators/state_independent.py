"""
State-independent importance sampler.

Tilt until D exceeds a, freeze the likelihood ratio there, then follow the nominal dynamics
for n_star more steps. D never decreases, so the event indicator is read off at the end of
that horizon; truncating at n_star biases the estimate downward.
"""
import math

from ..tilting import StepSampler
from .base import TILT_BLOCK, Estimator, ReplicationResult, TerminationCause, advance, check_monotone, first_index


class StateIndependentEstimator(Estimator):
    name = "si"
    needs_env = True
    bias = "downward: the event is only observed for n_star nominal steps after the switch-off"

    def replicate(self, rng):
        cfg = self.cfg
        env = self.env
        sampler = StepSampler(rng, self.model, env)
        x0 = self.model.initial_state
        s, d, x = 0.0, cfg.d0, x0
        steps, max_s = 0, 0.0

        # tilted phase, up to T = inf{n : D_n > a}
        while d <= cfg.a:
            if steps >= cfg.step_cap:
                return ReplicationResult(0.0, steps, TerminationCause.CAPPED, 0.0, max_s)
            n = min(TILT_BLOCK, cfg.step_cap - steps)
            block = sampler.tilted_path(x, n)
            S, D = advance(s, d, block, cfg.delta)
            if cfg.debug:
                check_monotone(d, D)

            switch = first_index(D > cfg.a)
            stop = n if switch is None else switch + 1
            s, d, x = float(S[stop - 1]), float(D[stop - 1]), int(block.states[stop - 1])
            steps += stop
            max_s = max(max_s, float(S[:stop].max()))

        log_lr = -env.theta_star * s + math.log(env.u_star[x0]) - math.log(env.u_star[x])
        if d >= 1.0:
            return ReplicationResult(math.exp(log_lr), steps, TerminationCause.HIT, log_lr, max_s)

        # nominal continuation
        remaining = min(cfg.n_star, cfg.step_cap - steps)
        while remaining > 0:
            n = min(cfg.block, remaining)
            block = sampler.nominal_path(x, n)
            S, D = advance(s, d, block, cfg.delta)
            if cfg.debug:
                check_monotone(d, D)

            hit = first_index(D >= 1.0)
            if hit is not None:
                return ReplicationResult(
                    math.exp(log_lr), steps + hit + 1, TerminationCause.HIT, log_lr, max(max_s, float(S[: hit + 1].max()))
                )

            s, d, x = float(S[-1]), float(D[-1]), int(block.states[-1])
            steps += n
            remaining -= n
            max_s = max(max_s, float(S.max()))

        return ReplicationResult(0.0, steps, TerminationCause.TRUNCATED, log_lr, max_s)


def state_independent(rng, model, env, cfg):
    return StateIndependentEstimator(model, env, cfg=cfg).replicate(rng)
