"""
Full-tilt importance sampling: tilt every step until D >= 1.

Unbiased, but its variance is infinite once theta* >= 1; it exists to show that, and refuses
to run without ``demo=True``.
"""
import math

from ..errors import PreconditionError
from ..tilting import StepSampler
from .base import TILT_BLOCK, Estimator, ReplicationResult, TerminationCause, advance, check_monotone, first_index


class NaiveEstimator(Estimator):
    name = "naive"
    needs_env = True
    bias = "none up to capping; variance may be infinite"

    def __init__(self, model, env=None, lyap=None, cfg=None):
        super().__init__(model, env, lyap, cfg)
        if not cfg.demo:
            raise PreconditionError("naive_is is a demonstration estimator (infinite variance); set demo=True")

    def replicate(self, rng):
        cfg = self.cfg
        sampler = StepSampler(rng, self.model, self.env)
        s, d, x = 0.0, cfg.d0, self.model.initial_state
        log_lr, steps, max_s = 0.0, 0, 0.0

        if d >= 1.0:
            return ReplicationResult(1.0, 0, TerminationCause.HIT)

        while steps < cfg.step_cap:
            n = min(TILT_BLOCK, cfg.step_cap - steps)
            block = sampler.tilted_path(x, n)
            S, D = advance(s, d, block, cfg.delta)
            if cfg.debug:
                check_monotone(d, D)
            L = log_lr + block.log_lr.cumsum()

            hit = first_index(D >= 1.0)
            if hit is not None:
                final = float(L[hit])
                return ReplicationResult(
                    math.exp(final), steps + hit + 1, TerminationCause.HIT, final, max(max_s, float(S[: hit + 1].max()))
                )

            s, d, x, log_lr = float(S[-1]), float(D[-1]), int(block.states[-1]), float(L[-1])
            steps += n
            max_s = max(max_s, float(S.max()))

        return ReplicationResult(0.0, steps, TerminationCause.CAPPED, log_lr, max_s)


def naive_is(rng, model, env, cfg):
    return NaiveEstimator(model, env, cfg=cfg).replicate(rng)
