"""
Crude Monte Carlo: run the nominal dynamics until D >= 1 or the step cap.

Paths that have not crossed by the cap count as misses, so the estimate is biased downward
by the truncation.
"""
from ..tilting import StepSampler
from .base import Estimator, ReplicationResult, TerminationCause, advance, check_monotone, first_index

CRUDE_BLOCK = 1024


class CrudeEstimator(Estimator):
    name = "crude"
    bias = "downward: paths not crossing within step_cap count as misses"

    def replicate(self, rng):
        cfg = self.cfg
        if cfg.d0 >= 1.0:
            return ReplicationResult(1.0, 0, TerminationCause.HIT)

        sampler = StepSampler(rng, self.model)
        s, d, x = 0.0, cfg.d0, self.model.initial_state
        steps, max_s = 0, 0.0

        while steps < cfg.step_cap:
            n = min(CRUDE_BLOCK, cfg.step_cap - steps)
            block = sampler.nominal_path(x, n)
            S, D = advance(s, d, block, cfg.delta)
            if cfg.debug:
                check_monotone(d, D)

            hit = first_index(D >= 1.0)
            if hit is not None:
                return ReplicationResult(1.0, steps + hit + 1, TerminationCause.HIT, 0.0, max(max_s, float(S[: hit + 1].max())))

            s, d, x = float(S[-1]), float(D[-1]), int(block.states[-1])
            steps += n
            max_s = max(max_s, float(S.max()))

        return ReplicationResult(0.0, steps, TerminationCause.TRUNCATED, 0.0, max_s)


def crude(rng, model, cfg):
    return CrudeEstimator(model, cfg=cfg).replicate(rng)
