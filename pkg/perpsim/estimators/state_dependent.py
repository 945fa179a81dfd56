"""
State-dependent importance sampler driven by the Lyapunov regions.

The state is (x, z) with z = (1 - d) exp(-s), updated by z' = z exp(-gamma) - delta * lambda.
Each step tilts when z is above the threshold of x, runs nominally below it and stops once
z <= 0. The estimator is the accumulated likelihood ratio; it is unbiased apart from
replications stopped by the step cap, which are reported separately.
"""
import math

from ..log import get_logger
from ..lyapunov import Region, classify
from ..tilting import StepSampler
from .base import Estimator, ReplicationResult, TerminationCause

logger = get_logger(__name__)

EXP_CEILING = 700.0
CHECK_S_RANGE = 200.0


class StateDependentEstimator(Estimator):
    name = "sd"
    needs_env = True
    needs_lyap = True
    bias = "none (capped replications excluded and counted)"

    def replicate(self, rng):
        cfg = self.cfg
        delta, cap, debug = cfg.delta, cfg.step_cap, cfg.debug
        sampler = StepSampler(rng, self.model, self.env)
        lyap = self.lyap

        x = self.model.initial_state
        s, d = 0.0, cfg.d0
        z = 1.0 - d
        log_lr, steps, max_s = 0.0, 0, 0.0

        while True:
            region = classify(lyap, x, z)
            if region is Region.TERMINAL:
                break
            if steps >= cap:
                return ReplicationResult(0.0, steps, TerminationCause.CAPPED, log_lr, max_s)

            if region is Region.TILT:
                step = sampler.tilted(x)
                log_lr += step.log_lr
            else:
                step = sampler.nominal(x)

            gamma, reward = step.gamma, step.reward
            s += gamma
            d_next = d + delta * reward * math.exp(min(s, EXP_CEILING))
            if debug and d_next < d:
                raise AssertionError(f"D decreased at step {steps}: {d} -> {d_next}")
            d = d_next
            z = z * math.exp(-gamma) - delta * reward
            x = step.next_state
            steps += 1
            if s > max_s:
                max_s = s

            if debug and abs(s) <= CHECK_S_RANGE:
                scale = math.exp(-s)
                z_from_sd = (1.0 - d) * scale
                if abs(z - z_from_sd) > 1e-9 * max(abs(z_from_sd), scale):
                    logger.debug("Z recursion diverged from (s, d) at step %d: %r vs %r", steps, z, z_from_sd)

        return ReplicationResult(math.exp(log_lr), steps, TerminationCause.HIT, log_lr, max_s)


def state_dependent(rng, model, env, lyap, cfg):
    return StateDependentEstimator(model, env, lyap, cfg).replicate(rng)
