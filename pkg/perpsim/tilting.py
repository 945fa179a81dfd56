"""
Nominal and exponentially tilted transitions of (X, gamma, lambda).

Under tilting the next state follows K_theta*, gamma follows the tilted law of its destination
state and the reward stays nominal. Each tilted step carries the log likelihood ratio
-theta* * gamma + log u(x) - log u(y).
"""
from bisect import bisect_right
from dataclasses import dataclass
from functools import partial

import numpy as np

from .families import check_domain


@dataclass(slots=True)
class StepSample:
    next_state: int
    gamma: float
    reward: float
    log_lr: float = 0.0


@dataclass(frozen=True, eq=False)
class PathBlock:
    """n consecutive steps (or n independent one-step draws for the batch methods)."""
    states: np.ndarray
    gammas: np.ndarray
    rewards: np.ndarray
    log_lr: np.ndarray


class _Buffer:
    __slots__ = ("draw", "size", "values", "pos")

    def __init__(self, draw, size):
        self.draw = draw
        self.size = size
        self.values = []
        self.pos = 0

    def next(self):
        if self.pos >= len(self.values):
            self.values = self.draw(self.size).tolist()
            self.pos = 0
        value = self.values[self.pos]
        self.pos += 1
        return value


def _cdf_rows(kernel):
    cdf = np.cumsum(kernel, axis=1)
    cdf[:, -1] = 1.0
    return cdf


class StepSampler:
    """
    Draws steps for one replication from one RngStream.

    Scalar steps are served from small vectorized buffers. The block methods draw whole
    segments at once; both give exactly the law of the single step.
    """

    def __init__(self, rng, model, env=None, buffer_size=64):
        self.model = model
        self.env = env
        self._gen = gen = rng.generator
        self._n = model.n_states

        self._nominal_cdf = _cdf_rows(model.kernel)
        self._nominal_rows = self._nominal_cdf.tolist()
        self._uniform = _Buffer(gen.random, buffer_size)
        self._nominal_gamma = [_Buffer(partial(f.sample, gen), buffer_size) for f in model.increments]
        self._reward = [
            float(r.value) if r.is_constant else _Buffer(partial(r.sample, gen), buffer_size) for r in model.rewards
        ]

        if env is not None:
            self.theta = env.theta_star
            self._tilted_cdf = _cdf_rows(env.tilted_kernel)
            self._tilted_rows = self._tilted_cdf.tolist()
            self._log_u = np.log(env.u_star)
            self._log_u_list = self._log_u.tolist()
            self._tilted_gamma = [
                _Buffer(partial(f.sample_tilted, gen, self.theta), buffer_size) for f in model.increments
            ]

    # single steps

    def _next_state(self, rows, x):
        if self._n == 1:
            return 0
        return min(bisect_right(rows[x], self._uniform.next()), self._n - 1)

    def _draw_reward(self, y):
        reward = self._reward[y]
        return reward if isinstance(reward, float) else reward.next()

    def nominal(self, x):
        y = self._next_state(self._nominal_rows, x)
        return StepSample(y, self._nominal_gamma[y].next(), self._draw_reward(y), 0.0)

    def tilted(self, x):
        y = self._next_state(self._tilted_rows, x)
        gamma = self._tilted_gamma[y].next()
        log_lr = -self.theta * gamma + self._log_u_list[x] - self._log_u_list[y]
        return StepSample(y, gamma, self._draw_reward(y), log_lr)

    # blocks

    def _walk(self, rows, x, n):
        states = np.zeros(n, dtype=np.int64)
        if self._n == 1:
            return states
        u = self._gen.random(n).tolist()
        last = self._n - 1
        for i in range(n):
            x = min(bisect_right(rows[x], u[i]), last)
            states[i] = x
        return states

    def _fill(self, states, draw):
        out = np.empty(len(states))
        if self._n == 1:
            out[:] = draw(0, len(states))
            return out
        for y in range(self._n):
            mask = states == y
            count = int(mask.sum())
            if count:
                out[mask] = draw(y, count)
        return out

    def _rewards(self, states):
        return self._fill(states, lambda y, k: self.model.rewards[y].sample(self._gen, k))

    def nominal_path(self, x, n):
        states = self._walk(self._nominal_rows, x, n)
        gammas = self._fill(states, lambda y, k: self.model.increments[y].sample(self._gen, k))
        return PathBlock(states, gammas, self._rewards(states), np.zeros(n))

    def tilted_path(self, x, n):
        states = self._walk(self._tilted_rows, x, n)
        gammas = self._fill(states, lambda y, k: self.model.increments[y].sample_tilted(self._gen, self.theta, k))
        previous = np.concatenate(([x], states[:-1]))
        log_lr = -self.theta * gammas + self._log_u[previous] - self._log_u[states]
        return PathBlock(states, gammas, self._rewards(states), log_lr)

    def _batch_states(self, cdf, x, n):
        if self._n == 1:
            return np.zeros(n, dtype=np.int64)
        states = np.searchsorted(cdf[x], self._gen.random(n), side="right")
        return np.minimum(states, self._n - 1)

    def nominal_batch(self, x, n):
        states = self._batch_states(self._nominal_cdf, x, n)
        gammas = self._fill(states, lambda y, k: self.model.increments[y].sample(self._gen, k))
        return PathBlock(states, gammas, self._rewards(states), np.zeros(n))

    def tilted_batch(self, x, n):
        states = self._batch_states(self._tilted_cdf, x, n)
        gammas = self._fill(states, lambda y, k: self.model.increments[y].sample_tilted(self._gen, self.theta, k))
        log_lr = -self.theta * gammas + self._log_u[x] - self._log_u[states]
        return PathBlock(states, gammas, self._rewards(states), log_lr)


def nominal_step(rng, model, x):
    return StepSampler(rng, model).nominal(x)


def tilted_step(rng, env, model, x):
    return StepSampler(rng, model, env).tilted(x)


def tilted_increment_mean(model, x, theta, h=1e-5):
    """d chi(x, theta) / d theta by a Richardson-refined central difference."""
    family = model.increments[x]
    check_domain(family, theta - h)
    check_domain(family, theta + h)

    def central(step):
        return (family.cgf(theta + step) - family.cgf(theta - step)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0
