"""Tasks: reward-based MNIST classification and an inverted pendulum on a cart.

The pendulum is a self-contained rigid-body simulation (uniform pole hinged on
a driven cart, semi-implicit Euler) exposing the usual 4-dimensional
observation, five discrete forces, +1 reward per step, and early termination
when the pole falls.  Pole mass follows from length x thickness^2 x density so
the geometry-variation sweeps stay physically meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def reward_of(action: int, label: int) -> float:
    """Classification reward: +1 for the correct class, -1 otherwise."""
    return 1.0 if action == label else -1.0


def mnist_episode(dataset, which, rng: np.random.Generator | None = None) -> tuple[np.ndarray, int]:
    """One observation for the single-step image task: either the image at an
    explicit index or a uniformly drawn one."""
    if which is None:
        if rng is None:
            raise ValueError("need an index or an rng")
        which = int(rng.integers(dataset.images.shape[0]))
    return dataset.images[which].astype(np.float64), int(dataset.labels[which])


DEFAULT_FORCES = (-3.0, -1.5, 0.0, 1.5, 3.0)


@dataclass(frozen=True)
class PendulumConfig:
    pole_length: float = 1.5
    pole_thickness: float = 0.05
    cart_mass: float = 1.0
    pole_density: float = 30.0
    gravity: float = 9.8
    dt: float = 0.02
    max_steps: int = 200
    fail_angle: float = 0.2
    force_set: tuple[float, ...] = DEFAULT_FORCES
    reset_jitter: float = 0.01

    def __post_init__(self):
        if self.pole_length <= 0 or self.pole_thickness <= 0:
            raise ValueError("pole geometry must be positive")
        if self.dt <= 0 or self.max_steps < 1:
            raise ValueError("dt must be positive and max_steps >= 1")

    @property
    def pole_mass(self) -> float:
        return self.pole_density * self.pole_length * self.pole_thickness**2

    @property
    def half_length(self) -> float:
        return 0.5 * self.pole_length


def pendulum_reset(cfg: PendulumConfig, rng: np.random.Generator) -> np.ndarray:
    """State (x, theta, x_dot, theta_dot) jittered uniformly around upright."""
    return rng.uniform(-cfg.reset_jitter, cfg.reset_jitter, size=4)


def cartpole_derivatives(cfg: PendulumConfig, state: np.ndarray, force: float) -> np.ndarray:
    """Time derivatives of (x, theta, x_dot, theta_dot) for the hinged uniform
    pole; the 4/3 factor is the rod's end-point moment of inertia."""
    _, theta, x_dot, theta_dot = state
    mp = cfg.pole_mass
    total = cfg.cart_mass + mp
    half = cfg.half_length
    sin, cos = math.sin(theta), math.cos(theta)
    temp = (force + mp * half * theta_dot**2 * sin) / total
    theta_acc = (cfg.gravity * sin - cos * temp) / (half * (4.0 / 3.0 - mp * cos**2 / total))
    x_acc = temp - mp * half * theta_acc * cos / total
    return np.array([x_dot, theta_dot, x_acc, theta_acc])


def pendulum_step(cfg: PendulumConfig, state: np.ndarray, action: int) -> tuple[np.ndarray, float, bool]:
    """Advance one control step with the indexed force (semi-implicit Euler).

    Reward is +1 per step; the episode is done when |theta| exceeds the fail
    angle.  Step-count truncation is handled by the caller.
    """
    if not 0 <= action < len(cfg.force_set):
        raise ValueError(f"action {action} outside [0, {len(cfg.force_set)})")
    force = cfg.force_set[action]
    x, theta, x_dot, theta_dot = state
    _, _, x_acc, theta_acc = cartpole_derivatives(cfg, state, force)
    x_dot = x_dot + cfg.dt * x_acc
    x = x + cfg.dt * x_dot
    theta_dot = theta_dot + cfg.dt * theta_acc
    theta = theta + cfg.dt * theta_dot
    nxt = np.array([x, theta, x_dot, theta_dot])
    done = abs(theta) > cfg.fail_angle
    return nxt, 1.0, done


# Published sampling ranges used for the default [0, 1] observation mapping.
DEFAULT_OBS_RANGES = ((-0.4, 0.4), (-0.2, 0.2), (-1.7, 1.7), (-1.25, 1.25))


@dataclass(frozen=True)
class ObsNormalizer:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        for a, b in zip(self.lo, self.hi):
            if not a < b:
                raise ValueError(f"degenerate range [{a}, {b}]")


def default_normalizer() -> ObsNormalizer:
    lo, hi = zip(*DEFAULT_OBS_RANGES)
    return ObsNormalizer(lo=lo, hi=hi)


def normalize_obs(normalizer: ObsNormalizer, raw: np.ndarray) -> np.ndarray:
    """Per-dimension linear map to [0, 1], clipped."""
    lo = np.asarray(normalizer.lo)
    hi = np.asarray(normalizer.hi)
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)


def calibrate_normalizer(cfg: PendulumConfig, n_steps: int, rng: np.random.Generator) -> ObsNormalizer:
    """Sample the raw observation ranges with a uniform-random policy and
    return the per-dimension min/max as the normalizer."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    lo = np.full(4, np.inf)
    hi = np.full(4, -np.inf)
    state = pendulum_reset(cfg, rng)
    steps_in_episode = 0
    for _ in range(n_steps):
        lo = np.minimum(lo, state)
        hi = np.maximum(hi, state)
        action = int(rng.integers(len(cfg.force_set)))
        state, _, done = pendulum_step(cfg, state, action)
        steps_in_episode += 1
        if done or steps_in_episode >= cfg.max_steps:
            state = pendulum_reset(cfg, rng)
            steps_in_episode = 0
    if not (lo < hi).all():
        raise ValueError("degenerate observation range; sample longer")
    return ObsNormalizer(lo=tuple(lo), hi=tuple(hi))


class PendulumEnv:
    """Stateful episode wrapper around the functional dynamics."""

    def __init__(self, cfg: PendulumConfig, normalizer: ObsNormalizer | None = None):
        self.cfg = cfg
        self.normalizer = normalizer or default_normalizer()
        self._state: np.ndarray | None = None
        self._steps = 0

    @property
    def n_actions(self) -> int:
        return len(self.cfg.force_set)

    @property
    def obs_dim(self) -> int:
        return 4

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._state = pendulum_reset(self.cfg, rng)
        self._steps = 0
        return normalize_obs(self.normalizer, self._state)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._state is None:
            raise RuntimeError("call reset before step")
        self._state, reward, done = pendulum_step(self.cfg, self._state, action)
        self._steps += 1
        if self._steps >= self.cfg.max_steps:
            done = True
        return normalize_obs(self.normalizer, self._state), reward, done
