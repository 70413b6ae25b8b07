"""Pixel-rendered control tasks.

``ValveTurnEnv`` asks the agent to rotate a three-pronged valve until its
marked prong points at a target tick drawn on the rim; the reward is the
negative circular distance to the target, normalized to [-1, 0].
``ReacherSparseEnv`` moves a point towards a goal disc and pays 1 only
while the point is inside the disc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .imaging import to_image

TWO_PI = 2.0 * math.pi


@dataclass
class EnvStep:
    observation: np.ndarray
    r_ext: float
    done: bool
    info: dict = field(default_factory=dict)


def circdist(u, v):
    d = abs(u - v) % TWO_PI
    return min(d, TWO_PI - d)


def _finish(canvas):
    pixels = np.floor(canvas * 255.0 + 0.5)
    return to_image(np.clip(pixels, 0, 255).astype(np.uint8))


class _Env:
    action_dim = 1

    def __init__(self, size=84, max_steps=50):
        self.size = size
        self.max_steps = max_steps
        self.t = 0
        self.clipped = 0

    def _clip_action(self, a):
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        if a.shape != (self.action_dim,):
            raise ValueError(f"expected action of length {self.action_dim}, got {a.shape}")
        bad = int(np.sum((a < -1.0) | (a > 1.0)))
        if bad:
            self.clipped += bad
        return np.clip(a, -1.0, 1.0)


class ValveTurnEnv(_Env):
    action_dim = 1
    name = "valve"

    def __init__(self, size=84, reset_mode="random", max_delta=0.25, max_steps=50):
        super().__init__(size, max_steps)
        if reset_mode not in ("hold", "random"):
            raise ValueError(f"reset_mode must be 'hold' or 'random', got {reset_mode!r}")
        self.reset_mode = reset_mode
        self.max_delta = max_delta
        self.theta = 0.0
        self.target = 0.0

    def reset(self, rng):
        if self.reset_mode == "random":
            self.theta = float(rng.uniform(0.0, TWO_PI))
        self.target = float(rng.uniform(0.0, TWO_PI))
        self.t = 0
        return self.render()

    def reward(self):
        return 0.0 - circdist(self.theta, self.target) / math.pi

    def step(self, a):
        a = self._clip_action(a)
        self.theta = float((self.theta + a[0] * self.max_delta) % TWO_PI)
        self.t += 1
        done = self.t >= self.max_steps
        info = {"theta": self.theta, "target": self.target, "clipped": self.clipped, "truncated": done}
        return EnvStep(self.render(), self.reward(), done, info)

    def render(self):
        s = float(self.size)
        c = s / 2.0
        canvas = np.empty((3, self.size, self.size), dtype=np.float64)
        canvas[0].fill(0.92)
        canvas[1].fill(0.90)
        canvas[2].fill(0.85)
        kernels.paint_disc(canvas, c, c, 0.42 * s, 0.35, 0.35, 0.38)
        kernels.paint_disc(canvas, c, c, 0.37 * s, 0.80, 0.80, 0.78)
        # target tick on the rim
        ct, st = math.cos(self.target), math.sin(self.target)
        kernels.paint_capsule(canvas, c + 0.36 * s * ct, c - 0.36 * s * st, c + 0.47 * s * ct,
                              c - 0.47 * s * st, 0.035 * s, 0.1, 0.75, 0.2)
        for k, colour in enumerate(((0.85, 0.12, 0.1), (0.15, 0.2, 0.55), (0.15, 0.2, 0.55))):
            ang = self.theta + k * TWO_PI / 3.0
            kernels.paint_capsule(canvas, c, c, c + 0.31 * s * math.cos(ang), c - 0.31 * s * math.sin(ang),
                                  0.045 * s, *colour)
        kernels.paint_disc(canvas, c, c, 0.07 * s, 0.2, 0.2, 0.22)
        return _finish(canvas)

    def oracle_action(self):
        d = (self.target - self.theta + math.pi) % TWO_PI - math.pi
        return np.array([np.clip(d / self.max_delta, -1.0, 1.0)])

    def get_state(self):
        return {"theta": self.theta, "target": self.target, "t": self.t, "clipped": self.clipped}

    def set_state(self, state):
        self.theta = state["theta"]
        self.target = state["target"]
        self.t = state["t"]
        self.clipped = state["clipped"]


class ReacherSparseEnv(_Env):
    action_dim = 2
    name = "reacher"

    def __init__(self, size=84, radius=0.08, speed=0.05, terminate_on_goal=False, max_steps=50):
        super().__init__(size, max_steps)
        self.radius = radius
        self.speed = speed
        self.terminate_on_goal = terminate_on_goal
        self.pos = np.array([0.5, 0.5])
        self.goal = np.array([0.5, 0.5])

    def reset(self, rng):
        self.pos = np.array([0.5, 0.5])
        self.goal = rng.uniform(0.1, 0.9, size=2)
        self.t = 0
        return self.render()

    def in_goal(self):
        return bool(np.hypot(*(self.pos - self.goal)) <= self.radius)

    def step(self, a):
        a = self._clip_action(a)
        self.pos = np.clip(self.pos + a * self.speed, 0.0, 1.0)
        self.t += 1
        hit = self.in_goal()
        truncated = self.t >= self.max_steps
        done = truncated or (self.terminate_on_goal and hit)
        info = {"x": float(self.pos[0]), "y": float(self.pos[1]), "clipped": self.clipped,
                "truncated": truncated and not (self.terminate_on_goal and hit)}
        return EnvStep(self.render(), 1.0 if hit else 0.0, done, info)

    def render(self):
        s = float(self.size)
        canvas = np.empty((3, self.size, self.size), dtype=np.float64)
        canvas[0].fill(0.93)
        canvas[1].fill(0.93)
        canvas[2].fill(0.90)
        gx, gy = self.goal
        kernels.paint_disc(canvas, gx * s, (1.0 - gy) * s, self.radius * s, 0.85, 0.1, 0.1)
        px, py = self.pos
        kernels.paint_disc(canvas, px * s, (1.0 - py) * s, 0.045 * s, 0.1, 0.25, 0.8)
        return _finish(canvas)

    def oracle_action(self):
        d = self.goal - self.pos
        return np.clip(d / self.speed, -1.0, 1.0)

    def get_state(self):
        return {"pos": self.pos.tolist(), "goal": self.goal.tolist(), "t": self.t, "clipped": self.clipped}

    def set_state(self, state):
        self.pos = np.array(state["pos"])
        self.goal = np.array(state["goal"])
        self.t = state["t"]
        self.clipped = state["clipped"]


def make_env(cfg):
    if cfg.env == "valve":
        return ValveTurnEnv(cfg.image_size, cfg.valve_reset, cfg.valve_max_delta, cfg.episode_steps)
    if cfg.env == "reacher":
        return ReacherSparseEnv(cfg.image_size, cfg.reacher_radius, cfg.reacher_speed,
                                cfg.reacher_terminate_on_goal, cfg.episode_steps)
    raise ValueError(f"unknown env {cfg.env!r}")
