"""Run configuration: a flat dataclass read from ``key = value`` files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

VARIANTS = ("nasa-td3", "ae-td3", "pixel-td3")


@dataclass
class RunConfig:
    # task
    env: str = "valve"
    variant: str = "nasa-td3"
    valve_reset: str = "random"
    valve_max_delta: float = 0.25
    reacher_radius: float = 0.08
    reacher_speed: float = 0.05
    reacher_terminate_on_goal: bool = False
    episode_steps: int = 50
    image_size: int = 84
    frame_stack: int = 3
    # networks
    z_dim: int = 200
    filters: int = 32
    actor_hidden: int = 1024
    critic_hidden: int = 1024
    predictor_hidden: int = 512
    ensemble_size: int = 3
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    lr_encoder: float = 1e-3
    lr_decoder: float = 1e-3
    lr_predictor: float = 1e-3
    # intrinsic reward
    alpha: float = 1.0
    beta: float = 1.0
    clamp_ssim: bool = True
    ssim_window: int = 7
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    # TD3
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    explore_sigma: float = 0.1
    batch_size: int = 128
    G: int = 5
    warmup_steps: int = 1000
    buffer_capacity: int = 100_000
    # protocol
    total_steps: int = 50_000
    eval_every: int = 10_000
    eval_episodes: int = 10
    seed: int = 0
    out_dir: str = "runs/default"
    save_replay: bool = False
    dump_frames: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def obs_shape(self):
        return (3 * self.frame_stack, self.image_size, self.image_size)

    @property
    def weights(self):
        """Effective (alpha, beta); the AE-TD3 ablation zeroes both."""
        if self.variant == "nasa-td3":
            return self.alpha, self.beta
        return 0.0, 0.0

    def validate(self):
        if self.env not in ("valve", "reacher"):
            raise ValueError(f"env must be 'valve' or 'reacher', got {self.env!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.valve_reset not in ("hold", "random"):
            raise ValueError(f"valve_reset must be 'hold' or 'random', got {self.valve_reset!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        for name in ("G", "policy_delay", "batch_size", "frame_stack", "eval_episodes", "eval_every",
                     "buffer_capacity", "z_dim", "ensemble_size", "episode_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.total_steps < 0 or self.warmup_steps < 0:
            raise ValueError("step counts must be non-negative")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name, raw):
    if name not in _FIELDS:
        raise KeyError(f"unknown config key {name!r}")
    kind = _FIELDS[name].type
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if kind == "int":
        return int(float(raw)) if "e" in raw.lower() else int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        try:
            values[key.strip()] = _coerce(key.strip(), raw)
        except (KeyError, ValueError) as err:
            raise ValueError(f"{source}:{lineno}: {err}") from None
    return values


def load_config(path=None, overrides=None):
    """Read a config file (optional) and apply ``overrides`` on top."""
    values = {}
    if path is not None:
        values.update(parse_text(Path(path).read_text(), str(path)))
    for k, v in (overrides or {}).items():
        if k not in _FIELDS:
            raise ValueError(f"unknown config key {k!r}")
        values[k] = _coerce(k, str(v)) if isinstance(v, str) else v
    return RunConfig(**values)
