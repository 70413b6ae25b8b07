"""Training loop, evaluation protocol, metrics files and checkpoints."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from pathlib import Path

import numpy as np
import torch

from . import checkpoint
from .agent import Agent, select_action, train_tick
from .config import RunConfig
from .envs import make_env
from .imaging import FrameStack, dump_stack, stack_push, stack_reset, to_image
from .intrinsic import RewardWeights, novelty_reward, surprise_reward, total_reward
from .perception import as_batch
from .replay import ReplayBuffer, Transition

log = logging.getLogger(__name__)

STEP_COLUMNS = ["step", "r_ext", "r_novel", "r_surprise", "ae_loss", "critic_loss", "actor_loss", "predictor_loss"]
EVAL_COLUMNS = ["step", "mean_return", "return_stddev"]

STREAMS = {"env": 1, "init": 2, "explore": 3, "sample": 4, "eval": 5}


def make_streams(seed):
    """Independent named generators expanded from one master seed."""
    return {name: np.random.default_rng([seed, key]) for name, key in STREAMS.items()}


def init_seed(seed):
    return int(make_streams(seed)["init"].integers(0, 2**62))


def fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def params_digest(agent):
    h = hashlib.sha256()
    for name, t in sorted(agent.state_tensors().items()):
        h.update(name.encode())
        h.update(t.detach().numpy().tobytes())
    return h.hexdigest()


def evaluate(agent, env, episodes, rng, policy=None, dump_dir=None):
    """Mean and stddev of extrinsic episode returns, acting greedily.

    No buffer writes or parameter updates happen here; ``policy`` overrides the
    agent (used for scripted baselines).
    """
    returns = []
    k = agent.obs_shape[0] // 3 if agent is not None else 3
    for ep in range(episodes):
        frame = env.reset(rng)
        stack = stack_reset(frame, k)
        total = 0.0
        t = 0
        while True:
            a = policy(env) if policy is not None else select_action(agent, stack, explore=False)
            step = env.step(a)
            total += step.r_ext
            stack = stack_push(stack, step.observation)
            if dump_dir is not None:
                from .imaging import write_ppm
                Path(dump_dir).mkdir(parents=True, exist_ok=True)
                write_ppm(Path(dump_dir) / f"ep{ep:03d}_t{t:03d}.ppm", step.observation)
            t += 1
            if step.done:
                break
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))


class Trainer:
    """Synchronous loop: one env step, then one training tick."""

    def __init__(self, cfg: RunConfig, out_dir=None):
        self.cfg = cfg
        self.out = Path(out_dir if out_dir is not None else cfg.out_dir)
        self.streams = make_streams(cfg.seed)
        self.env = make_env(cfg)
        self.eval_env = make_env(cfg)
        self.agent = Agent.from_config(cfg, self.env.action_dim, seed=init_seed(cfg.seed))
        alpha, beta = cfg.weights
        self.weights = RewardWeights(alpha, beta)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.step = 0
        self.stack = None
        self.episode = 0

    # -- files ------------------------------------------------------------
    @property
    def metrics_path(self):
        return self.out / "metrics.csv"

    @property
    def eval_path(self):
        return self.out / "eval.csv"

    @property
    def checkpoint_path(self):
        return self.out / "checkpoint.nasa"

    def _open_files(self, fresh):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.txt").write_text(self.cfg.to_text())
        for path, cols in ((self.metrics_path, STEP_COLUMNS), (self.eval_path, EVAL_COLUMNS)):
            if fresh or not path.exists():
                with open(path, "w", newline="") as fh:
                    csv.writer(fh).writerow(cols)

    def _append(self, path, row):
        with open(path, "a", newline="") as fh:
            csv.writer(fh).writerow(row)

    # -- one environment step -----------------------------------------------
    def _new_episode(self):
        frame = self.env.reset(self.streams["env"])
        self.stack = stack_reset(frame, self.cfg.frame_stack)
        self.episode += 1
        if self.cfg.dump_frames:
            dump_stack(self.stack, self.out / "frames", prefix=f"ep{self.episode:05d}_start")

    def intrinsic(self, s, a, s_next):
        """(r_novel, r_surprise) for a transition with the current networks."""
        agent = self.agent
        cfg = self.cfg
        if agent.ensemble is None:
            return 0.0, 0.0
        r_novel = novelty_reward(agent.ae, s, cfg.clamp_ssim, cfg.ssim_window, cfg.ssim_k1, cfg.ssim_k2)
        with torch.no_grad():
            z = agent.ae.encode_batch(as_batch(s))
            z_next = agent.ae.encode_batch(as_batch(s_next))
        r_surprise = surprise_reward(agent.ensemble, z, torch.as_tensor(a, dtype=torch.float32).reshape(1, -1),
                                     z_next)
        return r_novel, r_surprise

    def env_step(self):
        cfg = self.cfg
        if self.stack is None:
            self._new_episode()
        s = self.stack
        if self.step < cfg.warmup_steps:
            a = self.streams["explore"].uniform(-1.0, 1.0, size=self.env.action_dim)
        else:
            a = select_action(self.agent, s, explore=True, rng=self.streams["explore"])
        out = self.env.step(a)
        s_next = stack_push(s, out.observation)
        r_novel, r_surprise = self.intrinsic(s, a, s_next)
        br = total_reward(self.weights, out.r_ext, r_novel, r_surprise)
        terminal = bool(out.done and not out.info.get("truncated", False))
        self.buffer.push(Transition(s, a, br.r_total, s_next, terminal, br))
        self.stack = None if out.done else s_next
        self.step += 1
        tick = train_tick(self.agent, self.buffer, self.streams["sample"]) if self.step > cfg.warmup_steps else None
        return br, tick

    # -- the whole run ------------------------------------------------------
    def run(self, until=None, resume=False):
        cfg = self.cfg
        until = cfg.total_steps if until is None else until
        self._open_files(fresh=not resume)
        while self.step < until:
            br, tick = self.env_step()
            row = [self.step, br.r_ext, br.r_novel, br.r_surprise]
            if tick is not None and tick.status == "trained":
                row += [tick.ae_loss, tick.critic_loss, tick.actor_loss, tick.predictor_loss]
            else:
                row += [None] * 4
            self._append(self.metrics_path, [row[0]] + [fmt(v) for v in row[1:]])
            if self.step % cfg.eval_every == 0:
                mean, std = self.evaluate()
                self._append(self.eval_path, [self.step, fmt(mean), fmt(std)])
                log.info("step %d: eval mean return %.3f (std %.3f)", self.step, mean, std)
                self.save_checkpoint()
        if self.step % cfg.eval_every != 0 or self.step == 0:
            self.save_checkpoint()
        return self

    def evaluate(self, episodes=None):
        return evaluate(self.agent, self.eval_env, episodes or self.cfg.eval_episodes, self.streams["eval"])

    # -- checkpoints ----------------------------------------------------------
    def state_tensors(self):
        tensors = dict(self.agent.state_tensors())
        meta = {
            "config": self.cfg.to_dict(),
            "step": self.step,
            "episode": self.episode,
            "rng": {k: g.bit_generator.state for k, g in self.streams.items()},
            "env": self.env.get_state(),
            "eval_env": self.eval_env.get_state(),
            "has_stack": self.stack is not None,
        }
        tensors["meta.json"] = checkpoint.encode_json(meta)
        if self.stack is not None:
            for i, f in enumerate(self.stack.frames):
                tensors[f"meta.stack.{i}"] = f
        return tensors

    def save_checkpoint(self, path=None):
        path = Path(path or self.checkpoint_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        checkpoint.save(path, self.state_tensors())
        if self.cfg.save_replay:
            self.buffer.save(path.with_suffix(".replay.npz"))
        return path

    @classmethod
    def from_checkpoint(cls, path, out_dir=None, with_replay=True):
        tensors = checkpoint.load(path)
        if "meta.json" not in tensors:
            raise checkpoint.CheckpointError(f"{path}: no run metadata")
        meta = checkpoint.decode_json(tensors["meta.json"])
        cfg = RunConfig(**meta["config"])
        tr = cls(cfg, out_dir)
        tr.agent.load_state_tensors({k: v for k, v in tensors.items() if not k.startswith("meta.")})
        tr.step = meta["step"]
        tr.episode = meta["episode"]
        for k, state in meta["rng"].items():
            tr.streams[k].bit_generator.state = state
        tr.env.set_state(meta["env"])
        tr.eval_env.set_state(meta["eval_env"])
        if meta["has_stack"]:
            frames = []
            i = 0
            while f"meta.stack.{i}" in tensors:
                frames.append(to_image(np.rint(tensors[f"meta.stack.{i}"] * 255.0).astype(np.uint8)))
                i += 1
            tr.stack = FrameStack(tuple(frames))
        replay = Path(path).with_suffix(".replay.npz")
        if with_replay and replay.exists():
            tr.buffer = ReplayBuffer.load(replay)
        return tr


def train(cfg, out_dir=None):
    return Trainer(cfg, out_dir).run()


def resume(path, out_dir=None, until=None):
    tr = Trainer.from_checkpoint(path, out_dir)
    return tr.run(until=until, resume=True)
