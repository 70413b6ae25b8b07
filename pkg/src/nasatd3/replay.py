"""Fixed-capacity replay buffer for frame-stack transitions.

Frames are stored as 8-bit pixels. Within a transition the current and next
stacks usually share K-1 frames (and an episode-start stack repeats one
frame), so each record keeps only its distinct frames plus index windows into
them. A steady-state record therefore costs K+1 frames instead of 2K:
with K=3 and 84x84 RGB that is about 85 KB, or roughly 8.5 GB for 100k
transitions (2K frames would be 12.7 GB).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .imaging import FrameStack, to_uint8
from .intrinsic import RewardBreakdown


@dataclass(frozen=True)
class Transition:
    s: FrameStack
    a: np.ndarray
    r_total: float
    s_next: FrameStack
    done: bool
    breakdown: Optional[RewardBreakdown] = None


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray
    indices: np.ndarray


class _Record:
    __slots__ = ("frames", "s_idx", "n_idx", "a", "r", "done", "breakdown")


def _pack(s, s_next):
    unique = []
    index = []
    for f in s.frames + s_next.frames:
        for j, u in enumerate(unique):
            if u is f:
                index.append(j)
                break
        else:
            index.append(len(unique))
            unique.append(f)
    k = len(s.frames)
    return np.stack([to_uint8(f) for f in unique]), tuple(index[:k]), tuple(index[k:])


class ReplayBuffer:
    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._data = []
        self.cursor = 0

    def __len__(self):
        return len(self._data)

    @property
    def size(self):
        return len(self._data)

    def push(self, t):
        if t.s.shape != t.s_next.shape:
            raise ValueError(f"stack shapes differ: {t.s.shape} vs {t.s_next.shape}")
        a = np.asarray(t.a, dtype=np.float32).reshape(-1)
        if np.any(np.abs(a) > 1.0):
            raise ValueError("actions must lie in [-1, 1]")
        rec = _Record()
        rec.frames, rec.s_idx, rec.n_idx = _pack(t.s, t.s_next)
        rec.a = a
        rec.r = float(t.r_total)
        rec.done = bool(t.done)
        rec.breakdown = t.breakdown
        if len(self._data) < self.capacity:
            self._data.append(rec)
        else:
            self._data[self.cursor] = rec
        self.cursor = (self.cursor + 1) % self.capacity

    def _stack(self, rec, idx):
        return rec.frames[list(idx)].reshape(-1, *rec.frames.shape[2:])

    def get(self, i):
        """Return the i-th stored transition (oldest first) with dequantized stacks."""
        n = len(self._data)
        if not 0 <= i < n:
            raise IndexError(i)
        pos = i if n < self.capacity else (self.cursor + i) % self.capacity
        rec = self._data[pos]

        def stack(idx):
            return FrameStack(tuple((rec.frames[j].astype(np.float32) / 255.0) for j in idx))

        return Transition(stack(rec.s_idx), rec.a.copy(), rec.r, stack(rec.n_idx), rec.done, rec.breakdown)

    def get_record(self, i):
        n = len(self._data)
        pos = i if n < self.capacity else (self.cursor + i) % self.capacity
        return self._data[pos]

    def sample_indices(self, n, rng):
        if not self._data:
            raise ValueError(f"cannot sample {n} from an empty buffer")
        return rng.integers(0, len(self._data), size=n)

    def sample(self, n, rng):
        """``n`` uniform draws with replacement; pixels dequantized to [0, 1] float32."""
        idx = self.sample_indices(n, rng)
        recs = [self._data[i] for i in idx]
        obs = np.stack([self._stack(r, r.s_idx) for r in recs]).astype(np.float32) / 255.0
        nxt = np.stack([self._stack(r, r.n_idx) for r in recs]).astype(np.float32) / 255.0
        return Batch(
            obs=obs,
            actions=np.stack([r.a for r in recs]),
            rewards=np.array([r.r for r in recs], dtype=np.float64),
            next_obs=nxt,
            dones=np.array([r.done for r in recs], dtype=np.float32),
            indices=idx,
        )

    def nbytes(self):
        return sum(r.frames.nbytes + r.a.nbytes for r in self._data)

    # -- snapshot for exact resume ------------------------------------------
    def save(self, path):
        arrays = {"capacity": np.array(self.capacity), "cursor": np.array(self.cursor),
                  "count": np.array(len(self._data))}
        for i, r in enumerate(self._data):
            arrays[f"f{i}"] = r.frames
            arrays[f"i{i}"] = np.array(r.s_idx + r.n_idx, dtype=np.int16)
            arrays[f"a{i}"] = r.a
            arrays[f"r{i}"] = np.array([r.r, float(r.done)], dtype=np.float64)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            buf = cls(int(z["capacity"]))
            buf.cursor = int(z["cursor"])
            for i in range(int(z["count"])):
                rec = _Record()
                rec.frames = z[f"f{i}"]
                idx = tuple(int(v) for v in z[f"i{i}"])
                k = len(idx) // 2
                rec.s_idx, rec.n_idx = idx[:k], idx[k:]
                rec.a = z[f"a{i}"]
                rd = z[f"r{i}"]
                rec.r = float(rd[0])
                rec.done = bool(rd[1])
                rec.breakdown = None
                buf._data.append(rec)
        return buf
