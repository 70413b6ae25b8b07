"""Novelty and surprise bonuses and the composed training reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from . import nn
from .imaging import ssim
from .perception import as_batch


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("reward weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    r_ext: float
    r_novel: float
    r_surprise: float
    r_total: float


def total_reward(weights, r_ext, r_novel, r_surprise):
    r_total = r_ext + weights.alpha * r_novel + weights.beta * r_surprise
    return RewardBreakdown(r_ext, r_novel, r_surprise, r_total)


@torch.no_grad()
def novelty_reward(ae, s, clamp=True, window=7, k1=0.01, k2=0.03):
    """1 - SSIM between an observation and its reconstruction."""
    x = as_batch(s)
    recon = ae.decode_batch(ae.encode_batch(x))[0].numpy()
    sim = ssim(x[0].numpy(), recon, window=window, k1=k1, k2=k2)
    if clamp:
        sim = min(max(sim, 0.0), 1.0)
    return 1.0 - sim


def predictor_layers(z_dim, action_dim, hidden=512):
    return [nn.dense(z_dim + action_dim, hidden), nn.RELU, nn.dense(hidden, hidden), nn.RELU,
            nn.dense(hidden, z_dim)]


class PredictorEnsemble:
    """M latent-dynamics models differing only in their initial weights."""

    def __init__(self, z_dim, action_dim, members=3, hidden=512, lr=1e-3, seed=0, generator=None):
        gen = generator if generator is not None else torch.Generator().manual_seed(seed)
        self.z_dim = z_dim
        self.action_dim = action_dim
        self.members = [nn.Network(predictor_layers(z_dim, action_dim, hidden), generator=gen)
                        for _ in range(members)]
        self.opts = [nn.Adam(m.params, lr=lr) for m in self.members]

    def __len__(self):
        return len(self.members)

    def _inputs(self, z, a):
        z = torch.as_tensor(np.asarray(z, dtype=np.float32)) if not isinstance(z, torch.Tensor) else z
        a = torch.as_tensor(np.asarray(a, dtype=np.float32)) if not isinstance(a, torch.Tensor) else a
        if z.shape[-1] != self.z_dim or a.shape[-1] != self.action_dim:
            raise ValueError(f"expected latent {self.z_dim} and action {self.action_dim}, "
                             f"got {z.shape[-1]} and {a.shape[-1]}")
        return torch.cat([z, a], dim=-1)

    def predict_mean(self, z, a):
        x = self._inputs(z, a)
        preds = torch.stack([m(x) for m in self.members])
        return preds.mean(dim=0)


@torch.no_grad()
def surprise_reward(ens, z_t, a_t, z_next):
    """MSE between the next latent and the ensemble's mean prediction."""
    z_next = torch.as_tensor(np.asarray(z_next, dtype=np.float32))
    if z_next.shape[-1] != ens.z_dim:
        raise ValueError(f"next latent length {z_next.shape[-1]} != {ens.z_dim}")
    pred = ens.predict_mean(z_t, a_t)
    return float(torch.mean((z_next.to(pred.dtype) - pred) ** 2).item())


def predictor_update(ens, z, a, z_next):
    """Each member takes one Adam step on its own MSE; returns the mean member loss."""
    z = torch.as_tensor(z).detach()
    if z.shape[0] == 0:
        raise ValueError("predictor_update needs a non-empty batch")
    x = ens._inputs(z, torch.as_tensor(a).detach())
    target = torch.as_tensor(z_next).detach()
    total = 0.0
    for member, opt in zip(ens.members, ens.opts):
        loss = torch.mean((member(x) - target) ** 2)
        member.zero_grad()
        loss.backward()
        opt.step()
        total += float(loss.item())
    return total / len(ens.members)
