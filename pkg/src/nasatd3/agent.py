"""Twin-critic deterministic actor-critic on autoencoder latents.

Gradient routing:

* the critic loss updates both critics and the encoder;
* the reconstruction loss updates encoder and decoder (``ae_update``);
* the actor sees latents as constants, so it never moves the encoder;
* predictors train on detached latents;
* there is no target encoder; the live encoder serves the target path.

The ``pixel-td3`` variant skips the autoencoder and feeds flattened pixels
straight into actor and critics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from . import nn
from .intrinsic import PredictorEnsemble, predictor_update
from .perception import AutoEncoder, ae_update, as_batch


def actor_layers(n_in, action_dim, hidden=1024):
    return [nn.dense(n_in, hidden), nn.RELU, nn.dense(hidden, hidden), nn.RELU, nn.dense(hidden, action_dim),
            nn.TANH]


def critic_layers(n_in, action_dim, hidden=1024):
    return [nn.dense(n_in + action_dim, hidden), nn.RELU, nn.dense(hidden, hidden), nn.RELU, nn.dense(hidden, 1)]


@dataclass
class TD3Hyper:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    explore_sigma: float = 0.1
    batch_size: int = 128
    G: int = 5

    def __post_init__(self):
        if self.G < 1 or self.policy_delay < 1:
            raise ValueError("G and policy_delay must be >= 1")

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.gamma, cfg.tau, cfg.policy_delay, cfg.target_noise, cfg.noise_clip, cfg.explore_sigma,
                   cfg.batch_size, cfg.G)


@dataclass
class TickResult:
    status: str
    ae_loss: float = float("nan")
    critic_loss: float = float("nan")
    actor_loss: float = float("nan")
    predictor_loss: float = float("nan")
    critic_updates: int = 0
    actor_updates: int = 0


class Agent:
    """All networks and optimizers for one run."""

    def __init__(self, obs_shape, action_dim, variant="nasa-td3", z_dim=200, filters=32, actor_hidden=1024,
                 critic_hidden=1024, predictor_hidden=512, ensemble_size=3, lr_actor=1e-3, lr_critic=1e-3,
                 lr_encoder=1e-3, lr_decoder=1e-3, lr_predictor=1e-3, hyper=None, seed=0):
        self.obs_shape = tuple(obs_shape)
        self.action_dim = action_dim
        self.variant = variant
        self.hyper = hyper or TD3Hyper()
        gen = torch.Generator().manual_seed(seed)
        self.noise_gen = torch.Generator().manual_seed(seed + 7919)
        self.ae = None
        self.ensemble = None
        if variant == "pixel-td3":
            feat = int(np.prod(self.obs_shape))
        else:
            self.ae = AutoEncoder(self.obs_shape, z_dim, filters, lr_encoder, lr_decoder, generator=gen)
            feat = z_dim
            if variant == "nasa-td3":
                self.ensemble = PredictorEnsemble(z_dim, action_dim, ensemble_size, predictor_hidden,
                                                  lr_predictor, generator=gen)
        self.feature_dim = feat
        self.actor = nn.Network(actor_layers(feat, action_dim, actor_hidden), generator=gen)
        self.critic1 = nn.Network(critic_layers(feat, action_dim, critic_hidden), generator=gen)
        self.critic2 = nn.Network(critic_layers(feat, action_dim, critic_hidden), generator=gen)
        self.actor_t = self.actor.copy()
        self.critic1_t = self.critic1.copy()
        self.critic2_t = self.critic2.copy()
        self.actor_opt = nn.Adam(self.actor.params, lr=lr_actor)
        self.critic1_opt = nn.Adam(self.critic1.params, lr=lr_critic)
        self.critic2_opt = nn.Adam(self.critic2.params, lr=lr_critic)

    @classmethod
    def from_config(cls, cfg, action_dim, seed=None):
        return cls(cfg.obs_shape, action_dim, cfg.variant, cfg.z_dim, cfg.filters, cfg.actor_hidden,
                   cfg.critic_hidden, cfg.predictor_hidden, cfg.ensemble_size, cfg.lr_actor, cfg.lr_critic,
                   cfg.lr_encoder, cfg.lr_decoder, cfg.lr_predictor, TD3Hyper.from_config(cfg),
                   cfg.seed if seed is None else seed)

    # -- features ---------------------------------------------------------
    def features(self, obs):
        """Latent (with encoder graph) or flattened pixels for a torch batch."""
        if self.ae is None:
            return obs.reshape(obs.shape[0], -1)
        return self.ae.encode_batch(obs)

    def named_networks(self):
        nets = {}
        if self.ae is not None:
            nets["enc"] = (self.ae.encoder, self.ae.enc_opt)
            nets["dec"] = (self.ae.decoder, self.ae.dec_opt)
        nets["actor"] = (self.actor, self.actor_opt)
        nets["critic1"] = (self.critic1, self.critic1_opt)
        nets["critic2"] = (self.critic2, self.critic2_opt)
        nets["target.actor"] = (self.actor_t, None)
        nets["target.critic1"] = (self.critic1_t, None)
        nets["target.critic2"] = (self.critic2_t, None)
        if self.ensemble is not None:
            for i, (m, o) in enumerate(zip(self.ensemble.members, self.ensemble.opts)):
                nets[f"pred{i}"] = (m, o)
        return nets

    def state_tensors(self):
        out = {}
        for prefix, (net, opt) in self.named_networks().items():
            for k, v in net.params.items():
                out[f"{prefix}.{k}"] = v.detach()
            if opt is not None:
                out.update(opt.state_tensors(prefix))
        out["noise_gen"] = torch.from_numpy(self.noise_gen.get_state().numpy().astype(np.float32))
        return out

    def load_state_tensors(self, tensors):
        tensors = {k: torch.as_tensor(np.asarray(v)) for k, v in tensors.items()}
        for prefix, (net, opt) in self.named_networks().items():
            net.load_({k: tensors[f"{prefix}.{k}"] for k in net.params})
            if opt is not None:
                opt.load_state_tensors(prefix, tensors)
        if "noise_gen" in tensors:
            self.noise_gen.set_state(tensors["noise_gen"].to(torch.uint8))


def _q_input(feat, a):
    return torch.cat([feat, a], dim=-1)


@torch.no_grad()
def select_action(agent, s, explore=False, rng=None):
    """Deterministic policy action, plus clipped Gaussian noise when exploring."""
    a = agent.actor(agent.features(as_batch(s)))[0].numpy().astype(np.float64)
    if explore and agent.hyper.explore_sigma > 0:
        a = np.clip(a + rng.normal(0.0, agent.hyper.explore_sigma, size=a.shape), -1.0, 1.0)
    return a


def smoothing_noise(agent, shape):
    h = agent.hyper
    eps = torch.randn(shape, generator=agent.noise_gen) * h.target_noise
    return eps.clamp(-h.noise_clip, h.noise_clip)


@torch.no_grad()
def critic_target(agent, next_obs, rewards, dones, next_feat=None):
    """Clipped double-Q bootstrap target; also returns the detached next features."""
    h = agent.hyper
    z_next = agent.features(next_obs) if next_feat is None else next_feat
    a_next = (agent.actor_t(z_next) + smoothing_noise(agent, (z_next.shape[0], agent.action_dim))).clamp(-1, 1)
    q1 = agent.critic1_t(_q_input(z_next, a_next))
    q2 = agent.critic2_t(_q_input(z_next, a_next))
    y = rewards.reshape(-1, 1) + h.gamma * (1.0 - dones.reshape(-1, 1)) * torch.minimum(q1, q2)
    return y, z_next


def critic_update(agent, batch):
    """One step on both critics (and the encoder, through the critic loss).

    Returns the loss and the detached current / next features used.
    """
    obs, actions, rewards, next_obs, dones = _tensors(batch)
    if obs.shape[0] == 0:
        raise ValueError("critic_update needs a non-empty batch")
    y, z_next = critic_target(agent, next_obs, rewards, dones)
    z = agent.features(obs)
    sa = _q_input(z, actions)
    loss = torch.mean((agent.critic1(sa) - y) ** 2) + torch.mean((agent.critic2(sa) - y) ** 2)
    agent.critic1.zero_grad()
    agent.critic2.zero_grad()
    if agent.ae is not None:
        agent.ae.encoder.zero_grad()
    loss.backward()
    agent.critic1_opt.step()
    agent.critic2_opt.step()
    if agent.ae is not None:
        agent.ae.enc_opt.step()
    return float(loss.item()), z.detach(), z_next


def actor_update(agent, obs):
    """Ascend Q1(z, actor(z)) with z held constant; only the actor moves."""
    with torch.no_grad():
        z = agent.features(as_batch(obs))
    q = agent.critic1(_q_input(z, agent.actor(z)))
    loss = -q.mean()
    params = agent.actor.parameters()
    grads = torch.autograd.grad(loss, params)
    for p, g in zip(params, grads):
        p.grad = g
    agent.actor_opt.step()
    return float(loss.item())


def target_sync(agent, tau=None):
    tau = agent.hyper.tau if tau is None else tau
    nn.polyak_update(agent.actor_t, agent.actor, tau)
    nn.polyak_update(agent.critic1_t, agent.critic1, tau)
    nn.polyak_update(agent.critic2_t, agent.critic2, tau)


def _tensors(batch):
    return (torch.from_numpy(np.ascontiguousarray(batch.obs, dtype=np.float32)),
            torch.from_numpy(np.ascontiguousarray(batch.actions, dtype=np.float32)),
            torch.from_numpy(np.asarray(batch.rewards, dtype=np.float32)),
            torch.from_numpy(np.ascontiguousarray(batch.next_obs, dtype=np.float32)),
            torch.from_numpy(np.asarray(batch.dones, dtype=np.float32)))


def train_tick(agent, buffer, rng):
    """G rounds of {sample; ae; critic; predictor; every policy_delay-th: actor + targets}."""
    h = agent.hyper
    if len(buffer) < h.batch_size:
        return TickResult("warming up")
    sums = {"ae": [], "critic": [], "actor": [], "pred": []}
    n_actor = 0
    for i in range(h.G):
        batch = buffer.sample(h.batch_size, rng)
        if agent.ae is not None:
            sums["ae"].append(ae_update(agent.ae, batch.obs))
        c_loss, z, z_next = critic_update(agent, batch)
        sums["critic"].append(c_loss)
        if agent.ensemble is not None:
            sums["pred"].append(predictor_update(agent.ensemble, z, torch.from_numpy(batch.actions), z_next))
        if (i + 1) % h.policy_delay == 0:
            sums["actor"].append(actor_update(agent, batch.obs))
            target_sync(agent)
            n_actor += 1

    def mean(v):
        return float(np.mean(v)) if v else float("nan")

    return TickResult("trained", mean(sums["ae"]), mean(sums["critic"]), mean(sums["actor"]), mean(sums["pred"]),
                      h.G, n_actor)
