"""Convolutional autoencoder shared by the policy and the novelty signal."""

from __future__ import annotations

import numpy as np
import torch

from . import nn
from .imaging import FrameStack


def conv_out(size, stride=2):
    return (size - 1) // stride + 1


def encoder_layers(obs_shape, z_dim, filters=32, n_conv=4):
    c, h, w = obs_shape
    layers = [nn.conv2d(c, filters, stride=2), nn.RELU]
    for _ in range(n_conv - 1):
        layers += [nn.conv2d(filters, filters), nn.RELU]
    flat = filters * conv_out(h) * conv_out(w)
    return layers + [nn.FLATTEN, nn.dense(flat, z_dim), nn.layernorm(z_dim), nn.TANH]


def decoder_layers(obs_shape, z_dim, filters=32, n_conv=4):
    c, h, w = obs_shape
    h2, w2 = conv_out(h), conv_out(w)
    if h - 2 * h2 + 1 != w - 2 * w2 + 1:
        raise ValueError(f"unsupported observation shape {obs_shape}")
    layers = [nn.dense(z_dim, filters * h2 * w2), nn.reshape(filters, h2, w2), nn.RELU]
    for _ in range(n_conv - 1):
        layers += [nn.deconv2d(filters, filters), nn.RELU]
    layers += [nn.deconv2d(filters, c, stride=2, output_padding=h - 2 * h2 + 1), nn.SIGMOID]
    return layers


def as_batch(obs):
    """FrameStack, ``(C, H, W)`` or ``(N, C, H, W)`` input -> float32 torch batch."""
    if isinstance(obs, FrameStack):
        obs = obs.as_array()
    elif isinstance(obs, (list, tuple)):
        if not obs:
            return torch.zeros((0,))
        obs = np.stack([o.as_array() if isinstance(o, FrameStack) else o for o in obs])
    if isinstance(obs, np.ndarray):
        obs = torch.from_numpy(np.ascontiguousarray(obs, dtype=np.float32))
    if obs.dim() == 3:
        obs = obs.unsqueeze(0)
    return obs


class AutoEncoder:
    def __init__(self, obs_shape, z_dim=200, filters=32, lr_encoder=1e-3, lr_decoder=1e-3, seed=0,
                 generator=None):
        self.obs_shape = tuple(obs_shape)
        self.z_dim = z_dim
        gen = generator if generator is not None else torch.Generator().manual_seed(seed)
        self.encoder = nn.Network(encoder_layers(self.obs_shape, z_dim, filters), generator=gen)
        self.decoder = nn.Network(decoder_layers(self.obs_shape, z_dim, filters), generator=gen)
        self.enc_opt = nn.Adam(self.encoder.params, lr=lr_encoder)
        self.dec_opt = nn.Adam(self.decoder.params, lr=lr_decoder)

    def check(self, x):
        if tuple(x.shape[1:]) != self.obs_shape:
            raise ValueError(f"observation shape {tuple(x.shape[1:])} != configured {self.obs_shape}")

    def encode_batch(self, x):
        self.check(x)
        return self.encoder(x)

    def decode_batch(self, z):
        if z.shape[-1] != self.z_dim:
            raise ValueError(f"latent length {z.shape[-1]} != z_dim {self.z_dim}")
        return self.decoder(z)


@torch.no_grad()
def encode(ae, s):
    """Latent vector for one observation (numpy float32, length z_dim)."""
    return ae.encode_batch(as_batch(s))[0].numpy()


@torch.no_grad()
def decode(ae, z):
    """Reconstruction ``(3K, H, W)`` of one latent vector."""
    z = torch.as_tensor(np.asarray(z, dtype=np.float32))
    if z.dim() != 1:
        raise ValueError("decode expects a single latent vector")
    return ae.decode_batch(z.unsqueeze(0))[0].numpy()


def reconstruction_loss(ae, x):
    return torch.mean((ae.decode_batch(ae.encode_batch(x)) - x) ** 2)


def ae_update(ae, batch):
    """One Adam step on encoder and decoder minimizing pixel MSE; returns pre-step loss."""
    x = as_batch(batch)
    if x.shape[0] == 0:
        raise ValueError("ae_update needs a non-empty batch")
    loss = reconstruction_loss(ae, x)
    ae.encoder.zero_grad()
    ae.decoder.zero_grad()
    loss.backward()
    ae.enc_opt.step()
    ae.dec_opt.step()
    return float(loss.item())
