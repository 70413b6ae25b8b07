"""Layer-spec networks, Adam and polyak averaging on top of torch tensors.

Networks are described as a list of :class:`LayerSpec` and evaluated
functionally, so parameters live in a flat ``name -> tensor`` dict that the
checkpoint code can walk directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

KINDS = ("conv2d", "deconv2d", "dense", "flatten", "reshape", "relu", "tanh", "sigmoid", "layernorm")
LN_EPS = 1e-8


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    n_in: int = 0
    n_out: int = 0
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    output_padding: int = 0
    shape: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")


def dense(n_in, n_out):
    return LayerSpec("dense", n_in, n_out)


def conv2d(n_in, n_out, kernel=3, stride=1, padding=1):
    return LayerSpec("conv2d", n_in, n_out, kernel, stride, padding)


def deconv2d(n_in, n_out, kernel=3, stride=1, padding=1, output_padding=0):
    return LayerSpec("deconv2d", n_in, n_out, kernel, stride, padding, output_padding)


def layernorm(n):
    return LayerSpec("layernorm", n, n)


def reshape(*shape):
    return LayerSpec("reshape", shape=tuple(shape))


FLATTEN = LayerSpec("flatten")
RELU = LayerSpec("relu")
TANH = LayerSpec("tanh")
SIGMOID = LayerSpec("sigmoid")


def _init_params(spec, idx, gen, dtype):
    out = {}
    if spec.kind == "dense":
        bound = 1.0 / math.sqrt(spec.n_in)
        w = (torch.rand(spec.n_out, spec.n_in, generator=gen, dtype=torch.float64) * 2 - 1) * bound
        out[f"{idx}.weight"] = w.to(dtype)
        out[f"{idx}.bias"] = torch.zeros(spec.n_out, dtype=dtype)
    elif spec.kind in ("conv2d", "deconv2d"):
        k = spec.kernel
        bound = 1.0 / math.sqrt(spec.n_in * k * k)
        shape = (spec.n_out, spec.n_in, k, k) if spec.kind == "conv2d" else (spec.n_in, spec.n_out, k, k)
        w = (torch.rand(*shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound
        out[f"{idx}.weight"] = w.to(dtype)
        out[f"{idx}.bias"] = torch.zeros(spec.n_out, dtype=dtype)
    elif spec.kind == "layernorm":
        out[f"{idx}.gain"] = torch.ones(spec.n_in, dtype=dtype)
        out[f"{idx}.bias"] = torch.zeros(spec.n_in, dtype=dtype)
    return out


class Cache:
    """Handle returned by :meth:`Network.forward` for a later backward pass."""

    def __init__(self, inp, out):
        self.inp = inp
        self.out = out


class Network:
    """A feed-forward stack of layers with named, trainable parameters."""

    def __init__(self, layers, seed=0, dtype=torch.float32, generator=None):
        self.layers = list(layers)
        gen = generator if generator is not None else torch.Generator().manual_seed(seed)
        self.params = {}
        for i, spec in enumerate(self.layers):
            for name, t in _init_params(spec, i, gen, dtype).items():
                self.params[name] = t.requires_grad_(True)

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        return self._run(x)

    def _run(self, x):
        p = self.params
        for i, spec in enumerate(self.layers):
            k = spec.kind
            try:
                if k == "dense":
                    if x.shape[-1] != spec.n_in:
                        raise ValueError(f"expected {spec.n_in} features, got {x.shape[-1]}")
                    x = F.linear(x, p[f"{i}.weight"], p[f"{i}.bias"])
                elif k == "conv2d":
                    if x.dim() != 4 or x.shape[1] != spec.n_in:
                        raise ValueError(f"expected (N, {spec.n_in}, H, W), got {tuple(x.shape)}")
                    x = F.conv2d(x, p[f"{i}.weight"], p[f"{i}.bias"], stride=spec.stride, padding=spec.padding)
                elif k == "deconv2d":
                    if x.dim() != 4 or x.shape[1] != spec.n_in:
                        raise ValueError(f"expected (N, {spec.n_in}, H, W), got {tuple(x.shape)}")
                    x = F.conv_transpose2d(x, p[f"{i}.weight"], p[f"{i}.bias"], stride=spec.stride,
                                           padding=spec.padding, output_padding=spec.output_padding)
                elif k == "flatten":
                    x = x.reshape(x.shape[0], -1)
                elif k == "reshape":
                    x = x.reshape(x.shape[0], *spec.shape)
                elif k == "relu":
                    x = torch.relu(x)
                elif k == "tanh":
                    x = torch.tanh(x)
                elif k == "sigmoid":
                    x = torch.sigmoid(x)
                elif k == "layernorm":
                    if x.shape[-1] != spec.n_in:
                        raise ValueError(f"expected {spec.n_in} features, got {x.shape[-1]}")
                    x = F.layer_norm(x, (spec.n_in,), p[f"{i}.gain"], p[f"{i}.bias"], eps=LN_EPS)
            except (ValueError, RuntimeError) as err:
                raise ValueError(f"layer {i} ({k}): {err}") from None
        return x

    def forward(self, x):
        """Evaluate and keep what :meth:`backward` needs."""
        inp = x.detach().clone().requires_grad_(True)
        out = self._run(inp)
        return out, Cache(inp, out)

    def backward(self, cache, out_grad):
        """Accumulate parameter gradients for ``out_grad`` and return the input gradient."""
        if cache is None or cache.out is None:
            raise RuntimeError("backward called without a live forward cache")
        if out_grad.shape != cache.out.shape:
            raise ValueError(f"output grad shape {tuple(out_grad.shape)} != {tuple(cache.out.shape)}")
        cache.out.backward(out_grad)
        cache.out = None
        return cache.inp.grad

    # -- parameter handling -----------------------------------------------
    def parameters(self):
        return list(self.params.values())

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def copy(self):
        twin = Network.__new__(Network)
        twin.layers = list(self.layers)
        twin.params = {k: v.detach().clone().requires_grad_(True) for k, v in self.params.items()}
        return twin

    def to(self, dtype):
        twin = self.copy()
        twin.params = {k: v.detach().to(dtype).requires_grad_(True) for k, v in twin.params.items()}
        return twin

    def load_(self, tensors):
        with torch.no_grad():
            for k, v in tensors.items():
                if self.params[k].shape != v.shape:
                    raise ValueError(f"shape mismatch for {k}: {tuple(v.shape)} vs {tuple(self.params[k].shape)}")
                self.params[k].copy_(v)

    def num_params(self):
        return sum(t.numel() for t in self.params.values())


class Adam:
    """Bias-corrected Adam over a network's parameter dict."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: torch.zeros_like(v, requires_grad=False) for k, v in params.items()}
        self.v = {k: torch.zeros_like(v, requires_grad=False) for k, v in params.items()}

    @torch.no_grad()
    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m, v = self.m[k], self.v[k]
            m.mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
            v.mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
            denom = (v / bc2).sqrt_().add_(self.eps)
            p.addcdiv_(m, denom, value=-self.lr / bc1)
            p.grad = None

    def state_tensors(self, prefix):
        out = {f"{prefix}.adam.t": torch.tensor(float(self.t))}
        for k in self.params:
            out[f"{prefix}.adam.m.{k}"] = self.m[k]
            out[f"{prefix}.adam.v.{k}"] = self.v[k]
        return out

    def load_state_tensors(self, prefix, tensors):
        self.t = int(tensors[f"{prefix}.adam.t"].item())
        with torch.no_grad():
            for k in self.params:
                self.m[k].copy_(tensors[f"{prefix}.adam.m.{k}"])
                self.v[k].copy_(tensors[f"{prefix}.adam.v.{k}"])


def adam_step(opt):
    opt.step()


@torch.no_grad()
def polyak_update(target, source, tau):
    """target <- tau * source + (1 - tau) * target, element-wise."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    tp = target.params if isinstance(target, Network) else target
    sp = source.params if isinstance(source, Network) else source
    if tp.keys() != sp.keys():
        raise ValueError("target and source have different parameter names")
    for k, t in tp.items():
        s = sp[k]
        if t.shape != s.shape:
            raise ValueError(f"shape mismatch for {k}: {tuple(t.shape)} vs {tuple(s.shape)}")
        t.mul_(1.0 - tau).add_(s, alpha=tau)
