"""Finite-difference gradient checks for layer-spec networks (float64)."""

import contextlib
from unittest import mock

import numpy as np
import torch
from oracles import central_difference

from nasatd3 import nn

H = 1e-5
FLOOR = 1e-6


def rel_error(a, n, noise=0.0):
    """Relative error, after discounting the oracle's own rounding error."""
    return max(abs(a - n) - noise, 0.0) / max(abs(a), abs(n), FLOOR)


@contextlib.contextmanager
def relu_signs():
    """Record the on/off pattern of every relu evaluated inside the block."""
    seen = []
    real = torch.relu

    def spy(x):
        seen.append((x > 0).numpy().tobytes())
        return real(x)

    with mock.patch("torch.relu", spy):
        yield seen


class Report(float):
    """Worst relative error, carrying how many entries were checked and skipped."""

    checked = 0
    skipped = 0


def check_network(net, x, seed=0, max_entries=None, check_input=True):
    """Max relative error between backward() and central differences.

    The scalar loss is <w, net(x)> for a fixed random w, so every output
    contributes with a different weight. Entries whose +-h evaluations fall on
    different relu pieces are skipped: there the central difference is not an
    estimate of the derivative.
    """
    net = net.to(torch.float64)
    x = torch.as_tensor(x, dtype=torch.float64)
    gen = torch.Generator().manual_seed(seed)
    out, cache = net.forward(x)
    w = torch.randn(out.shape, generator=gen, dtype=torch.float64)
    net.zero_grad()
    gx = net.backward(cache, w)

    def loss_of(inp):
        with relu_signs() as signs:
            value = float((net(inp) * w).sum())
        return value, tuple(signs)

    rng = np.random.default_rng(seed)
    worst, checked, skipped = 0.0, 0, 0
    pairs = [(lambda: loss_of(x), net.params, lambda name, i: net.params[name].grad.view(-1)[i].item())]
    if check_input:
        xin = {"x": x.clone()}
        pairs.append((lambda: loss_of(xin["x"]), xin, lambda _, i: gx.reshape(-1)[i].item()))
    for f, params, analytic in pairs:
        for name, i, num, noise in central_difference(f, params, H, max_entries, rng):
            if num is None:
                skipped += 1
                continue
            checked += 1
            worst = max(worst, rel_error(analytic(name, i), num, noise))
    rep = Report(worst)
    rep.checked, rep.skipped = checked, skipped
    return rep


def single_layer(spec, extra=None, seed=0):
    layers = [spec] + (extra or [])
    return nn.Network(layers, seed=seed, dtype=torch.float64)
