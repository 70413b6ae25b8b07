import math

import numpy as np
import pytest
import torch
from gradcheck import check_network, single_layer
from oracles import matmul

from nasatd3 import nn


def test_dense_identity():
    net = nn.Network([nn.dense(4, 4)])
    with torch.no_grad():
        net.params["0.weight"].copy_(torch.eye(4))
    v = torch.tensor([[1.0, -2.0, 3.0, 0.5]])
    assert torch.equal(net(v), v)


def test_relu_values():
    net = nn.Network([nn.RELU])
    assert net(torch.tensor([[-1.0, 0.0, 2.0]])).tolist() == [[0.0, 0.0, 2.0]]


def test_two_layer_matches_hand_matmul():
    net = nn.Network([nn.dense(5, 7), nn.RELU, nn.dense(7, 3)], seed=3, dtype=torch.float64)
    with torch.no_grad():
        net.params["0.bias"].uniform_(-0.5, 0.5, generator=torch.Generator().manual_seed(1))
        net.params["2.bias"].uniform_(-0.5, 0.5, generator=torch.Generator().manual_seed(2))
    x = np.random.default_rng(0).normal(size=(4, 5))
    W1 = net.params["0.weight"].detach().numpy().T.tolist()
    b1 = net.params["0.bias"].detach().numpy().tolist()
    W2 = net.params["2.weight"].detach().numpy().T.tolist()
    b2 = net.params["2.bias"].detach().numpy().tolist()
    h = [[max(v + b, 0.0) for v, b in zip(row, b1)] for row in matmul(x.tolist(), W1)]
    expected = [[v + b for v, b in zip(row, b2)] for row in matmul(h, W2)]
    got = net(torch.from_numpy(x)).detach().numpy()
    assert np.allclose(got, expected, rtol=0, atol=1e-12)


def test_init_bounds_and_zero_bias():
    net = nn.Network([nn.dense(100, 20), nn.conv2d(3, 8)], seed=0)
    assert net.params["0.weight"].abs().max() <= 1 / math.sqrt(100)
    assert net.params["1.weight"].abs().max() <= 1 / math.sqrt(27)
    assert not net.params["0.bias"].any() and not net.params["1.bias"].any()


def test_same_seed_same_params():
    a = nn.Network([nn.dense(6, 6)], seed=5)
    b = nn.Network([nn.dense(6, 6)], seed=5)
    assert torch.equal(a.params["0.weight"], b.params["0.weight"])


def test_shape_error_names_layer():
    net = nn.Network([nn.dense(4, 3), nn.RELU, nn.dense(5, 2)])
    with pytest.raises(ValueError, match="layer 2 \\(dense\\)"):
        net(torch.zeros(1, 4))
    conv = nn.Network([nn.conv2d(3, 4)])
    with pytest.raises(ValueError, match="layer 0 \\(conv2d\\)"):
        conv(torch.zeros(1, 2, 5, 5))


def test_backward_requires_cache():
    net = nn.Network([nn.dense(3, 2)])
    out, cache = net.forward(torch.zeros(1, 3))
    net.backward(cache, torch.ones_like(out))
    with pytest.raises(RuntimeError):
        net.backward(cache, torch.ones_like(out))
    with pytest.raises(RuntimeError):
        net.backward(None, torch.ones_like(out))


def test_zero_output_grad_gives_zero_param_grads():
    net = nn.Network([nn.dense(4, 8), nn.TANH, nn.dense(8, 2)])
    out, cache = net.forward(torch.randn(3, 4))
    net.backward(cache, torch.zeros_like(out))
    assert all(not p.grad.any() for p in net.parameters())


def test_dense_weight_grad_is_outer_product():
    net = nn.Network([nn.dense(3, 2)], dtype=torch.float64)
    x = torch.tensor([[0.5, -1.0, 2.0]], dtype=torch.float64)
    g = torch.tensor([[3.0, -0.25]], dtype=torch.float64)
    out, cache = net.forward(x)
    net.backward(cache, g)
    assert torch.allclose(net.params["0.weight"].grad, torch.outer(g[0], x[0]))
    assert torch.allclose(net.params["0.bias"].grad, g[0])


def test_five_hundred_param_network_finite_differences():
    net = nn.Network([nn.dense(10, 20), nn.TANH, nn.dense(20, 12), nn.SIGMOID, nn.dense(12, 4)], seed=2,
                     dtype=torch.float64)
    assert net.num_params() >= 500
    x = torch.randn(3, 10, generator=torch.Generator().manual_seed(9), dtype=torch.float64)
    assert check_network(net, x) < 1e-4


LAYER_CASES = {
    "dense": (nn.dense(6, 5), (3, 6)),
    "conv2d": (nn.conv2d(2, 3, stride=2), (2, 2, 7, 7)),
    "deconv2d": (nn.deconv2d(3, 2, stride=2, output_padding=1), (2, 3, 4, 4)),
    "flatten": (nn.FLATTEN, (2, 2, 3, 3)),
    "reshape": (nn.reshape(2, 3), (2, 6)),
    "relu": (nn.RELU, (4, 7)),
    "tanh": (nn.TANH, (4, 7)),
    "sigmoid": (nn.SIGMOID, (4, 7)),
    "layernorm": (nn.layernorm(9), (4, 9)),
}


@pytest.mark.parametrize("kind", sorted(LAYER_CASES))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_layer_finite_differences(kind, seed):
    spec, shape = LAYER_CASES[kind]
    net = single_layer(spec, seed=seed)
    gen = torch.Generator().manual_seed(100 + seed)
    x = torch.randn(shape, generator=gen, dtype=torch.float64)
    if kind == "layernorm":
        with torch.no_grad():
            net.params["0.gain"].normal_(1.0, 0.3, generator=gen)
            net.params["0.bias"].normal_(0.0, 0.3, generator=gen)
    assert check_network(net, x, seed=seed) < 1e-4


def test_layernorm_normalizes():
    net = nn.Network([nn.layernorm(50)], dtype=torch.float64)
    x = torch.randn(8, 50, dtype=torch.float64) * 3 + 2
    y = net(x)
    assert torch.allclose(y.mean(dim=1), torch.zeros(8, dtype=torch.float64), atol=1e-6)
    assert torch.allclose(y.var(dim=1, unbiased=False), torch.ones(8, dtype=torch.float64), atol=1e-6)


def test_adam_first_step_value():
    p = {"w": torch.zeros(1, requires_grad=True)}
    opt = nn.Adam(p, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8)
    p["w"].grad = torch.ones(1)
    nn.adam_step(opt)
    assert opt.t == 1
    # m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
    assert p["w"].item() == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-6)
    assert p["w"].item() == pytest.approx(-9.99999e-4, rel=1e-5)
    assert p["w"].grad is None


def test_adam_zero_gradient_keeps_param():
    p = {"w": torch.full((3,), 0.7, requires_grad=True)}
    opt = nn.Adam(p)
    p["w"].grad = torch.zeros(3)
    opt.step()
    assert torch.equal(p["w"].detach(), torch.full((3,), 0.7))
    assert opt.t == 1


def test_adam_identical_params_identical_updates():
    p = {"a": torch.tensor([0.3, -0.2], requires_grad=True), "b": torch.tensor([0.3, -0.2], requires_grad=True)}
    opt = nn.Adam(p)
    for _ in range(5):
        g = torch.tensor([0.5, -1.5])
        p["a"].grad = g.clone()
        p["b"].grad = g.clone()
        opt.step()
    assert torch.equal(p["a"], p["b"])


def test_adam_moment_shapes():
    net = nn.Network([nn.conv2d(3, 4), nn.FLATTEN])
    opt = nn.Adam(net.params)
    for k, v in net.params.items():
        assert opt.m[k].shape == v.shape == opt.v[k].shape


def test_polyak():
    src = {"w": torch.full((4,), 2.0)}
    tgt = {"w": torch.zeros(4)}
    nn.polyak_update(tgt, src, 0.5)
    assert torch.equal(tgt["w"], torch.ones(4))
    nn.polyak_update(tgt, src, 0.0)
    assert torch.equal(tgt["w"], torch.ones(4))
    rnd = {"w": torch.randn(4)}
    nn.polyak_update(tgt, rnd, 1.0)
    assert torch.equal(tgt["w"], rnd["w"])


def test_polyak_errors():
    with pytest.raises(ValueError):
        nn.polyak_update({"w": torch.zeros(2)}, {"w": torch.zeros(3)}, 0.5)
    with pytest.raises(ValueError):
        nn.polyak_update({"w": torch.zeros(2)}, {"w": torch.zeros(2)}, 1.5)


def test_forward_backward_update_deterministic():
    def run():
        net = nn.Network([nn.conv2d(3, 4, stride=2), nn.RELU, nn.FLATTEN, nn.dense(4 * 4 * 4, 2)], seed=11)
        opt = nn.Adam(net.params)
        x = torch.randn(5, 3, 8, 8, generator=torch.Generator().manual_seed(4))
        for _ in range(3):
            out, cache = net.forward(x)
            net.backward(cache, torch.ones_like(out))
            opt.step()
        return torch.cat([p.detach().reshape(-1) for p in net.parameters()])

    assert torch.equal(run(), run())


def test_gradient_check_catches_small_error(monkeypatch):
    net = nn.Network([nn.dense(5, 8), nn.RELU, nn.dense(8, 3), nn.layernorm(3)], seed=4, dtype=torch.float64)
    x = torch.randn(4, 5, generator=torch.Generator().manual_seed(4), dtype=torch.float64)
    assert check_network(net, x) < 1e-4
    real = nn.Network.backward

    def skewed(self, cache, g):
        gx = real(self, cache, g)
        self.params["2.weight"].grad.mul_(1.001)
        return gx

    monkeypatch.setattr(nn.Network, "backward", skewed)
    assert check_network(net, x) > 1e-4
