import hashlib

import numpy as np
import pytest
import torch

from nasatd3.imaging import FrameStack, stack_reset, to_image
from nasatd3.perception import AutoEncoder, ae_update, as_batch, decode, encode, reconstruction_loss


def digest(net):
    h = hashlib.sha256()
    for k, v in sorted(net.params.items()):
        h.update(v.detach().numpy().tobytes())
    return h.hexdigest()


def random_stack(rng, size=16, k=3):
    return FrameStack(tuple(to_image((rng.random((3, size, size)) * 255).astype(np.uint8)) for _ in range(k)))


def structured_stack(size=16, k=3, shift=0):
    yy, xx = np.mgrid[0:size, 0:size]
    frames = []
    for i in range(k):
        r = ((xx + shift + i) % 8 < 4) * 200
        g = ((yy + shift) % 6 < 3) * 150
        b = np.full_like(r, 60)
        frames.append(to_image(np.stack([r, g, b]).astype(np.uint8)))
    return FrameStack(tuple(frames))


def test_default_architecture_shapes():
    ae = AutoEncoder((9, 84, 84), z_dim=200)
    kinds = [layer.kind for layer in ae.encoder.layers]
    assert kinds.count("conv2d") == 4
    assert kinds[-3:] == ["dense", "layernorm", "tanh"]
    assert all(layer.n_out == 32 and layer.kernel == 3 for layer in ae.encoder.layers if layer.kind == "conv2d")
    assert [layer.kind for layer in ae.decoder.layers].count("deconv2d") == 4
    assert ae.decoder.layers[-1].kind == "sigmoid"
    x = torch.rand(2, 9, 84, 84)
    z = ae.encode_batch(x)
    assert z.shape == (2, 200)
    assert ae.decode_batch(z).shape == (2, 9, 84, 84)


@pytest.mark.parametrize("shape", [(9, 84, 84), (9, 33, 33), (3, 16, 16), (6, 21, 21)])
def test_round_trip_shape(shape):
    ae = AutoEncoder(shape, z_dim=12, filters=4)
    x = torch.rand(3, *shape)
    assert ae.decode_batch(ae.encode_batch(x)).shape == x.shape


def test_encode_range_and_determinism(rng):
    ae = AutoEncoder((9, 16, 16), z_dim=20, filters=8, seed=1)
    for _ in range(100):
        s = random_stack(rng)
        z = encode(ae, s)
        assert z.shape == (20,)
        assert np.all(np.abs(z) < 1)
    s = random_stack(rng)
    assert np.array_equal(encode(ae, s), encode(ae, s))


def test_decode_shape_and_range(rng):
    ae = AutoEncoder((9, 16, 16), z_dim=20, filters=8)
    out = decode(ae, rng.uniform(-1, 1, 20))
    assert out.shape == (9, 16, 16)
    assert np.all((out > 0) & (out < 1))
    with pytest.raises(ValueError):
        decode(ae, np.zeros(19))


def test_encode_rejects_wrong_shape(rng):
    ae = AutoEncoder((9, 16, 16), z_dim=8, filters=4)
    with pytest.raises(ValueError):
        encode(ae, random_stack(rng, size=18))


def test_loss_decreases_on_identical_images():
    ae = AutoEncoder((9, 16, 16), z_dim=16, filters=8, seed=0)
    batch = np.stack([structured_stack().as_array()] * 8)
    losses = [ae_update(ae, batch) for _ in range(200)]
    assert all(v >= 0 for v in losses)
    assert losses[-1] < losses[0]


def test_zero_learning_rate_freezes_everything():
    ae = AutoEncoder((9, 16, 16), z_dim=8, filters=4, lr_encoder=0.0, lr_decoder=0.0)
    batch = np.stack([structured_stack().as_array()] * 4)
    before = (digest(ae.encoder), digest(ae.decoder))
    losses = [ae_update(ae, batch) for _ in range(5)]
    assert (digest(ae.encoder), digest(ae.decoder)) == before
    assert len(set(losses)) == 1


def test_empty_batch_rejected():
    ae = AutoEncoder((9, 16, 16), z_dim=8, filters=4)
    with pytest.raises(ValueError):
        ae_update(ae, np.zeros((0, 9, 16, 16), dtype=np.float32))
    with pytest.raises(ValueError):
        ae_update(ae, [])


def test_update_moves_conv_and_dense_layers_of_encoder():
    ae = AutoEncoder((9, 16, 16), z_dim=8, filters=4)
    before = {k: v.detach().clone() for k, v in ae.encoder.params.items()}
    ae_update(ae, np.stack([structured_stack().as_array()] * 4))
    changed = {k for k, v in ae.encoder.params.items() if not torch.equal(v, before[k])}
    assert "0.weight" in changed  # first conv
    dense_idx = [i for i, layer in enumerate(ae.encoder.layers) if layer.kind == "dense"][0]
    assert f"{dense_idx}.weight" in changed


def test_overfit_single_image():
    torch.manual_seed(0)
    ae = AutoEncoder((9, 16, 16), z_dim=16, filters=16, seed=3)
    s = structured_stack()
    x = as_batch(s)
    for _ in range(1500):
        ae_update(ae, x)
    recon = decode(ae, encode(ae, s))
    assert float(np.mean((recon - s.as_array()) ** 2)) < 1e-3


def test_fixed_dataset_loss_halves_after_2000_updates():
    rng = np.random.default_rng(5)
    data = torch.from_numpy(np.stack([structured_stack(shift=int(rng.integers(0, 8))).as_array()
                                      for _ in range(32)]))
    ae = AutoEncoder((9, 16, 16), z_dim=16, filters=8, seed=4)
    with torch.no_grad():
        initial = float(reconstruction_loss(ae, data))
    for _ in range(2000):
        ae_update(ae, data[rng.integers(0, 32, size=8)])
    with torch.no_grad():
        final = float(reconstruction_loss(ae, data))
    assert final <= 0.5 * initial


def test_framestack_batch_input():
    ae = AutoEncoder((9, 16, 16), z_dim=8, filters=4)
    s = stack_reset(structured_stack().frames[0], 3)
    assert ae_update(ae, [s, s]) >= 0
