"""Images, frame stacks and the windowed SSIM metric.

An image is a float32 array of shape ``(3, H, W)`` with values in [0, 1].
A :class:`FrameStack` holds the K most recent images, oldest first, and is
fed to the networks channel-stacked as a ``(3K, H, W)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

DEFAULT_SIZE = 84
DEFAULT_STACK = 3


def to_image(pixels):
    """Convert 8-bit ``(H, W, 3)`` or ``(3, H, W)`` pixels to a [0, 1] image."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3:
        raise ValueError(f"expected a 3-d pixel array, got shape {pixels.shape}")
    if pixels.shape[0] != 3 and pixels.shape[-1] == 3:
        pixels = np.moveaxis(pixels, -1, 0)
    img = pixels.astype(np.float32) / 255.0
    img.setflags(write=False)
    return img


def to_uint8(img):
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class FrameStack:
    frames: tuple

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a frame stack needs at least one frame")
        shape = self.frames[0].shape
        for f in self.frames[1:]:
            if f.shape != shape:
                raise ValueError(f"frame shape {f.shape} differs from {shape}")

    def __len__(self):
        return len(self.frames)

    @property
    def frame_shape(self):
        return self.frames[0].shape

    @property
    def shape(self):
        c, h, w = self.frame_shape
        return (c * len(self.frames), h, w)

    def as_array(self):
        """Channel-stacked ``(3K, H, W)`` float32 copy."""
        return np.concatenate(self.frames, axis=0)


def stack_reset(first, k=DEFAULT_STACK):
    if k < 1:
        raise ValueError(f"stack size must be >= 1, got {k}")
    return FrameStack((first,) * k)


def stack_push(stack, new):
    if new.shape != stack.frame_shape:
        raise ValueError(f"cannot push frame of shape {new.shape} onto stack of {stack.frame_shape}")
    return FrameStack(stack.frames[1:] + (new,))


def _as_chw(x):
    if isinstance(x, FrameStack):
        x = x.as_array()
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ValueError(f"expected (C, H, W) data, got shape {x.shape}")
    return x


def ssim(x, y, window=7, k1=0.01, k2=0.03, data_range=1.0):
    """Mean local SSIM with a uniform ``window`` x ``window`` box, stride 1.

    Statistics are taken over valid window positions only (no padding) and
    averaged over positions and channels. Works on images, frame stacks or
    any ``(C, H, W)`` array.
    """
    a = _as_chw(x)
    b = _as_chw(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if window % 2 == 0 or window < 3 or window > min(a.shape[1], a.shape[2]):
        raise ValueError(f"window must be odd and in [3, {min(a.shape[1:])}], got {window}")
    if k1 <= 0 or k2 <= 0:
        raise ValueError("k1 and k2 must be positive")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    return kernels.ssim_mean(a, b, int(window), c1, c2)


def write_ppm(path, img):
    """Write an image (or ``(H, W, 3)`` uint8 array) as binary PPM (P6)."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    if arr.shape[0] == 3 and arr.shape[-1] != 3:
        arr = np.moveaxis(arr, 0, -1)
    h, w, _ = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_ppm(path):
    """Read a binary PPM written by :func:`write_ppm`; returns ``(H, W, 3)`` uint8."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P6" or int(tokens[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit P6 file")
    w, h = int(tokens[1]), int(tokens[2])
    raw = data[pos + 1:pos + 1 + w * h * 3]
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)


def dump_stack(stack, directory, prefix="frame"):
    """Write every frame of ``stack`` as ``<prefix>_<i>.ppm``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, f in enumerate(stack.frames):
        p = directory / f"{prefix}_{i}.ppm"
        write_ppm(p, f)
        paths.append(p)
    return paths
