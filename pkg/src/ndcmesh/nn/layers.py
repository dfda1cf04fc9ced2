"""Neural network layers with explicit forward and backward passes.

Everything is plain numpy. Convolutions act on (C, D, H, W) tensors,
linear layers on (..., features) arrays. Each layer caches what its
backward pass needs, so forward must be called before backward and a
layer instance processes one input at a time. Parameter gradients
accumulate into Param.grad until zero_grad(), which lets a shared
module sum contributions from several forward passes.

Weights use Kaiming fan-in initialization matched to the leaky ReLU
slope; biases start at zero. Arrays keep whatever dtype the layer was
built with (float32 for training, float64 for gradient checking).
"""

import math

import numpy as np

from ..errors import ShapeError

LEAKY_SLOPE = 0.01


class Param:
    """A trainable array together with its accumulated gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)


def _kaiming_std(fan_in: int, slope: float = LEAKY_SLOPE) -> float:
    return math.sqrt(2.0 / ((1.0 + slope * slope) * fan_in))


class Layer:
    """Base class; stateless layers only need forward/backward."""

    def params(self) -> list:
        return []

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad[...] = 0.0


class Conv3d(Layer):
    """3D cross-correlation with kernel size 1 or 3, stride 1.

    Kernel size 3 zero-pads by one voxel so the spatial shape is
    preserved; kernel size 1 is a per-voxel channel mix. Weights are
    stored as (out, in, kz, ky, kx).
    """

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 rng: np.random.Generator, dtype=np.float32):
        if kernel not in (1, 3):
            raise ValueError(f"kernel must be 1 or 3, got {kernel}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        std = _kaiming_std(in_channels * kernel ** 3)
        w = rng.normal(0.0, std, size=(out_channels, in_channels, kernel, kernel, kernel))
        self.weight = Param(w.astype(dtype))
        self.bias = Param(np.zeros(out_channels, dtype=dtype))
        self._x = None
        self._xp = None

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[0] != self.in_channels:
            raise ShapeError(
                f"conv input must be ({self.in_channels}, D, H, W), got {x.shape}")
        _, d, h, w = x.shape
        wv = self.weight.value
        if self.kernel == 1:
            self._x = x
            y = np.tensordot(wv[:, :, 0, 0, 0], x, axes=1)
        else:
            xp = np.zeros((self.in_channels, d + 2, h + 2, w + 2), dtype=x.dtype)
            xp[:, 1:-1, 1:-1, 1:-1] = x
            self._xp = xp
            y = np.zeros((self.out_channels, d, h, w), dtype=x.dtype)
            for dz in range(3):
                for dy in range(3):
                    for dx in range(3):
                        y += np.tensordot(
                            wv[:, :, dz, dy, dx],
                            xp[:, dz:dz + d, dy:dy + h, dx:dx + w],
                            axes=1)
        return y + self.bias.value[:, None, None, None]

    def backward(self, gy: np.ndarray) -> np.ndarray:
        self.bias.grad += gy.sum(axis=(1, 2, 3))
        wv = self.weight.value
        if self.kernel == 1:
            x = self._x
            self.weight.grad[:, :, 0, 0, 0] += np.tensordot(
                gy, x, axes=([1, 2, 3], [1, 2, 3]))
            return np.tensordot(wv[:, :, 0, 0, 0].T, gy, axes=1)
        xp = self._xp
        _, d, h, w = gy.shape
        gxp = np.zeros_like(xp)
        for dz in range(3):
            for dy in range(3):
                for dx in range(3):
                    window = xp[:, dz:dz + d, dy:dy + h, dx:dx + w]
                    self.weight.grad[:, :, dz, dy, dx] += np.tensordot(
                        gy, window, axes=([1, 2, 3], [1, 2, 3]))
                    gxp[:, dz:dz + d, dy:dy + h, dx:dx + w] += np.tensordot(
                        wv[:, :, dz, dy, dx].T, gy, axes=1)
        return gxp[:, 1:-1, 1:-1, 1:-1]


class Linear(Layer):
    """Affine map on the trailing axis: y = x @ W.T + b."""

    def __init__(self, in_features: int, out_features: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        std = _kaiming_std(in_features)
        w = rng.normal(0.0, std, size=(out_features, in_features))
        self.weight = Param(w.astype(dtype))
        self.bias = Param(np.zeros(out_features, dtype=dtype))
        self._x = None

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.in_features:
            raise ShapeError(
                f"linear input must end in {self.in_features} features, got {x.shape}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, gy: np.ndarray) -> np.ndarray:
        flat_g = gy.reshape(-1, self.out_features)
        flat_x = self._x.reshape(-1, self.in_features)
        self.weight.grad += flat_g.T @ flat_x
        self.bias.grad += flat_g.sum(axis=0)
        return gy @ self.weight.value


class LeakyReLU(Layer):
    def __init__(self, slope: float = LEAKY_SLOPE):
        self.slope = slope
        self._pos = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._pos = x >= 0
        return np.where(self._pos, x, self.slope * x)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        return np.where(self._pos, gy, self.slope * gy)


class Sigmoid(Layer):
    def __init__(self):
        self._y = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = sigmoid(x)
        self._y = y
        return y

    def backward(self, gy: np.ndarray) -> np.ndarray:
        y = self._y
        return gy * y * (1.0 - y)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x)
    out = np.empty_like(x, dtype=x.dtype if x.dtype.kind == "f" else np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class ResBlockFC(Layer):
    """Residual block of two linear layers: y = lrelu(x + fc2(lrelu(fc1(x))))."""

    def __init__(self, channels: int, rng: np.random.Generator, dtype=np.float32):
        self.channels = channels
        self.fc1 = Linear(channels, channels, rng, dtype)
        self.act1 = LeakyReLU()
        self.fc2 = Linear(channels, channels, rng, dtype)
        self.act2 = LeakyReLU()

    def params(self):
        return self.fc1.params() + self.fc2.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.act1.forward(self.fc1.forward(x))
        return self.act2.forward(x + self.fc2.forward(h))

    def backward(self, gy: np.ndarray) -> np.ndarray:
        gz = self.act2.backward(gy)
        gh = self.fc2.backward(gz)
        return gz + self.fc1.backward(self.act1.backward(gh))


class Sequential(Layer):
    def __init__(self, layers: list):
        self.layers = list(layers)

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, gy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            gy = layer.backward(gy)
        return gy


class MaxPoolAxis(Layer):
    """Max over one axis (used to pool K neighbor features per query)."""

    def __init__(self, axis: int = 1):
        self.axis = axis
        self._arg = None
        self._shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._arg = np.argmax(x, axis=self.axis)
        self._shape = x.shape
        return np.take_along_axis(x, np.expand_dims(self._arg, self.axis),
                                  axis=self.axis).squeeze(self.axis)

    def backward(self, gy: np.ndarray) -> np.ndarray:
        gx = np.zeros(self._shape, dtype=gy.dtype)
        np.put_along_axis(gx, np.expand_dims(self._arg, self.axis),
                          np.expand_dims(gy, self.axis), axis=self.axis)
        return gx
