"""Same-padded U-Net for single-channel image regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from . import layers as L


@dataclass(frozen=True)
class UNetConfig:
    depth: int = 4
    base_width: int = 16
    in_channels: int = 1
    out_channels: int = 1
    elu_alpha: float = 1.0
    dropout_rate: float = 0.5

    def __post_init__(self):
        if self.depth < 1 or self.base_width < 1:
            raise ValueError("depth and base_width must be >= 1")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")

    def width(self, level):
        """Feature maps at encoder level ``level``; ``level == depth`` is the bottleneck."""
        return self.base_width * 2 ** level

    def check_input(self, shape):
        if len(shape) != 4:
            raise ShapeMismatch(f"expected (batch, channels, height, width), got {shape}")
        _, c, h, w = shape
        if c != self.in_channels:
            raise ShapeMismatch(f"input has {c} channels, model expects {self.in_channels}")
        f = 2 ** self.depth
        if h % f or w % f:
            raise ShapeMismatch(f"spatial dims {h}x{w} not divisible by {f}")


def param_shapes(cfg):
    """Ordered ``name -> shape`` for every trainable tensor."""
    shapes = {}

    def conv(name, cin, cout, k=3):
        shapes[f"{name}.w"] = (cout, cin, k, k)
        shapes[f"{name}.b"] = (cout,)

    cin = cfg.in_channels
    for k in range(cfg.depth):
        conv(f"enc{k}.conv1", cin, cfg.width(k))
        conv(f"enc{k}.conv2", cfg.width(k), cfg.width(k))
        cin = cfg.width(k)
    conv("mid.conv1", cin, cfg.width(cfg.depth))
    conv("mid.conv2", cfg.width(cfg.depth), cfg.width(cfg.depth))
    for k in reversed(range(cfg.depth)):
        shapes[f"dec{k}.up.w"] = (cfg.width(k + 1), cfg.width(k), 2, 2)
        shapes[f"dec{k}.up.b"] = (cfg.width(k),)
        conv(f"dec{k}.conv1", 2 * cfg.width(k), cfg.width(k))
        conv(f"dec{k}.conv2", cfg.width(k), cfg.width(k))
    conv("head", cfg.width(0), cfg.out_channels, k=1)
    return shapes


def init_params(cfg, rng, dtype=np.float32, init="dirac", noise=0.1):
    """Seeded initial weights.

    ``"he"``: He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
    ``"dirac"``: He-uniform scaled by ``noise`` plus an identity path carried on
    feature map 0 through the first encoder and last decoder block, so the
    untrained network starts as (almost) the identity map. Inputs are
    nonnegative images, on which ELU is the identity.
    """
    if init not in ("he", "dirac"):
        raise ValueError(f"unknown init {init!r}")
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = shape[0] if ".up." in name else int(np.prod(shape[1:]))
        bound = np.sqrt(6.0 / fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    if init == "dirac":
        for name in params:
            if name.endswith(".w") and name != "head.w":
                params[name] *= np.dtype(dtype).type(noise)
        for name in ("enc0.conv1", "enc0.conv2", "dec0.conv1", "dec0.conv2"):
            params[f"{name}.w"][0, 0, 1, 1] += 1
        params["head.w"][:] = 0
        params["head.w"][0, 0] = 1
    return params


class ForwardCache:
    """Activations saved by :meth:`UNet.forward` for one backward pass."""

    def __init__(self, version, input_shape):
        self.version = version
        self.input_shape = input_shape
        self.saved = {}


class UNet:
    def __init__(self, config=None, params=None, seed=0, dtype=np.float32, init="dirac"):
        self.config = config or UNetConfig()
        self.dtype = np.dtype(dtype)
        if params is None:
            params = init_params(self.config, np.random.default_rng(seed), self.dtype, init)
        self.params = {}
        self.load_params(params)

    @property
    def n_params(self):
        return sum(p.size for p in self.params.values())

    def load_params(self, params):
        expected = param_shapes(self.config)
        if list(params) != list(expected):
            missing = set(expected) ^ set(params)
            raise ShapeMismatch(f"parameter names differ from config: {sorted(missing)[:4]}")
        for name, shape in expected.items():
            if tuple(np.shape(params[name])) != shape:
                raise ShapeMismatch(f"{name}: shape {np.shape(params[name])} != {shape}")
        self.params = {k: np.array(v, dtype=self.dtype) for k, v in params.items()}
        self._version = getattr(self, "_version", 0) + 1

    def mark_updated(self):
        """Invalidate outstanding forward caches after an in-place parameter update."""
        self._version += 1

    def astype(self, dtype):
        return UNet(self.config, self.params, dtype=dtype)

    def copy_params(self):
        return {k: v.copy() for k, v in self.params.items()}

    # -- building blocks -------------------------------------------------

    def _conv_elu(self, name, x, cache):
        y = L.elu(L.conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"]), self.config.elu_alpha)
        cache.saved[name] = (x, y)
        return y

    def _conv_elu_backward(self, name, g, cache, grads):
        x, y = cache.saved[name]
        g = L.elu_backward(g, y, self.config.elu_alpha)
        gx, grads[f"{name}.w"], grads[f"{name}.b"] = L.conv2d_backward(g, x, self.params[f"{name}.w"])
        return gx

    def _has_dropout(self, level):
        # the two deepest encoder blocks; the bottleneck never drops
        return level >= self.config.depth - 2

    # -- public API ------------------------------------------------------

    def forward(self, x, training=False, rng=None):
        """Returns ``(output, cache)``; output has the input's spatial dims and one channel per target."""
        cfg = self.config
        x = np.asarray(x, dtype=self.dtype)
        cfg.check_input(x.shape)
        if training and cfg.dropout_rate > 0 and rng is None:
            raise ValueError("training forward with dropout needs an rng")
        cache = ForwardCache(self._version, x.shape)

        h = x
        skips = []
        for k in range(cfg.depth):
            h = self._conv_elu(f"enc{k}.conv1", h, cache)
            h = self._conv_elu(f"enc{k}.conv2", h, cache)
            if self._has_dropout(k):
                h, cache.saved[f"enc{k}.drop"] = L.dropout(h, cfg.dropout_rate, rng, training)
            skips.append(h)
            h, cache.saved[f"enc{k}.pool"] = L.maxpool2(h)

        h = self._conv_elu("mid.conv1", h, cache)
        h = self._conv_elu("mid.conv2", h, cache)

        for k in reversed(range(cfg.depth)):
            cache.saved[f"dec{k}.up"] = h
            up = L.conv2d_transpose_stride2(h, self.params[f"dec{k}.up.w"], self.params[f"dec{k}.up.b"])
            h = L.concat_skip(up, skips[k])
            h = self._conv_elu(f"dec{k}.conv1", h, cache)
            h = self._conv_elu(f"dec{k}.conv2", h, cache)

        cache.saved["head"] = h
        out = L.conv2d(h, self.params["head.w"], self.params["head.b"])
        return out, cache

    def backward(self, cache, grad_out):
        """Parameter gradients for ``sum(grad_out * output)``."""
        if cache.version != self._version:
            raise StaleCache("parameters changed since this forward pass")
        cfg = self.config
        grad_out = np.asarray(grad_out, dtype=self.dtype)
        b, _, hgt, wid = cache.input_shape
        if grad_out.shape != (b, cfg.out_channels, hgt, wid):
            raise ShapeMismatch(f"grad_out shape {grad_out.shape} does not match the output")
        grads = {}

        g, grads["head.w"], grads["head.b"] = L.conv2d_backward(grad_out, cache.saved["head"], self.params["head.w"])

        skip_grads = {}
        for k in range(cfg.depth):
            g = self._conv_elu_backward(f"dec{k}.conv2", g, cache, grads)
            g = self._conv_elu_backward(f"dec{k}.conv1", g, cache, grads)
            g_up, skip_grads[k] = L.concat_skip_backward(g, cfg.width(k))
            g, grads[f"dec{k}.up.w"], grads[f"dec{k}.up.b"] = L.conv2d_transpose_stride2_backward(
                g_up, cache.saved[f"dec{k}.up"], self.params[f"dec{k}.up.w"])

        g = self._conv_elu_backward("mid.conv2", g, cache, grads)
        g = self._conv_elu_backward("mid.conv1", g, cache, grads)

        for k in reversed(range(cfg.depth)):
            g = L.maxpool2_backward(g, cache.saved[f"enc{k}.pool"])
            g = g + skip_grads[k]
            if self._has_dropout(k):
                g = L.dropout_backward(g, cache.saved[f"enc{k}.drop"])
            g = self._conv_elu_backward(f"enc{k}.conv2", g, cache, grads)
            g = self._conv_elu_backward(f"enc{k}.conv1", g, cache, grads)

        return {name: grads[name] for name in self.params}

    def predict(self, x):
        return self.forward(x, training=False)[0]
