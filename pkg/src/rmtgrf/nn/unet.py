"""U-shaped encoder-decoder built from the primitives in `layers`.

Layout for ``depth`` pooling stages and base width ``c``::

    enc{i}: conv_block x2 at c*2^i channels, then 2x2 average pool
    bottleneck: conv_block x2 at c*2^depth channels
    dec{i}: upconv (halves channels, doubles size), concat enc{i}, conv_block x2
    head: 1x1 convolution to ``out_channels``, no activation
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import layers as L


@dataclass(frozen=True)
class UNetConfig:
    in_channels: int = 4
    out_channels: int = 1
    base_channels: int = 16
    depth: int = 3
    input_size: int = 64

    def validate(self):
        if self.input_size % (2 ** self.depth):
            raise ValueError(f"input_size {self.input_size} not divisible by 2^{self.depth}")
        if min(self.in_channels, self.out_channels, self.base_channels, self.depth) < 1:
            raise ValueError("channel counts and depth must be >= 1")

    def stage_channels(self, i: int) -> int:
        return self.base_channels * 2 ** i

    @classmethod
    def paper_scale(cls) -> "UNetConfig":
        """256x256 input, 512-channel bottleneck at 16x16."""
        return cls(base_channels=32, depth=4, input_size=256)

    def to_dict(self):
        return asdict(self)


def _block_names(cfg: UNetConfig):
    """(name, c_in, c_out) for every conv block, in forward order."""
    blocks = []
    c_in = cfg.in_channels
    for i in range(cfg.depth):
        c = cfg.stage_channels(i)
        blocks += [(f"enc{i}.0", c_in, c), (f"enc{i}.1", c, c)]
        c_in = c
    c = cfg.stage_channels(cfg.depth)
    blocks += [("bottleneck.0", c_in, c), ("bottleneck.1", c, c)]
    for i in reversed(range(cfg.depth)):
        c = cfg.stage_channels(i)
        blocks += [(f"dec{i}.0", 2 * c, c), (f"dec{i}.1", c, c)]
    return blocks


def init_params(cfg: UNetConfig, seed: int = 0):
    """Kaiming fan-in weights, zero biases, unit BN scale.

    Returns ``(params, state)``: learnable arrays and BN running statistics.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    params, state = {}, {}
    for name, ci, co in _block_names(cfg):
        params[f"{name}.w"] = rng.standard_normal((co, ci, 3, 3)) * np.sqrt(2.0 / (ci * 9))
        params[f"{name}.b"] = np.zeros(co)
        params[f"{name}.gamma"] = np.ones(co)
        params[f"{name}.beta"] = np.zeros(co)
        state[f"{name}.mean"] = np.zeros(co)
        state[f"{name}.var"] = np.ones(co)
    for i in reversed(range(cfg.depth)):
        ci, co = cfg.stage_channels(i + 1), cfg.stage_channels(i)
        params[f"up{i}.w"] = rng.standard_normal((ci, co, 3, 3)) * np.sqrt(2.0 / (ci * 9))
        params[f"up{i}.b"] = np.zeros(co)
    c0 = cfg.stage_channels(0)
    params["head.w"] = rng.standard_normal((cfg.out_channels, c0, 1, 1)) * np.sqrt(1.0 / c0)
    params["head.b"] = np.zeros(cfg.out_channels)
    return params, state


def conv_block_forward(x, params, state, name, training):
    h, c_conv = L.conv2d_forward(x, params[f"{name}.w"], params[f"{name}.b"], pad=1)
    h, c_bn = L.batchnorm_forward(h, params[f"{name}.gamma"], params[f"{name}.beta"],
                                  state[f"{name}.mean"], state[f"{name}.var"], training)
    out, c_relu = L.relu_forward(h)
    return out, (c_conv, c_bn, c_relu)


def conv_block_backward(dout, cache, name, grads):
    c_conv, c_bn, c_relu = cache
    d = L.relu_backward(dout, c_relu)
    d, grads[f"{name}.gamma"], grads[f"{name}.beta"] = L.batchnorm_backward(d, c_bn)
    dx, grads[f"{name}.w"], grads[f"{name}.b"] = L.conv2d_backward(d, c_conv)
    return dx


class UNet:
    """Parameters, BN state and the forward/backward passes of the network."""

    def __init__(self, cfg: UNetConfig | None = None, seed: int = 0, params=None, state=None):
        self.cfg = cfg or UNetConfig()
        self.cfg.validate()
        if params is None:
            params, state = init_params(self.cfg, seed)
        self.params = params
        self.state = state

    def forward(self, x, training: bool = False):
        """Prediction of shape (N, out_channels, S, S) and the backward cache."""
        cfg = self.cfg
        if x.ndim != 4 or x.shape[1] != cfg.in_channels:
            raise ValueError(f"expected (N, {cfg.in_channels}, S, S) input, got {x.shape}")
        if x.shape[2] % 2 ** cfg.depth or x.shape[3] % 2 ** cfg.depth:
            raise ValueError(f"spatial size {x.shape[2:]} not divisible by 2^{cfg.depth}")
        p, s = self.params, self.state
        caches = {}
        skips = []
        h = x
        for i in range(cfg.depth):
            for k in range(2):
                h, caches[f"enc{i}.{k}"] = conv_block_forward(h, p, s, f"enc{i}.{k}", training)
            skips.append(h)
            h, caches[f"pool{i}"] = L.avgpool2_forward(h)
        for k in range(2):
            h, caches[f"bottleneck.{k}"] = conv_block_forward(h, p, s, f"bottleneck.{k}", training)
        caches["bottleneck_shape"] = h.shape
        for i in reversed(range(cfg.depth)):
            h, caches[f"up{i}"] = L.upconv_forward(h, p[f"up{i}.w"], p[f"up{i}.b"])
            h, caches[f"cat{i}"] = L.concat_forward(h, skips[i])
            for k in range(2):
                h, caches[f"dec{i}.{k}"] = conv_block_forward(h, p, s, f"dec{i}.{k}", training)
        out, caches["head"] = L.conv2d_forward(h, p["head.w"], p["head.b"], pad=0)
        return out, caches

    def backward(self, dout, caches):
        """Gradients of every learnable array given d(loss)/d(output)."""
        cfg = self.cfg
        grads = {}
        dh, grads["head.w"], grads["head.b"] = L.conv2d_backward(dout, caches["head"])
        dskips = [None] * cfg.depth
        for j in range(cfg.depth):
            for k in (1, 0):
                dh = conv_block_backward(dh, caches[f"dec{j}.{k}"], f"dec{j}.{k}", grads)
            dh, dskips[j] = L.concat_backward(dh, caches[f"cat{j}"])
            dh, grads[f"up{j}.w"], grads[f"up{j}.b"] = L.upconv_backward(dh, caches[f"up{j}"])
        for k in (1, 0):
            dh = conv_block_backward(dh, caches[f"bottleneck.{k}"], f"bottleneck.{k}", grads)
        for i in reversed(range(cfg.depth)):
            dh = L.avgpool2_backward(dh, caches[f"pool{i}"])
            dh = dh + dskips[i]
            for k in (1, 0):
                dh = conv_block_backward(dh, caches[f"enc{i}.{k}"], f"enc{i}.{k}", grads)
        return grads

    def predict(self, x, batch_size: int = 32):
        """Inference-mode forward pass in batches."""
        outs = [self.forward(x[i:i + batch_size], training=False)[0] for i in range(0, len(x), batch_size)]
        return np.concatenate(outs, axis=0)


def unet_forward(net: UNet, x, training: bool = False):
    return net.forward(x, training)


def backward(net: UNet, caches, dout):
    return net.backward(dout, caches)
