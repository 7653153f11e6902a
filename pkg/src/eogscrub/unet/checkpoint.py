"""Binary ``UNET`` v1 checkpoints (little-endian, float32 payloads)."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, ShapeMismatch, VersionMismatch
from .model import UNet, UNetConfig, param_shapes

MAGIC = b"UNET"
FORMAT_VERSION = 1
SCHEMES = ("", "m1", "m2", "m3")

_HEAD = struct.Struct("<4sI")
# depth, base_width, in_channels, out_channels, elu_alpha, dropout_rate, scheme, channel
_CONFIG = struct.Struct("<IIIIffBi")
_U32 = struct.Struct("<I")


@dataclass
class UNetCheckpoint:
    config: UNetConfig
    params: dict
    scheme: str = ""
    channel: int = -1
    format_version: int = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model, scheme="", channel=-1):
        return cls(model.config, model.copy_params(), scheme, channel)

    def to_model(self, dtype=np.float32):
        return UNet(self.config, self.params, dtype=dtype)


def encode_checkpoint(ckpt):
    cfg = ckpt.config
    if ckpt.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {ckpt.scheme!r}")
    out = [
        _HEAD.pack(MAGIC, FORMAT_VERSION),
        _CONFIG.pack(cfg.depth, cfg.base_width, cfg.in_channels, cfg.out_channels, cfg.elu_alpha,
                     cfg.dropout_rate, SCHEMES.index(ckpt.scheme), ckpt.channel),
        _U32.pack(len(ckpt.params)),
    ]
    for name, value in ckpt.params.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(value, dtype="<f4")
        out.append(_U32.pack(len(raw)) + raw + _U32.pack(arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise FormatError("checkpoint truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st):
        return st.unpack(self.take(st.size))


def decode_checkpoint(data, config=None):
    """Parse a checkpoint; if ``config`` is given the stored architecture must match it."""
    r = _Reader(data)
    magic, version = r.unpack(_HEAD)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"UNET version {version} unsupported")
    depth, base, cin, cout, alpha, rate, scheme_id, channel = r.unpack(_CONFIG)
    if scheme_id >= len(SCHEMES):
        raise FormatError(f"bad scheme id {scheme_id}")
    try:
        stored = UNetConfig(depth, base, cin, cout, float(np.float32(alpha)), float(np.float32(rate)))
    except ValueError as exc:
        raise FormatError(f"bad config block: {exc}") from None
    (n_params,) = r.unpack(_U32)
    params = {}
    for _ in range(n_params):
        (n_name,) = r.unpack(_U32)
        name = r.take(n_name).decode("utf-8")
        (rank,) = r.unpack(_U32)
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = int(np.prod(dims)) if rank else 1
        params[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims).astype(np.float32)
    if r.pos != len(data):
        raise FormatError("trailing bytes after checkpoint payload")

    expected = param_shapes(stored)
    for name, shape in expected.items():
        if name not in params or params[name].shape != shape:
            raise ShapeMismatch(f"{name}: stored tensor does not match the stored config")
    if config is not None and (config.depth, config.base_width, config.in_channels, config.out_channels) != (
            depth, base, cin, cout):
        raise ShapeMismatch(f"checkpoint built for depth={depth} base_width={base}, requested "
                            f"depth={config.depth} base_width={config.base_width}")
    return UNetCheckpoint(stored, params, SCHEMES[scheme_id], channel, version)


def save_checkpoint(ckpt, path):
    if isinstance(ckpt, UNet):
        ckpt = UNetCheckpoint.from_model(ckpt)
    Path(path).write_bytes(encode_checkpoint(ckpt))


def load_checkpoint(path, config=None):
    return decode_checkpoint(Path(path).read_bytes(), config)
