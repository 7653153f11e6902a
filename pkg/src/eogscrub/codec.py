"""Signal <-> grayscale image codec.

Forward path for one channel (methods 1 and 2)::

    truncate -> low-pass -> resample -> min-max normalize -> row-major reshape

Method 3 filters every channel, concatenates them in montage order and
resamples the whole vector to fill a 512 x 256 plane. Planes stay float32 in
[0, 1]; 8-bit quantization is only applied when exporting pictures.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.signal import firwin

from .errors import (
    BadCutoff,
    DegenerateParams,
    EmptyInput,
    FormatError,
    OutOfRange,
    ShapeMismatch,
    SignalTooShort,
    TooShort,
    VersionMismatch,
    warn_degenerate,
)
from .signal import N_CHANNELS, SAMPLE_RATE_HZ, EegRecord

ALL_CHANNELS = -1

EIMG_MAGIC = b"EIMG"
EIMG_VERSION = 1
_EIMG_HEADER = struct.Struct("<4sIIIffBIiB")


@dataclass(frozen=True)
class CodecConfig:
    cutoff_hz: float = 40.0
    filter_taps: int = 101
    truncate_len: int = 5400
    resample_len: int = 6400
    image_dims: tuple = (80, 80)
    sample_rate_hz: float = SAMPLE_RATE_HZ

    def __post_init__(self):
        h, w = self.image_dims
        if h * w != self.resample_len:
            raise ShapeMismatch(f"image {h}x{w} does not hold {self.resample_len} samples")
        if self.filter_taps < 1 or self.filter_taps % 2 == 0:
            raise ValueError("filter_taps must be a positive odd count")
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise BadCutoff(f"cutoff {self.cutoff_hz} Hz outside (0, {self.sample_rate_hz / 2})")

    @classmethod
    def for_method(cls, method, **overrides):
        if method in (1, 2):
            return cls(**overrides)
        if method == 3:
            base = dict(resample_len=512 * 256, image_dims=(512, 256))
            base.update(overrides)
            return cls(**base)
        raise ValueError(f"unknown method {method}")


@dataclass(frozen=True)
class NormParams:
    x_min: float
    x_max: float
    y_min: float = 0.0
    y_max: float = 1.0
    degenerate: bool = False

    def __post_init__(self):
        if self.x_max < self.x_min:
            raise ValueError("x_max < x_min")
        if not self.y_max > self.y_min:
            raise ValueError("y_max must exceed y_min")


@dataclass(frozen=True)
class ImageSample:
    pixels: np.ndarray
    norm: NormParams
    subject_id: int = 0
    channel: int = ALL_CHANNELS
    method: int = 1

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float32)
        if px.ndim != 2:
            raise ShapeMismatch(f"pixels must be 2-D, got shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


def lowpass_filter(signal, cutoff_hz=40.0, taps=101, sample_rate_hz=SAMPLE_RATE_HZ):
    """Zero-phase Hamming windowed-sinc low-pass with symmetric edge padding."""
    x = np.asarray(signal, dtype=np.float64)
    if taps < 1 or taps % 2 == 0:
        raise ValueError("taps must be odd")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise BadCutoff(f"cutoff {cutoff_hz} Hz outside (0, {sample_rate_hz / 2})")
    if x.size < taps:
        raise SignalTooShort(f"signal of {x.size} samples shorter than {taps} taps")
    h = firwin(taps, cutoff_hz, window="hamming", fs=sample_rate_hz)
    half = taps // 2
    padded = np.pad(x, half, mode="symmetric")
    # h is symmetric, so convolution == correlation and the centred output has no delay
    return np.convolve(padded, h, mode="valid")


def resample_linear(signal, n_out):
    """Linear interpolation onto ``n_out`` uniformly spaced points; endpoints kept."""
    x = np.asarray(signal, dtype=np.float64)
    n_in = x.size
    if n_in < 2:
        raise TooShort("need at least two samples to interpolate")
    if n_out < 2:
        raise TooShort("n_out must be >= 2")
    if n_out == n_in:
        return x.copy()
    grid = np.linspace(0.0, n_in - 1, n_out)
    return np.interp(grid, np.arange(n_in), x)


def minmax_normalize(signal, y_min=0.0, y_max=1.0):
    """Affine map of [x_min, x_max] onto [y_min, y_max].

    A constant input cannot be stretched: it maps to the middle of the output
    range and the returned params are flagged degenerate (with a warning).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("cannot normalize an empty signal")
    x_min, x_max = float(x.min()), float(x.max())
    if x_max == x_min:
        warn_degenerate("constant signal; normalized to mid-range")
        params = NormParams(x_min, x_max, y_min, y_max, degenerate=True)
        return np.full_like(x, (y_min + y_max) / 2), params
    params = NormParams(x_min, x_max, y_min, y_max)
    return apply_norm(x, params), params


def apply_norm(signal, params):
    """Normalize with existing params; values outside [x_min, x_max] map outside [y_min, y_max]."""
    x = np.asarray(signal, dtype=np.float64)
    if params.degenerate:
        return np.full_like(x, (params.y_min + params.y_max) / 2)
    scale = (params.y_max - params.y_min) / (params.x_max - params.x_min)
    return (x - params.x_min) * scale + params.y_min


def minmax_denormalize(signal, params):
    if params.degenerate or params.x_max == params.x_min:
        raise DegenerateParams("cannot invert a degenerate normalization")
    y = np.asarray(signal, dtype=np.float64)
    scale = (params.x_max - params.x_min) / (params.y_max - params.y_min)
    return (y - params.y_min) * scale + params.x_min


def quantize_u8(plane):
    v = np.asarray(plane, dtype=np.float64)
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise OutOfRange("quantize_u8 expects values in [0, 1]")
    return np.floor(255.0 * v + 0.5).astype(np.uint8)


def dequantize_u8(plane):
    q = np.asarray(plane)
    if q.dtype != np.uint8:
        raise OutOfRange("dequantize_u8 expects uint8 input")
    return q.astype(np.float32) / np.float32(255.0)


def condition_channel(signal, cfg):
    """Truncate and low-pass one channel (length ``cfg.truncate_len``)."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size < cfg.truncate_len:
        raise SignalTooShort(f"channel has {x.size} samples, need {cfg.truncate_len}")
    return lowpass_filter(x[: cfg.truncate_len], cfg.cutoff_hz, cfg.filter_taps, cfg.sample_rate_hz)


def channel_vector(record, channel, cfg):
    """Filtered, resampled samples of one channel; the payload of its image."""
    return resample_linear(condition_channel(record.samples[channel], cfg), cfg.resample_len)


def record_vector(record, cfg):
    """Filtered channels concatenated in montage order, resampled to fill the plane."""
    if record.samples.shape[0] != N_CHANNELS:
        raise ShapeMismatch(f"expected {N_CHANNELS} channels")
    joined = np.concatenate([condition_channel(row, cfg) for row in record.samples])
    return resample_linear(joined, cfg.resample_len)


def vector_to_image(vector, cfg, norm=None, **provenance):
    """Normalize (own range unless ``norm`` is given) and reshape row-major."""
    v = np.asarray(vector, dtype=np.float64)
    if v.size != cfg.resample_len:
        raise ShapeMismatch(f"vector of {v.size} does not fill {cfg.image_dims}")
    if norm is None:
        y, norm = minmax_normalize(v)
    else:
        y = apply_norm(v, norm)
    return ImageSample(pixels=y.reshape(cfg.image_dims), norm=norm, **provenance)


def channel_to_image(record, channel, cfg=None, norm=None, method=1):
    cfg = cfg or CodecConfig()
    return vector_to_image(channel_vector(record, channel, cfg), cfg, norm,
                           subject_id=record.subject_id, channel=channel, method=method)


def record_to_image(record, cfg=None, norm=None):
    cfg = cfg or CodecConfig.for_method(3)
    return vector_to_image(record_vector(record, cfg), cfg, norm,
                           subject_id=record.subject_id, channel=ALL_CHANNELS, method=3)


def image_to_vector(img, norm=None):
    """Flatten row-major and undo the normalization (the image's own unless overridden)."""
    return minmax_denormalize(np.asarray(img.pixels, dtype=np.float64).ravel(), norm or img.norm)


def image_to_channel(img, cfg=None, norm=None):
    cfg = cfg or CodecConfig()
    return resample_linear(image_to_vector(img, norm), cfg.truncate_len)


def image_to_record(img, cfg=None, norm=None):
    """Split a method-3 plane back into ``19 x truncate_len`` samples."""
    cfg = cfg or CodecConfig.for_method(3)
    joined = resample_linear(image_to_vector(img, norm), N_CHANNELS * cfg.truncate_len)
    return joined.reshape(N_CHANNELS, cfg.truncate_len)


def encode_image(img):
    h, w = img.pixels.shape
    header = _EIMG_HEADER.pack(EIMG_MAGIC, EIMG_VERSION, h, w, img.norm.x_min, img.norm.x_max,
                               int(img.norm.degenerate), img.subject_id, img.channel, img.method)
    return header + np.ascontiguousarray(img.pixels, dtype="<f4").tobytes()


def decode_image(data):
    if len(data) < _EIMG_HEADER.size:
        raise FormatError("EIMG header truncated")
    magic, version, h, w, x_min, x_max, degen, subject, channel, method = _EIMG_HEADER.unpack_from(data)
    if magic != EIMG_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != EIMG_VERSION:
        raise VersionMismatch(f"EIMG version {version} unsupported")
    payload = data[_EIMG_HEADER.size:]
    if len(payload) != 4 * h * w:
        raise FormatError(f"EIMG payload has {len(payload)} bytes, expected {4 * h * w}")
    pixels = np.frombuffer(payload, dtype="<f4").reshape(h, w)
    norm = NormParams(float(x_min), float(x_max), degenerate=bool(degen))
    return ImageSample(pixels, norm, subject_id=subject, channel=channel, method=method)


def save_image(img, path):
    Path(path).write_bytes(encode_image(img))


def load_image(path):
    return decode_image(Path(path).read_bytes())


def with_pixels(img, pixels):
    """Same provenance and params, new plane (e.g. a network prediction)."""
    return replace(img, pixels=pixels)


def purified_record(subject_id, samples, sample_rate_hz=SAMPLE_RATE_HZ):
    return EegRecord(subject_id=subject_id, samples=samples, sample_rate_hz=sample_rate_hz)
