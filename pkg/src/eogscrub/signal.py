"""Multichannel EEG records, dataset splitting, the MSE metric, and EEGR file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EmptyInput, FormatError, LengthMismatch, ShapeMismatch, TooFewSamples, VersionMismatch

# 10-20 electrode order; the index of a label is its row in every record.
CHANNEL_LABELS = (
    "FP1", "FP2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
    "F7", "F8", "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz",
)
N_CHANNELS = len(CHANNEL_LABELS)
CHANNEL_INDEX = {label: i for i, label in enumerate(CHANNEL_LABELS)}
SAMPLE_RATE_HZ = 200.0
MIN_SAMPLES = 5400

EEGR_MAGIC = b"EEGR"
EEGR_VERSION = 1
_EEGR_HEADER = struct.Struct("<4sIIIIf")


def channel_index(label):
    """Row index of a 10-20 label (case-insensitive)."""
    for name, idx in CHANNEL_INDEX.items():
        if name.lower() == label.lower():
            return idx
    raise KeyError(label)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EegRecord:
    subject_id: int
    samples: np.ndarray
    sample_rate_hz: float = SAMPLE_RATE_HZ

    def __post_init__(self):
        samples = _frozen(self.samples, np.float32)
        if samples.ndim != 2 or samples.shape[0] != N_CHANNELS:
            raise ShapeMismatch(f"expected {N_CHANNELS} x N samples, got {samples.shape}")
        if samples.shape[1] < MIN_SAMPLES:
            raise ShapeMismatch(f"record has {samples.shape[1]} samples, need >= {MIN_SAMPLES}")
        if self.subject_id < 0:
            raise ValueError("subject_id must be >= 0")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self):
        return self.samples.shape[1]

    def channel(self, idx):
        return self.samples[idx]


@dataclass(frozen=True)
class SignalPair:
    pure: EegRecord
    contaminated: EegRecord

    def __post_init__(self):
        p, c = self.pure, self.contaminated
        if p.subject_id != c.subject_id:
            raise ValueError("pure and contaminated records belong to different subjects")
        if p.samples.shape != c.samples.shape:
            raise ShapeMismatch(f"{p.samples.shape} != {c.samples.shape}")
        if p.sample_rate_hz != c.sample_rate_hz:
            raise ValueError("sample rates differ")

    @property
    def subject_id(self):
        return self.pure.subject_id


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple
    seed: int

    @property
    def sizes(self):
        return len(self.train), len(self.val), len(self.test)


def mse(predicted, target):
    """Mean squared difference, accumulated in float64."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    if p.size != t.size:
        raise LengthMismatch(f"lengths differ: {p.size} vs {t.size}")
    if p.size == 0:
        raise EmptyInput("mse of empty sequences")
    d = p - t
    return float(np.dot(d, d) / d.size)


def _round_half_up(n, ratio):
    # exact rational arithmetic so 0.15 * n never lands on the wrong side of .5
    return int(Fraction(str(ratio)) * n + Fraction(1, 2))


def split_dataset(n, ratios=(0.70, 0.15, 0.15), seed=0):
    """Seeded train/val/test partition of ``range(n)``.

    Validation and test each receive round-half-up of their ratio times n;
    training takes the remainder.
    """
    if n < 3:
        raise TooFewSamples(f"need at least 3 samples, got {n}")
    if len(ratios) != 3:
        raise ValueError("ratios must have three entries")
    n_val = _round_half_up(n, ratios[1])
    n_test = _round_half_up(n, ratios[2])
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise TooFewSamples(f"split of {n} leaves an empty part: {(n_train, n_val, n_test)}")
    perm = np.random.default_rng(seed).permutation(n)
    train = tuple(int(i) for i in perm[:n_train])
    val = tuple(int(i) for i in perm[n_train:n_train + n_val])
    test = tuple(int(i) for i in perm[n_train + n_val:])
    return DatasetSplit(train, val, test, seed)


def encode_record(record):
    n_ch, n_s = record.samples.shape
    header = _EEGR_HEADER.pack(EEGR_MAGIC, EEGR_VERSION, record.subject_id, n_ch, n_s,
                               record.sample_rate_hz)
    return header + np.ascontiguousarray(record.samples, dtype="<f4").tobytes()


def decode_record(data):
    if len(data) < _EEGR_HEADER.size:
        raise FormatError("EEGR header truncated")
    magic, version, subject, n_ch, n_s, rate = _EEGR_HEADER.unpack_from(data)
    if magic != EEGR_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != EEGR_VERSION:
        raise VersionMismatch(f"EEGR version {version} unsupported")
    payload = data[_EEGR_HEADER.size:]
    if len(payload) != 4 * n_ch * n_s:
        raise FormatError(f"EEGR payload has {len(payload)} bytes, expected {4 * n_ch * n_s}")
    samples = np.frombuffer(payload, dtype="<f4").reshape(n_ch, n_s)
    return EegRecord(subject_id=subject, samples=samples, sample_rate_hz=float(rate))


def save_record(record, path):
    Path(path).write_bytes(encode_record(record))


def load_record(path):
    return decode_record(Path(path).read_bytes())


def pair_paths(directory, subject_id):
    stem = Path(directory) / f"sub{subject_id:03d}"
    return stem.with_suffix(".pure.eegr"), stem.with_suffix(".cont.eegr")


def save_pair(pair, directory):
    pure_path, cont_path = pair_paths(directory, pair.subject_id)
    save_record(pair.pure, pure_path)
    save_record(pair.contaminated, cont_path)
    return pure_path, cont_path


def load_pairs(directory):
    """Every ``*.pure.eegr`` / ``*.cont.eegr`` pair under ``directory``, sorted by subject."""
    pairs = []
    for pure_path in sorted(Path(directory).glob("*.pure.eegr")):
        cont_path = pure_path.with_name(pure_path.name[: -len(".pure.eegr")] + ".cont.eegr")
        if not cont_path.exists():
            raise FormatError(f"missing contaminated counterpart for {pure_path.name}")
        pairs.append(SignalPair(load_record(pure_path), load_record(cont_path)))
    pairs.sort(key=lambda p: p.subject_id)
    return pairs
