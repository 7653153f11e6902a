"""Seeded semi-simulated EEG: pure background activity, VEOG/HEOG sources and
the linear ocular contamination model.

Every generator draws from its own ``SeedSequence((seed, stream, subject, ...))``
so subjects and channels can be produced in any order, or in parallel, with
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadBand, LengthMismatch
from .signal import CHANNEL_LABELS, N_CHANNELS, SAMPLE_RATE_HZ, EegRecord, SignalPair, save_pair

_EEG_STREAM = 0
_VEOG_STREAM = 1
_HEOG_STREAM = 2

# Anterior-to-posterior decay of ocular coupling. Frontal sites sit in
# [0.6, 1.0], central/temporal in [0.2, 0.5], occipital in [0.05, 0.15].
DEFAULT_VEOG_WEIGHTS = {
    "FP1": 1.00, "FP2": 1.00, "F7": 0.70, "F8": 0.70, "F3": 0.75, "F4": 0.75, "Fz": 0.80,
    "T3": 0.30, "T4": 0.30, "C3": 0.40, "C4": 0.40, "Cz": 0.45,
    "T5": 0.20, "T6": 0.20, "P3": 0.22, "P4": 0.22, "Pz": 0.25,
    "O1": 0.15, "O2": 0.15,
}


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 54
    n_samples: int = 6000
    seed: int = 0
    eeg_band_hz: tuple = (0.5, 40.0)
    eog_band_hz: tuple = (0.5, 5.0)
    eeg_amp_uV: float = 20.0
    eog_amp_uV: float = 100.0
    sample_rate_hz: float = SAMPLE_RATE_HZ
    n_sinusoids: int = 64
    # VEOG background and HEOG drift RMS, as fractions of eog_amp_uV
    veog_baseline_frac: float = 0.5
    heog_frac: float = 1.0
    blink_count: tuple = (3, 8)
    blink_width_s: tuple = (0.3, 0.5)

    def __post_init__(self):
        nyq = self.sample_rate_hz / 2
        for name in ("eeg_band_hz", "eog_band_hz"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi < nyq:
                raise BadBand(f"{name}={lo, hi} must satisfy 0 < lo < hi < {nyq}")
        if self.n_subjects < 1:
            raise ValueError("n_subjects must be >= 1")
        if self.n_sinusoids < 40:
            raise ValueError("n_sinusoids must be >= 40")
        if not 0 < self.eeg_amp_uV < self.eog_amp_uV:
            raise ValueError("need 0 < eeg_amp_uV < eog_amp_uV")
        if not 1 <= self.blink_count[0] <= self.blink_count[1]:
            raise ValueError("blink_count must be an increasing positive range")
        if not 0 < self.blink_width_s[0] <= self.blink_width_s[1]:
            raise ValueError("blink_width_s must be an increasing positive range")
        if self.blink_width_s[1] * self.sample_rate_hz >= self.n_samples:
            raise ValueError("blinks longer than the record")


@dataclass(frozen=True)
class ContaminationCoeffs:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("a", "b"):
            v = np.array(getattr(self, name), dtype=np.float64)
            if v.shape != (N_CHANNELS,):
                raise LengthMismatch(f"{name} must have {N_CHANNELS} entries, got {v.shape}")
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"{name} must be finite and nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def zeros(cls):
        return cls(np.zeros(N_CHANNELS), np.zeros(N_CHANNELS))

    def scaled(self, k):
        return ContaminationCoeffs(self.a * k, self.b * k)


@dataclass(frozen=True)
class EogPair:
    veog: np.ndarray
    heog: np.ndarray
    blink_onsets: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if np.shape(self.veog) != np.shape(self.heog):
            raise LengthMismatch("veog and heog lengths differ")


def default_coeffs():
    """Topographic default: b is half of a, skewed +20% on left (odd) and -20% on right (even) sites."""
    a = np.array([DEFAULT_VEOG_WEIGHTS[lab] for lab in CHANNEL_LABELS])
    skew = []
    for lab in CHANNEL_LABELS:
        if lab.endswith("z"):
            skew.append(1.0)
        elif int(lab[-1]) % 2:
            skew.append(1.2)
        else:
            skew.append(0.8)
    return ContaminationCoeffs(a, 0.5 * a * np.array(skew))


def _rng(cfg, *stream):
    return np.random.default_rng(np.random.SeedSequence((cfg.seed, *stream)))


def _band_sum(rng, n, fs, band, n_terms, rms):
    """Zero-mean sum of random-phase sinusoids on the n-point DFT grid inside ``band``."""
    k_lo = int(np.ceil(band[0] * n / fs))
    k_hi = int(np.floor(band[1] * n / fs))
    if k_hi < k_lo:
        raise BadBand(f"band {band} holds no DFT bins for n={n}")
    bins = np.arange(k_lo, k_hi + 1)
    k = rng.choice(bins, size=min(n_terms, bins.size), replace=False)
    phase = rng.uniform(0, 2 * np.pi, size=k.size)
    # sum_k cos(2*pi*k*t/n + phase_k), evaluated as one inverse real FFT
    spectrum = np.zeros(n // 2 + 1, dtype=np.complex128)
    np.add.at(spectrum, k, (n / 2) * np.exp(1j * phase))
    x = np.fft.irfft(spectrum, n=n)
    # integer cycles over n: mean is already zero, remove rounding residue
    x -= x.mean()
    return x * (rms / np.sqrt(np.mean(x * x)))


def gen_pure_eeg(cfg, subject, channel):
    """Artifact-free background EEG for one channel (µV, float64)."""
    rng = _rng(cfg, _EEG_STREAM, subject, channel)
    return _band_sum(rng, cfg.n_samples, cfg.sample_rate_hz, cfg.eeg_band_hz,
                     cfg.n_sinusoids, cfg.eeg_amp_uV)


def raised_cosine(width):
    """Blink template of ``width`` samples peaking at 1."""
    t = np.arange(width)
    return 0.5 * (1 - np.cos(2 * np.pi * t / (width - 1)))


def gen_eog(cfg, subject):
    """VEOG (background plus blinks) and HEOG drift for one subject."""
    n, fs = cfg.n_samples, cfg.sample_rate_hz
    rng = _rng(cfg, _VEOG_STREAM, subject)
    veog = _band_sum(rng, n, fs, cfg.eog_band_hz, 16, cfg.veog_baseline_frac * cfg.eog_amp_uV)
    n_blinks = int(rng.integers(cfg.blink_count[0], cfg.blink_count[1] + 1))
    onsets = []
    for _ in range(n_blinks):
        width = int(round(rng.uniform(*cfg.blink_width_s) * fs))
        amp = cfg.eog_amp_uV * rng.uniform(0.9, 1.1)
        start = int(rng.integers(0, n - width))
        veog[start:start + width] += amp * raised_cosine(width)
        onsets.append(start)

    rng = _rng(cfg, _HEOG_STREAM, subject)
    heog = _band_sum(rng, n, fs, cfg.eog_band_hz, 16, cfg.heog_frac * cfg.eog_amp_uV)
    return EogPair(veog=veog, heog=heog, blink_onsets=tuple(sorted(onsets)))


def contaminate(pure, eog, coeffs):
    """Add ``a_j * veog + b_j * heog`` to every row j of ``pure``."""
    veog = np.asarray(eog.veog, dtype=np.float64)
    heog = np.asarray(eog.heog, dtype=np.float64)
    if veog.shape != (pure.n_samples,):
        raise LengthMismatch(f"EOG length {veog.shape} != record length {pure.n_samples}")
    artifact = coeffs.a[:, None] * veog[None, :] + coeffs.b[:, None] * heog[None, :]
    return EegRecord(subject_id=pure.subject_id,
                     samples=pure.samples.astype(np.float64) + artifact,
                     sample_rate_hz=pure.sample_rate_hz)


def make_subject(cfg, coeffs, subject):
    pure = EegRecord(
        subject_id=subject,
        samples=np.stack([gen_pure_eeg(cfg, subject, ch) for ch in range(N_CHANNELS)]),
        sample_rate_hz=cfg.sample_rate_hz,
    )
    eog = gen_eog(cfg, subject)
    return SignalPair(pure, contaminate(pure, eog, coeffs)), eog


def make_dataset(cfg=None, coeffs=None):
    cfg = cfg or SynthConfig()
    coeffs = default_coeffs() if coeffs is None else coeffs
    return [make_subject(cfg, coeffs, s)[0] for s in range(cfg.n_subjects)]


def format_coeffs(coeffs, seed):
    lines = [f"seed = {seed}"]
    for i, lab in enumerate(CHANNEL_LABELS):
        lines.append(f"a.{lab} = {float(coeffs.a[i])!r}")
    for i, lab in enumerate(CHANNEL_LABELS):
        lines.append(f"b.{lab} = {float(coeffs.b[i])!r}")
    return "\n".join(lines) + "\n"


def parse_coeffs(text):
    values = {}
    seed = None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "seed":
            seed = int(val)
        else:
            values[key] = float(val)
    a = [values[f"a.{lab}"] for lab in CHANNEL_LABELS]
    b = [values[f"b.{lab}"] for lab in CHANNEL_LABELS]
    return ContaminationCoeffs(np.array(a), np.array(b)), seed


def write_dataset(pairs, coeffs, seed, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for pair in pairs:
        save_pair(pair, directory)
    (directory / "coeffs.txt").write_text(format_coeffs(coeffs, seed))
