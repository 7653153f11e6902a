import numpy as np
import pytest

from eogscrub import synth
from eogscrub.errors import BadBand, LengthMismatch
from eogscrub.signal import CHANNEL_LABELS, EegRecord, channel_index, mse

FRONTAL = [channel_index(lab) for lab in ("FP1", "FP2", "F3", "F4", "F7", "F8", "Fz")]


def band_energy_fraction(x, fs, lo, hi):
    """Share of spectral energy outside [lo, hi] Hz (independent FFT measurement)."""
    amps = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(x.size, 1 / fs)
    outside = (f < lo) | (f > hi)
    return amps[outside].sum() / amps.sum()


@pytest.mark.parametrize("subject, channel", [(0, 0), (3, 9), (17, 18)])
def test_pure_eeg_band_limited(subject, channel):
    cfg = synth.SynthConfig(seed=5)
    x = synth.gen_pure_eeg(cfg, subject, channel)
    assert band_energy_fraction(x, 200.0, 0.5, 40.0) <= 0.01
    assert abs(x.mean()) <= 1e-3 * np.sqrt(np.mean(x ** 2))
    assert np.sqrt(np.mean(x ** 2)) == pytest.approx(cfg.eeg_amp_uV, rel=1e-6)


def test_pure_eeg_deterministic():
    cfg = synth.SynthConfig(seed=5)
    a = synth.gen_pure_eeg(cfg, 2, 4)
    b = synth.gen_pure_eeg(cfg, 2, 4)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, synth.gen_pure_eeg(cfg, 2, 5))


def test_bad_band():
    with pytest.raises(BadBand):
        synth.SynthConfig(eeg_band_hz=(0.5, 120.0))
    with pytest.raises(BadBand):
        synth.SynthConfig(eog_band_hz=(5.0, 0.5))


@pytest.mark.parametrize("seed", range(6))
def test_eog_properties(seed):
    cfg = synth.SynthConfig(seed=seed)
    eog = synth.gen_eog(cfg, subject=seed)
    assert eog.veog.shape == eog.heog.shape == (cfg.n_samples,)
    assert 3 <= len(eog.blink_onsets) <= 8
    assert eog.veog.max() >= 3 * cfg.eeg_amp_uV
    assert band_energy_fraction(eog.heog, 200.0, 0.0, 5.0) <= 0.01


def test_eog_deterministic():
    cfg = synth.SynthConfig(seed=2)
    a, b = synth.gen_eog(cfg, 4), synth.gen_eog(cfg, 4)
    assert a.veog.tobytes() == b.veog.tobytes() and a.heog.tobytes() == b.heog.tobytes()


def test_raised_cosine_shape():
    w = synth.raised_cosine(81)
    assert w[0] == pytest.approx(0) and w[-1] == pytest.approx(0) and w[40] == pytest.approx(1)


def _pure(seed=0):
    return EegRecord(0, np.random.default_rng(seed).standard_normal((19, 6000)) * 20)


def _eog(seed=1):
    r = np.random.default_rng(seed)
    return synth.EogPair(r.standard_normal(6000) * 50, r.standard_normal(6000) * 30)


def test_contaminate_zero_coeffs_is_identity():
    pure = _pure()
    out = synth.contaminate(pure, _eog(), synth.ContaminationCoeffs.zeros())
    np.testing.assert_array_equal(out.samples, pure.samples)


def test_contaminate_single_veog_row():
    zero = EegRecord(0, np.zeros((19, 6000)))
    eog = _eog()
    a = np.zeros(19)
    a[4] = 1.0
    out = synth.contaminate(zero, eog, synth.ContaminationCoeffs(a, np.zeros(19)))
    np.testing.assert_array_equal(out.samples[4], eog.veog.astype(np.float32))
    assert not out.samples[3].any()


def test_contaminate_linearity():
    pure, eog, coeffs = _pure(), _eog(), synth.default_coeffs()
    once = synth.contaminate(pure, eog, coeffs).samples.astype(np.float64) - pure.samples
    twice = synth.contaminate(pure, eog, coeffs.scaled(2)).samples.astype(np.float64) - pure.samples
    np.testing.assert_allclose(twice, 2 * once, atol=1e-4)


def test_contaminate_length_mismatch():
    eog = synth.EogPair(np.zeros(5999), np.zeros(5999))
    with pytest.raises(LengthMismatch):
        synth.contaminate(_pure(), eog, synth.default_coeffs())


def test_artifact_reconstructs_from_sources():
    cfg = synth.SynthConfig(seed=3)
    coeffs = synth.default_coeffs()
    pair, eog = synth.make_subject(cfg, coeffs, 5)
    diff = pair.contaminated.samples.astype(np.float64) - pair.pure.samples
    model = coeffs.a[:, None] * eog.veog + coeffs.b[:, None] * eog.heog
    assert np.abs(diff - model).max() <= 1e-4


def test_default_coeffs_profile():
    c = synth.default_coeffs()
    assert c.a.shape == c.b.shape == (19,)
    for lab in ("FP1", "FP2", "F7", "F8", "F3", "F4", "Fz"):
        assert 0.6 <= c.a[channel_index(lab)] <= 1.0
    for lab in ("C3", "C4", "Cz"):
        assert 0.2 <= c.a[channel_index(lab)] <= 0.5
    for lab in ("O1", "O2"):
        assert 0.05 <= c.a[channel_index(lab)] <= 0.15
    assert np.all(c.b >= 0)
    assert c.b[channel_index("FP1")] > c.b[channel_index("FP2")]
    assert c.b[channel_index("Cz")] == pytest.approx(0.5 * c.a[channel_index("Cz")])


def test_coeffs_reject_bad_input():
    with pytest.raises(LengthMismatch):
        synth.ContaminationCoeffs(np.ones(18), np.ones(18))
    with pytest.raises(ValueError):
        synth.ContaminationCoeffs(-np.ones(19), np.ones(19))


def test_coeffs_text_round_trip():
    c = synth.default_coeffs()
    back, seed = synth.parse_coeffs(synth.format_coeffs(c, 42))
    assert seed == 42
    np.testing.assert_array_equal(back.a, c.a)
    np.testing.assert_array_equal(back.b, c.b)


def test_make_dataset_shapes_and_contamination(small_cfg, small_pairs):
    assert len(small_pairs) == small_cfg.n_subjects
    for s, pair in enumerate(small_pairs):
        assert pair.subject_id == s
        assert pair.pure.samples.shape == (19, 6000)
        for ch in FRONTAL:
            assert mse(pair.contaminated.samples[ch], pair.pure.samples[ch]) > 0


def test_make_dataset_default_count():
    cfg = synth.SynthConfig()
    assert cfg.n_subjects == 54 and cfg.n_samples == 6000


def test_dataset_files_byte_identical(tmp_path):
    cfg = synth.SynthConfig(n_subjects=3, seed=8)
    coeffs = synth.default_coeffs()
    for name in ("a", "b"):
        synth.write_dataset(synth.make_dataset(cfg, coeffs), coeffs, cfg.seed, tmp_path / name)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert "coeffs.txt" in files and "sub002.cont.eegr" in files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_subject_order_independent():
    cfg = synth.SynthConfig(n_subjects=4, seed=1)
    coeffs = synth.default_coeffs()
    direct, _ = synth.make_subject(cfg, coeffs, 3)
    full = synth.make_dataset(cfg, coeffs)[3]
    np.testing.assert_array_equal(direct.contaminated.samples, full.contaminated.samples)


def test_labels_cover_profile():
    assert set(synth.DEFAULT_VEOG_WEIGHTS) == set(CHANNEL_LABELS)
