"""
Synthetic contaminated recordings
=================================

Build one subject of the semi-simulated dataset and look at how the ocular
artifact spreads over the scalp.
"""

import numpy as np

from eogscrub import synth
from eogscrub.signal import CHANNEL_LABELS, mse

cfg = synth.SynthConfig(n_subjects=1, seed=7)
coeffs = synth.default_coeffs()
pair, eog = synth.make_subject(cfg, coeffs, subject=0)

print(f"record: {pair.pure.samples.shape[0]} channels x {pair.pure.n_samples} samples "
      f"at {pair.pure.sample_rate_hz:g} Hz")
print(f"blinks at samples {list(eog.blink_onsets)}")

# %%
# Coupling falls off from front to back, so the damage does too.

for ch, label in enumerate(CHANNEL_LABELS):
    err = mse(pair.contaminated.samples[ch], pair.pure.samples[ch])
    bar = "#" * int(np.sqrt(err) / 4)
    print(f"{label:>4}  a={coeffs.a[ch]:.2f} b={coeffs.b[ch]:.2f}  mse={err:9.1f} uV^2  {bar}")

# %%
# The background activity is band limited. Check it with an FFT.

x = pair.pure.samples[0].astype(np.float64)
power = np.abs(np.fft.rfft(x)) ** 2
freqs = np.fft.rfftfreq(x.size, 1 / cfg.sample_rate_hz)
inside = (freqs >= 0.5) & (freqs <= 40)
print(f"FP1 energy inside 0.5-40 Hz: {power[inside].sum() / power.sum():.4%}")
