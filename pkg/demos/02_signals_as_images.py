"""
Signals as grayscale images
===========================

Each channel is cut to 5400 samples, low-passed at 40 Hz, stretched to 6400
samples and folded row by row into an 80 x 80 plane. Whole records become one
512 x 256 plane.
"""

from pathlib import Path

import numpy as np

from eogscrub import codec, synth

pair, _ = synth.make_subject(synth.SynthConfig(n_subjects=1, seed=7), synth.default_coeffs(), 0)
cfg = codec.CodecConfig()

img = codec.channel_to_image(pair.contaminated, channel=0, cfg=cfg)
print("plane", img.pixels.shape, "range", float(img.pixels.min()), float(img.pixels.max()))
print(f"normalization: [{img.norm.x_min:.1f}, {img.norm.x_max:.1f}] uV -> [0, 1]")

# %%
# Decoding undoes the normalization and the resampling.

back = codec.image_to_channel(img, cfg)
ref = codec.condition_channel(pair.contaminated.samples[0], cfg)
print(f"decoded {back.size} samples, max deviation {np.abs(back - ref).max():.3f} uV "
      "(linear resampling there and back)")

# %%
# The pure target is encoded with the *contaminated* normalization, so a
# network prediction can be decoded with parameters known at inference time.

target = codec.channel_to_image(pair.pure, 0, cfg, norm=img.norm)
print(f"input/target MSE in image units: {np.mean((img.pixels - target.pixels) ** 2):.5f}")

# %%
# Quantize to 8 bits and write binary PGM files to look at.

out = Path("demo_output")
out.mkdir(exist_ok=True)
for name, plane in (("fp1_contaminated", img.pixels), ("fp1_pure", np.clip(target.pixels, 0, 1))):
    q = codec.quantize_u8(plane)
    (out / f"{name}.pgm").write_bytes(b"P5\n%d %d\n255\n" % (q.shape[1], q.shape[0]) + q.tobytes())

whole = codec.record_to_image(pair.contaminated)
print("whole-record plane", whole.pixels.shape, "->", codec.image_to_record(whole).shape)
