"""
Training per-channel models
===========================

Scheme m1 trains one network per electrode. This trains a few channels on the
54-subject synthetic set for a handful of epochs and compares test error with
the error of leaving the signal alone. Takes a minute or two.
"""

from pathlib import Path

import numpy as np

from eogscrub import report, synth, trainer
from eogscrub.signal import CHANNEL_LABELS, channel_index
from eogscrub.trainer import TrainConfig
from eogscrub.unet import UNet, UNetConfig

pairs = synth.make_dataset(synth.SynthConfig(seed=7))
prepared = trainer.prepare_images("m1", pairs)
split = trainer.scheme_split("m1", len(pairs), TrainConfig(seed=7))
print("subjects train/val/test:", split.sizes)

cfg = TrainConfig(max_epochs=8, patience=8, learning_rate=1e-3, seed=7)
unet_cfg = UNetConfig(base_width=8)
out = Path("demo_output")
out.mkdir(exist_ok=True)



def planes(part, ch):
    keys = [k for k in trainer.split_keys("m1", split, part, len(pairs)) if k[1] == ch]
    xs = np.stack([prepared.items[k][0].pixels for k in keys])[:, None]
    ys = np.stack([prepared.items[k][1].pixels for k in keys])[:, None]
    return keys, (xs, ys)


fits = {}
for label in ("FP1", "C3", "O1"):
    ch = channel_index(label)
    _, train = planes("train", ch)
    _, val = planes("val", ch)
    fit = trainer.fit(UNet(unet_cfg, seed=ch), train, val, cfg, stream=(1, ch))
    fits[label] = fit
    keys, _ = planes("test", ch)
    ckpt = fit.checkpoint("m1", ch)
    rep = report.evaluate({ch: ckpt}, [prepared.items[k] for k in keys], "m1")
    print(f"{label}: best epoch {fit.best_epoch}, test MSE {rep.per_channel_mse[ch]:.5f} "
          f"vs contaminated {rep.contaminated_per_channel[ch]:.5f}")

    # %%
    # Target, prediction and contaminated input for the first test subject.
    x, y = prepared.items[keys[0]]
    pred = ckpt.to_model().predict(x.pixels[None, None])[0, 0]
    svg = report.render_signal_plot(y.pixels.ravel(), pred.ravel(), x.pixels.ravel(), ch)
    (out / f"signal_{CHANNEL_LABELS[ch]}.svg").write_text(svg)

(out / "loss_curves.svg").write_text(report.render_loss_curves(fits))
print("figures in", out.resolve())
print("val curves:", {k: np.round(f.val_curve, 5).tolist() for k, f in fits.items()})
