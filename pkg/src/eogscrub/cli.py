"""``eogscrub`` command line: synth -> prepare -> train -> eval -> report (and denoise).

Outputs live under ``--out-dir``: ``dataset/``, ``images/``, ``checkpoints/``,
``reports/``. Usage errors exit 2; data and format errors exit 1 with a single
``error: <Kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import codec, report, synth, trainer
from .config import RunConfig
from .errors import EmptySet, EogScrubError, FormatError
from .signal import CHANNEL_LABELS, N_CHANNELS, DatasetSplit, load_pairs, load_record, save_record
from .trainer import SchemeId
from .unet import load_checkpoint, save_checkpoint

FIGURE_CHANNELS = (0, 3, 10)  # channels 1, 4 and 11


def _image_name(subject, channel):
    return f"sub{subject:03d}.eimg" if channel < 0 else f"sub{subject:03d}_ch{channel + 1:02d}.eimg"


def _ckpt_name(scheme, channel):
    return f"m1_ch{channel + 1:02d}.unet" if scheme is SchemeId.M1 else f"{scheme.value}.unet"


class Workspace:
    def __init__(self, root):
        self.root = Path(root)
        self.dataset = self.root / "dataset"
        self.images = self.root / "images"
        self.checkpoints = self.root / "checkpoints"
        self.reports = self.root / "reports"

    def image_dir(self, scheme, kind):
        return self.images / SchemeId(scheme).value / kind

    def emit_config(self, command, cfg):
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / f"{command}.resolved.cfg").write_text(cfg.dump())


# -- commands ------------------------------------------------------------------

def cmd_synth(args, cfg, ws):
    scfg = cfg.synth()
    coeffs = synth.default_coeffs()
    pairs = synth.make_dataset(scfg, coeffs)
    synth.write_dataset(pairs, coeffs, scfg.seed, ws.dataset)
    print(f"wrote {len(pairs)} record pairs to {ws.dataset}")


def _load_dataset(ws):
    pairs = load_pairs(ws.dataset)
    if not pairs:
        raise EmptySet(f"no *.pure.eegr / *.cont.eegr pairs in {ws.dataset}")
    return pairs


def cmd_prepare(args, cfg, ws):
    scheme = SchemeId(args.scheme)
    pairs = _load_dataset(ws)
    prepared = trainer.prepare_images(scheme, pairs, cfg.codec(scheme))
    for kind in ("cont", "pure"):
        ws.image_dir(scheme, kind).mkdir(parents=True, exist_ok=True)
    for (s, ch), (x, y) in prepared.items.items():
        name = _image_name(pairs[s].subject_id, ch)
        codec.save_image(x, ws.image_dir(scheme, "cont") / name)
        codec.save_image(y, ws.image_dir(scheme, "pure") / name)
    print(f"wrote {len(prepared.items)} image pairs to {ws.images / scheme.value}")


def load_prepared(ws, scheme):
    """Image pairs written by ``prepare``, keyed like :func:`trainer.prepare_images`."""
    scheme = SchemeId(scheme)
    cont_dir = ws.image_dir(scheme, "cont")
    files = sorted(cont_dir.glob("*.eimg"))
    if not files:
        raise EmptySet(f"no images in {cont_dir}; run prepare --scheme {scheme.value}")
    subjects = sorted({codec.load_image(f).subject_id for f in files})
    index = {sid: i for i, sid in enumerate(subjects)}
    items = {}
    for f in files:
        x = codec.load_image(f)
        y = codec.load_image(ws.image_dir(scheme, "pure") / f.name)
        items[(index[x.subject_id], x.channel)] = (x, y)
    return trainer.PreparedSet(scheme, items), subjects


def _write_split(path, split):
    lines = [f"seed = {split.seed}"] + [f"{part} = {' '.join(map(str, getattr(split, part)))}"
                                        for part in ("train", "val", "test")]
    path.write_text("\n".join(lines) + "\n")


def _read_split(path):
    if not path.exists():
        raise FormatError(f"missing split file {path}; run train first")
    fields = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    parts = {k: tuple(int(v) for v in fields.get(k, "").split()) for k in ("train", "val", "test")}
    return DatasetSplit(seed=int(fields["seed"]), **parts)


def cmd_train(args, cfg, ws):
    scheme = SchemeId(args.scheme)
    prepared, subjects = load_prepared(ws, scheme)
    ws.checkpoints.mkdir(parents=True, exist_ok=True)
    workers = int(os.environ.get("EOGSCRUB_THREADS", "1") or 1)
    logs = {}

    def on_epoch(channel, epoch, train_mse, val_mse):
        logs.setdefault(channel, []).append(f"epoch={epoch} train_mse={train_mse!r} val_mse={val_mse!r}")

    run = trainer.train_scheme(scheme, train_cfg=cfg.train(), unet_cfg=cfg.unet(),
                               workers=workers, on_epoch=on_epoch, prepared=prepared)
    for ch, ckpt in run.checkpoints().items():
        name = _ckpt_name(scheme, ch)
        save_checkpoint(ckpt, ws.checkpoints / name)
        (ws.checkpoints / name).with_suffix(".log").write_text("\n".join(logs[ch]) + "\n")
    _write_split(ws.checkpoints / f"{scheme.value}.split", run.split)
    for ch, fit in sorted(run.fits.items()):
        tag = f"ch{ch + 1:02d}" if ch >= 0 else "all"
        print(f"{scheme.value} {tag}: epochs={fit.epochs_run} best_epoch={fit.best_epoch} "
              f"best_val_mse={fit.best_val:.6g}")


def load_scheme_checkpoints(ws, scheme):
    scheme = SchemeId(scheme)
    if scheme is SchemeId.M1:
        return {ch: load_checkpoint(ws.checkpoints / _ckpt_name(scheme, ch)) for ch in range(N_CHANNELS)}
    return load_checkpoint(ws.checkpoints / _ckpt_name(scheme, -1))


def _test_items(ws, scheme):
    prepared, subjects = load_prepared(ws, scheme)
    split = _read_split(ws.checkpoints / f"{SchemeId(scheme).value}.split")
    keys = trainer.split_keys(scheme, split, "test", len(subjects))
    return [prepared.items[k] for k in keys], subjects


def _available_schemes(ws):
    return [s for s in SchemeId if (ws.checkpoints / f"{s.value}.split").exists()]


def cmd_eval(args, cfg, ws):
    schemes = [SchemeId(args.scheme)] if args.scheme else _available_schemes(ws)
    if not schemes:
        raise EmptySet("no trained schemes found")
    ws.reports.mkdir(parents=True, exist_ok=True)
    for scheme in schemes:
        items, _ = _test_items(ws, scheme)
        rep = report.evaluate(load_scheme_checkpoints(ws, scheme), items, scheme)
        (ws.reports / f"eval_{scheme.value}.tsv").write_text(report.report_to_tsv(rep))
        print(report.format_table(rep))


def _read_log(path):
    train, val = [], []
    for line in path.read_text().splitlines():
        fields = dict(tok.split("=", 1) for tok in line.split())
        train.append(float(fields["train_mse"]))
        val.append(float(fields["val_mse"]))
    return trainer.FitResult(train, val, int(np.argmin(val)) + 1, {}, stopped_early=False)


def cmd_report(args, cfg, ws):
    reports = []
    for scheme in SchemeId:
        path = ws.reports / f"eval_{scheme.value}.tsv"
        if path.exists():
            reports.append(report.report_from_tsv(path.read_text()))
    if not reports:
        raise EmptySet(f"no eval_*.tsv in {ws.reports}; run eval first")

    by_scheme = {r.scheme: r for r in reports}
    if SchemeId.M1 in by_scheme:
        (ws.reports / "table_channels.tsv").write_text(report.channel_table_tsv(by_scheme[SchemeId.M1]))
    (ws.reports / "table_schemes.tsv").write_text(report.scheme_table_tsv(reports))

    curves = {}
    for scheme in by_scheme:
        if scheme is SchemeId.M1:
            # the channel with the lowest best validation loss, as in the published figure
            logs = {ch: _read_log((ws.checkpoints / _ckpt_name(scheme, ch)).with_suffix(".log"))
                    for ch in range(N_CHANNELS)}
            ch = min(logs, key=lambda c: (min(logs[c].val_curve), c))
            curves[f"m1 (channel {ch + 1}, {CHANNEL_LABELS[ch]})"] = logs[ch]
        else:
            curves[scheme.value] = _read_log((ws.checkpoints / _ckpt_name(scheme, -1)).with_suffix(".log"))
    (ws.reports / "loss_curves.svg").write_text(report.render_loss_curves(curves))

    if SchemeId.M1 in by_scheme:
        items, _ = _test_items(ws, SchemeId.M1)
        ckpts = load_scheme_checkpoints(ws, SchemeId.M1)
        first = items[0][0].subject_id
        for ch in FIGURE_CHANNELS:
            x, y = next((x, y) for x, y in items if x.channel == ch and x.subject_id == first)
            pred = ckpts[ch].to_model().predict(x.pixels[None, None])[0, 0]
            svg = report.render_signal_plot(y.pixels.ravel(), pred.ravel(), x.pixels.ravel(), ch)
            (ws.reports / f"signal_ch{ch + 1:02d}.svg").write_text(svg)

    for rep in reports:
        print(report.format_table(rep))
    print(f"ranking (lowest MSE first): {' < '.join(report.scheme_ranking(reports))}")
    print(f"published: mean of per-channel values {report.published_channel_mean():.6f} "
          f"vs stated average {report.PUBLISHED_SCHEME_MSE['m1']:.6f}")


def cmd_denoise(args, cfg, ws):
    scheme = SchemeId(args.scheme)
    record = load_record(args.input)
    purified = trainer.denoise(load_scheme_checkpoints(ws, scheme), record, scheme, cfg.codec(scheme))
    out = Path(args.output) if args.output else ws.reports / f"{Path(args.input).name.split('.')[0]}.{scheme.value}.denoised.eegr"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_record(purified, out)
    print(f"wrote {out}")


# -- parser --------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="eogscrub", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="workspace root (default: current directory)")
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a semi-simulated dataset")
    s.add_argument("--subjects", type=int)
    s.add_argument("--samples", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("prepare", parents=[common], help="encode records as image bundles")
    s.add_argument("--scheme", required=True, choices=[x.value for x in SchemeId])
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("train", parents=[common], help="train the model(s) of one scheme")
    s.add_argument("--scheme", required=True, choices=[x.value for x in SchemeId])
    s.add_argument("--base-width", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--max-epochs", type=int)
    s.add_argument("--steps-per-epoch", help="count or 'auto'")
    s.add_argument("--learning-rate", type=float)
    s.add_argument("--patience", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("denoise", parents=[common], help="purify one contaminated record")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--scheme", required=True, choices=[x.value for x in SchemeId])
    s.add_argument("--out", dest="output")
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("eval", parents=[common], help="test-set MSE tables")
    s.add_argument("--scheme", choices=[x.value for x in SchemeId])
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("report", parents=[common], help="comparison tables and SVG figures")
    s.set_defaults(func=cmd_report)
    return p


_FLAG_KEYS = ("seed", "subjects", "samples", "base_width", "depth", "max_epochs", "steps_per_epoch",
              "learning_rate", "patience")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                parser.error(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = value.strip()
        overrides.update({k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None})
        cfg = RunConfig.resolve(args.config, overrides)
        ws = Workspace(args.out_dir)
        ws.emit_config(args.command, cfg)
        args.func(args, cfg, ws)
    except (EogScrubError, OSError, KeyError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
