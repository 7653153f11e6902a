"""Evaluation tables (per-channel and per-scheme MSE) and SVG figures.

All numbers are MSE in normalized image units. TSV cells hold ``repr`` floats so
a parser recovers them exactly; SVGs carry no timestamps or random ids.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import EmptyInput, EmptySet, LengthMismatch, SchemeMismatch
from .signal import CHANNEL_LABELS, mse
from .trainer import SchemeId, _model_for

# Published reference values (full-scale clinical data), shown for context only.
PUBLISHED_CHANNEL_MSE = (
    0.00215, 0.00128, 0.00061, 0.00137, 0.00044, 0.00049, 0.00025, 0.00016, 0.00015, 0.00010,
    0.00158, 0.00103, 0.00053, 0.00072, 0.00026, 0.00016, 0.00080, 0.00039, 0.00016,
)
PUBLISHED_SCHEME_MSE = {"m1": 0.000573, "m2": 0.0358, "m3": 0.00712}


@dataclass
class EvalReport:
    scheme: SchemeId
    per_channel_mse: dict | None  # channel index -> MSE, m1 only
    average_mse: float
    n_test: int
    contaminated_per_channel: dict | None = None
    contaminated_mse: float | None = None

    def __post_init__(self):
        self.scheme = SchemeId(self.scheme)


def evaluate(checkpoints, test_items, scheme, batch_size=8):
    """MSE between predictions and pure targets over ``(input, target)`` image pairs.

    m1 routes every image to the model of its channel and averages per channel;
    the reported average is the arithmetic mean of the channel values.
    """
    scheme = SchemeId(scheme)
    if not test_items:
        raise EmptySet("no test images")
    groups = {}
    for x, y in test_items:
        if scheme is SchemeId.M1 and x.channel < 0:
            raise SchemeMismatch("m1 evaluation needs per-channel images")
        if scheme is SchemeId.M3 and x.method != 3:
            raise SchemeMismatch("m3 evaluation needs whole-record images")
        key = x.channel if scheme is SchemeId.M1 else -1
        groups.setdefault(key, []).append((x, y))

    errors, baseline = {}, {}
    for key in sorted(groups):
        items = groups[key]
        model = _model_for(checkpoints, scheme, key)
        xs = np.stack([x.pixels for x, _ in items])[:, None]
        preds = np.concatenate([model.predict(xs[i:i + batch_size]) for i in range(0, len(xs), batch_size)])
        errors[key] = float(np.mean([mse(p[0], y.pixels) for p, (_, y) in zip(preds, items)]))
        baseline[key] = float(np.mean([mse(x.pixels, y.pixels) for x, y in items]))

    if scheme is SchemeId.M1:
        return EvalReport(scheme, errors, float(np.mean(list(errors.values()))), len(test_items),
                          baseline, float(np.mean(list(baseline.values()))))
    return EvalReport(scheme, None, errors[-1], len(test_items), None, baseline[-1])


# -- TSV -----------------------------------------------------------------------

_COLUMNS = ("scheme", "channel", "label", "n_test", "mse", "contaminated_mse")


def report_to_tsv(report):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(_COLUMNS)
    if report.per_channel_mse:
        n_per = report.n_test // len(report.per_channel_mse)
        for ch, value in sorted(report.per_channel_mse.items()):
            base = report.contaminated_per_channel.get(ch) if report.contaminated_per_channel else None
            w.writerow((report.scheme.value, ch + 1, CHANNEL_LABELS[ch], n_per, repr(value),
                        "" if base is None else repr(base)))
    w.writerow((report.scheme.value, "avg", "ALL", report.n_test, repr(report.average_mse),
                "" if report.contaminated_mse is None else repr(report.contaminated_mse)))
    return buf.getvalue()


def report_from_tsv(text):
    rows = list(csv.DictReader(io.StringIO(text), delimiter="\t"))
    if not rows:
        raise EmptyInput("empty report")
    per, base = {}, {}
    avg = None
    for row in rows:
        if row["channel"] == "avg":
            avg = row
            continue
        ch = int(row["channel"]) - 1
        per[ch] = float(row["mse"])
        if row["contaminated_mse"]:
            base[ch] = float(row["contaminated_mse"])
    cont = float(avg["contaminated_mse"]) if avg["contaminated_mse"] else None
    return EvalReport(avg["scheme"], per or None, float(avg["mse"]), int(avg["n_test"]), base or None, cont)


def format_table(report):
    """Human-aligned console rendering of one report."""
    lines = [f"scheme {report.scheme.value}  (n_test={report.n_test})",
             f"{'ch':>4} {'label':<5} {'mse':>12} {'contaminated':>13}"]
    if report.per_channel_mse:
        for ch, v in sorted(report.per_channel_mse.items()):
            b = (report.contaminated_per_channel or {}).get(ch, float("nan"))
            lines.append(f"{ch + 1:>4} {CHANNEL_LABELS[ch]:<5} {v:>12.6f} {b:>13.6f}")
    b = report.contaminated_mse if report.contaminated_mse is not None else float("nan")
    lines.append(f"{'avg':>4} {'ALL':<5} {report.average_mse:>12.6f} {b:>13.6f}")
    return "\n".join(lines)


def channel_table_tsv(report):
    """Per-channel table next to the published per-channel values."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(("channel", "label", "mse", "contaminated_mse", "published_mse"))
    for ch, v in sorted(report.per_channel_mse.items()):
        w.writerow((ch + 1, CHANNEL_LABELS[ch], repr(v), repr(report.contaminated_per_channel[ch]),
                    repr(PUBLISHED_CHANNEL_MSE[ch])))
    w.writerow(("avg", "ALL", repr(report.average_mse), repr(report.contaminated_mse),
                repr(published_channel_mean())))
    return buf.getvalue()


def published_channel_mean():
    """Arithmetic mean of the published per-channel values (differs from the published average)."""
    return float(np.mean(PUBLISHED_CHANNEL_MSE))


def scheme_table_tsv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(("scheme", "mse", "contaminated_mse", "n_test", "published_mse"))
    for rep in sorted(reports, key=lambda r: r.scheme.value):
        w.writerow((rep.scheme.value, repr(rep.average_mse), repr(rep.contaminated_mse), rep.n_test,
                    repr(PUBLISHED_SCHEME_MSE[rep.scheme.value])))
    return buf.getvalue()


def scheme_ranking(reports):
    """Scheme ids from lowest to highest MSE."""
    return [r.scheme.value for r in sorted(reports, key=lambda r: (r.average_mse, r.scheme.value))]


# -- SVG -----------------------------------------------------------------------

_W, _PANEL_H, _PAD = 720.0, 200.0, 40.0


def _fmt(v):
    return f"{v:.2f}"


def _path(xs, ys, x0, y0, w, h, lo, hi, log=False):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if log:
        ys = np.log10(np.maximum(ys, 1e-300))
    x_lo, x_hi = float(xs.min()), float(xs.max())
    px = x0 + (xs - x_lo) / ((x_hi - x_lo) or 1.0) * w
    py = y0 + h - (ys - lo) / ((hi - lo) or 1.0) * h
    return "M" + " L".join(f"{_fmt(a)} {_fmt(b)}" for a, b in zip(px, py))


def _frame(x0, y0, w, h, title, xlabel, ylabel):
    return [
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="none" stroke="#444"/>',
        f'<text x="{_fmt(x0)}" y="{_fmt(y0 - 6)}" font-size="12">{escape(title)}</text>',
        f'<text x="{_fmt(x0 + w / 2)}" y="{_fmt(y0 + h + 16)}" font-size="10" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="{_fmt(x0 - 28)}" y="{_fmt(y0 + h / 2)}" font-size="10" text-anchor="middle" '
        f'transform="rotate(-90 {_fmt(x0 - 28)} {_fmt(y0 + h / 2)})">{escape(ylabel)}</text>',
    ]


def _svg(height, body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_W)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(_W)} {_fmt(height)}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def render_signal_plot(pure, predicted, contaminated, channel):
    """Target vs predicted (top) and target vs contaminated (bottom), normalized amplitude."""
    pure, predicted, contaminated = (np.asarray(a, dtype=np.float64).ravel() for a in (pure, predicted, contaminated))
    if not pure.size == predicted.size == contaminated.size:
        raise LengthMismatch("signals must have equal lengths")
    if pure.size < 1:
        raise EmptyInput("nothing to plot")
    t = np.arange(pure.size)
    lo = float(min(pure.min(), predicted.min(), contaminated.min()))
    hi = float(max(pure.max(), predicted.max(), contaminated.max()))
    label = CHANNEL_LABELS[channel] if 0 <= channel < len(CHANNEL_LABELS) else "ALL"
    w = _W - 2 * _PAD
    body = []
    panels = (("predicted", predicted, "#d62728"), ("contaminated", contaminated, "#7f7f7f"))
    for i, (name, other, color) in enumerate(panels):
        y0 = _PAD + i * (_PANEL_H + _PAD)
        body += [f'<g class="panel" id="panel-{name}">']
        body += _frame(_PAD, y0, w, _PANEL_H, f"channel {channel + 1} ({label}): target vs {name}",
                       "sample", "normalized amplitude")
        body.append(f'<path class="target" d="{_path(t, pure, _PAD, y0, w, _PANEL_H, lo, hi)}" '
                    f'fill="none" stroke="#1f77b4" stroke-width="0.8"/>')
        body.append(f'<path class="{name}" d="{_path(t, other, _PAD, y0, w, _PANEL_H, lo, hi)}" '
                    f'fill="none" stroke="{color}" stroke-width="0.8"/>')
        body.append("</g>")
    return _svg(2 * (_PANEL_H + _PAD) + _PAD, body)


def render_loss_curves(curves):
    """Train/validation MSE per epoch, log scale, one panel per entry.

    ``curves`` maps a panel title to an object with ``train_curve``,
    ``val_curve`` and ``best_epoch`` (e.g. a FitResult).
    """
    if not curves:
        raise EmptyInput("no curves to plot")
    w = _W - 2 * _PAD
    body = []
    for i, (title, fit) in enumerate(curves.items()):
        train, val = list(fit.train_curve), list(fit.val_curve)
        if not train or not val:
            raise EmptyInput(f"{title}: empty curve")
        y0 = _PAD + i * (_PANEL_H + _PAD)
        vals = np.log10(np.maximum(np.array(train + val, dtype=np.float64), 1e-300))
        lo, hi = math.floor(float(vals.min())), math.ceil(float(vals.max()))
        if hi == lo:
            hi = lo + 1
        n = max(len(train), len(val))
        ex = np.arange(1, n + 1)
        body += [f'<g class="panel" id="panel-{i}">']
        body += _frame(_PAD, y0, w, _PANEL_H, f"{title} (best epoch {fit.best_epoch})", "epoch", "log10 MSE")

        def epochs_path(curve):
            xs = np.arange(1, len(curve) + 1)
            # share the panel's epoch axis rather than stretching short curves
            px = _PAD + ((xs - 1) / ((n - 1) or 1)) * w
            py = y0 + _PANEL_H - (np.log10(np.maximum(curve, 1e-300)) - lo) / (hi - lo) * _PANEL_H
            return "M" + " L".join(f"{_fmt(a)} {_fmt(b)}" for a, b in zip(px, py))

        body.append(f'<path class="train" d="{epochs_path(np.array(train))}" fill="none" stroke="#1f77b4"/>')
        body.append(f'<path class="val" d="{epochs_path(np.array(val))}" fill="none" stroke="#ff7f0e"/>')
        bx = _PAD + ((fit.best_epoch - 1) / ((n - 1) or 1)) * w
        body.append(f'<line class="best" x1="{_fmt(bx)}" y1="{_fmt(y0)}" x2="{_fmt(bx)}" '
                    f'y2="{_fmt(y0 + _PANEL_H)}" stroke="#2ca02c" stroke-dasharray="4 3"/>')
        body.append(f'<text x="{_fmt(_PAD + w - 4)}" y="{_fmt(y0 + 12)}" font-size="10" text-anchor="end">'
                    f'epochs 1-{int(ex[-1])}</text>')
        body.append("</g>")
    return _svg(len(curves) * (_PANEL_H + _PAD) + _PAD, body)
