import xml.etree.ElementTree as ET
from types import SimpleNamespace

import numpy as np
import pytest

from eogscrub import codec, report
from eogscrub.errors import EmptyInput, EmptySet, LengthMismatch, SchemeMismatch
from eogscrub.report import EvalReport
from eogscrub.signal import CHANNEL_LABELS
from eogscrub.unet import UNet, UNetCheckpoint, UNetConfig

SVG = "{http://www.w3.org/2000/svg}"


def _identity_ckpt(scheme, channel=-1):
    # dirac head with all other weights zeroed: an exact identity on [0, 1] planes
    model = UNet(UNetConfig(base_width=1))
    params = {k: np.zeros_like(v) for k, v in model.params.items()}
    for name in ("enc0.conv1", "enc0.conv2", "dec0.conv1", "dec0.conv2"):
        params[f"{name}.w"][0, 0, 1, 1] = 1
    params["head.w"][0, 0] = 1
    return UNetCheckpoint(model.config, params, scheme, channel)


def _items(n, channel, method=1, shape=(16, 16)):
    r = np.random.default_rng(channel + 10)
    out = []
    for _ in range(n):
        px = r.uniform(size=shape)
        norm = codec.NormParams(0.0, 1.0)
        img = codec.ImageSample(px, norm, channel=channel, method=method)
        out.append((img, img))
    return out


def test_perfect_predictions_give_zero_report():
    ckpts = {ch: _identity_ckpt("m1", ch) for ch in range(19)}
    items = [it for ch in range(19) for it in _items(2, ch)]
    rep = report.evaluate(ckpts, items, "m1")
    assert rep.average_mse == 0.0 and set(rep.per_channel_mse.values()) == {0.0}
    assert rep.n_test == 38


def test_evaluate_errors():
    with pytest.raises(EmptySet):
        report.evaluate({}, [], "m1")
    with pytest.raises(SchemeMismatch):
        report.evaluate(_identity_ckpt("m3"), _items(1, -1, method=1), "m3")
    with pytest.raises(SchemeMismatch):
        report.evaluate(_identity_ckpt("m2"), _items(1, 0), "m3")


def _report():
    r = np.random.default_rng(3)
    per = {ch: float(v) for ch, v in enumerate(r.uniform(1e-4, 1e-2, 19))}
    base = {ch: float(v) for ch, v in enumerate(r.uniform(1e-2, 1e-1, 19))}
    return EvalReport("m1", per, float(np.mean(list(per.values()))), 152, base,
                      float(np.mean(list(base.values()))))


def test_tsv_round_trip_exact():
    rep = _report()
    back = report.report_from_tsv(report.report_to_tsv(rep))
    assert back.per_channel_mse == rep.per_channel_mse
    assert back.contaminated_per_channel == rep.contaminated_per_channel
    assert back.average_mse == rep.average_mse and back.n_test == rep.n_test


def test_tsv_average_matches_rows():
    rows = [line.split("\t") for line in report.report_to_tsv(_report()).splitlines()[1:]]
    per = [float(r[4]) for r in rows if r[1] != "avg"]
    avg = float(next(r[4] for r in rows if r[1] == "avg"))
    assert len(per) == 19
    assert abs(avg - np.mean(per)) <= 1e-9


def test_single_value_scheme_tsv():
    rep = EvalReport("m3", None, 0.01, 8, None, 0.05)
    text = report.report_to_tsv(rep)
    assert len(text.splitlines()) == 2
    assert report.report_from_tsv(text).average_mse == 0.01


def test_published_average_discrepancy():
    assert report.published_channel_mean() == pytest.approx(0.000665, abs=1e-6)
    assert report.PUBLISHED_SCHEME_MSE["m1"] == 0.000573
    table = report.channel_table_tsv(_report())
    assert table.splitlines()[-1].split("\t")[-1] == repr(report.published_channel_mean())


def test_scheme_table_and_ranking():
    reps = [EvalReport("m2", None, 0.03, 154), EvalReport("m1", None, 0.001, 152),
            EvalReport("m3", None, 0.007, 8)]
    assert report.scheme_ranking(reps) == ["m1", "m3", "m2"]
    lines = report.scheme_table_tsv(reps).splitlines()
    assert [ln.split("\t")[0] for ln in lines] == ["scheme", "m1", "m2", "m3"]
    assert "m1" in report.format_table(reps[1])


def _paths(svg_text):
    root = ET.fromstring(svg_text)
    return root, [g for g in root.iter(SVG + "g") if g.get("class") == "panel"]


def test_signal_plot_structure():
    r = np.random.default_rng(0)
    pure, noisy = r.uniform(size=5400), r.uniform(size=5400)
    root, panels = _paths(report.render_signal_plot(pure, pure, noisy, 9))
    assert len(panels) == 2
    for g in panels:
        paths = g.findall(SVG + "path")
        assert len(paths) == 2
        for p in paths:
            assert p.get("d").count("L") + 1 <= 5400
    top = panels[0].findall(SVG + "path")
    assert top[0].get("d") == top[1].get("d")
    assert CHANNEL_LABELS[9] in "".join(root.itertext())


def test_signal_plot_length_mismatch():
    with pytest.raises(LengthMismatch):
        report.render_signal_plot(np.zeros(5), np.zeros(4), np.zeros(5), 0)


def _curve(train, val, best):
    return SimpleNamespace(train_curve=train, val_curve=val, best_epoch=best)


def test_loss_curves_single_epoch():
    _, panels = _paths(report.render_loss_curves({"m1": _curve([0.1], [0.2], 1)}))
    paths = panels[0].findall(SVG + "path")
    assert len(paths) == 2 and all("L" not in p.get("d") for p in paths)


def test_loss_curves_best_rule_and_lengths():
    curves = {"m1": _curve([1, 0.5, 0.2, 0.1], [1, 0.4, 0.5, 0.6], 2), "m2": _curve([1, 0.9], [1, 0.8], 2)}
    svg = report.render_loss_curves(curves)
    _, panels = _paths(svg)
    assert len(panels) == 2
    counts = [p.findall(SVG + "path")[1].get("d").count("L") + 1 for p in panels]
    assert counts == [4, 2]
    rules = [ln for p in panels for ln in p.findall(SVG + "line") if ln.get("class") == "best"]
    assert len(rules) == 2 and rules[0].get("x1") == rules[0].get("x2")
    assert svg == report.render_loss_curves(curves)


def test_loss_curves_empty():
    with pytest.raises(EmptyInput):
        report.render_loss_curves({})
