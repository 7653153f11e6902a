"""Run configuration: defaults < ``key = value`` file < command-line flags."""

from __future__ import annotations

from pathlib import Path

from .codec import CodecConfig
from .errors import ConfigError
from .synth import SynthConfig
from .trainer import SchemeId, TrainConfig
from .unet import UNetConfig


def _auto_int(text):
    return None if str(text).lower() in ("auto", "none", "") else int(text)


# key -> (parser, default)
SCHEMA = {
    "seed": (int, 0),
    "subjects": (int, 54),
    "samples": (int, 6000),
    "eeg_amp_uV": (float, 20.0),
    "eog_amp_uV": (float, 100.0),
    "veog_baseline_frac": (float, 0.5),
    "heog_frac": (float, 1.0),
    "cutoff_hz": (float, 40.0),
    "filter_taps": (int, 101),
    "truncate_len": (int, 5400),
    "depth": (int, 4),
    "base_width": (int, 16),
    "init": (str, "dirac"),
    "learning_rate": (float, 1e-4),
    "batch_size": (int, 2),
    "max_epochs": (int, 120),
    "steps_per_epoch": (_auto_int, None),
    "beta1": (float, 0.9),
    "beta2": (float, 0.999),
    "epsilon": (float, 1e-8),
    "dropout_rate": (float, 0.5),
    "patience": (int, 10),
}


class RunConfig(dict):
    """Fully resolved settings; every key in :data:`SCHEMA` is present."""

    @classmethod
    def resolve(cls, path=None, overrides=None):
        cfg = cls({k: default for k, (_, default) in SCHEMA.items()})
        if path is not None:
            cfg.update_from(parse_config_text(Path(path).read_text()))
        if overrides:
            cfg.update_from({k: v for k, v in overrides.items() if v is not None})
        # early stopping cannot wait longer than the run
        cfg["patience"] = min(cfg["patience"], cfg["max_epochs"])
        return cfg

    def update_from(self, values):
        for key, raw in values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            parser = SCHEMA[key][0]
            try:
                self[key] = None if raw is None else parser(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None

    def dump(self):
        lines = []
        for key in SCHEMA:
            v = self[key]
            lines.append(f"{key} = {'auto' if v is None else (repr(v) if isinstance(v, float) else v)}")
        return "\n".join(lines) + "\n"

    def synth(self):
        return SynthConfig(n_subjects=self["subjects"], n_samples=self["samples"], seed=self["seed"],
                           eeg_amp_uV=self["eeg_amp_uV"], eog_amp_uV=self["eog_amp_uV"],
                           veog_baseline_frac=self["veog_baseline_frac"], heog_frac=self["heog_frac"])

    def codec(self, scheme):
        return CodecConfig.for_method(SchemeId(scheme).method, cutoff_hz=self["cutoff_hz"],
                                      filter_taps=self["filter_taps"], truncate_len=self["truncate_len"])

    def unet(self):
        return UNetConfig(depth=self["depth"], base_width=self["base_width"], dropout_rate=self["dropout_rate"])

    def train(self):
        return TrainConfig(learning_rate=self["learning_rate"], batch_size=self["batch_size"],
                           max_epochs=self["max_epochs"], steps_per_epoch=self["steps_per_epoch"],
                           beta1=self["beta1"], beta2=self["beta2"], epsilon=self["epsilon"],
                           dropout_rate=self["dropout_rate"], patience=min(self["patience"], self["max_epochs"]),
                           seed=self["seed"], init=self["init"])


def parse_config_text(text):
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values
