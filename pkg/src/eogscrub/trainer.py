"""Adam training with early stopping, and the three training schemes.

Schemes:

* ``m1`` - one model per channel, each trained on that channel's 80x80 images;
* ``m2`` - one model over the pooled 80x80 images of every channel;
* ``m3`` - one model over 512x256 whole-record images.

Network inputs are contaminated images normalized over their own range. Targets
are the pure signals pushed through the same pipeline with the *contaminated*
normalization, so a prediction decodes with the only params known at inference.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import codec
from .errors import DegenerateParams, EmptySet, SchemeMismatch, ShapeMismatch
from .signal import N_CHANNELS, DatasetSplit, EegRecord, mse, split_dataset
from .unet import UNet, UNetCheckpoint, UNetConfig


class SchemeId(str, enum.Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    @property
    def method(self):
        return int(self.value[1])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 2
    max_epochs: int = 120
    steps_per_epoch: int | None = None  # None: ceil(n_train / batch_size)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dropout_rate: float = 0.5
    patience: int = 10
    seed: int = 0
    split_ratios: tuple = (0.70, 0.15, 0.15)
    init: str = "dirac"  # weight initialization, see unet.model.init_params

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("learning_rate, batch_size, max_epochs and patience must be positive")
        if self.patience > self.max_epochs:
            raise ValueError("patience exceeds max_epochs")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ValueError("steps_per_epoch must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise ValueError("bad Adam constants")
        if self.init not in ("he", "dirac"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_step(params, grads, state, cfg):
    """One bias-corrected Adam update, applied in place. Returns ``(params, state)``."""
    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= (cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)).astype(p.dtype, copy=False)
    return params, state


class EarlyStopping:
    """Tracks the best validation score; any strict decrease resets patience."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch, value):
        if value < self.best:
            self.best, self.best_epoch, self.bad_epochs = value, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self):
        return self.bad_epochs >= self.patience


@dataclass
class FitResult:
    train_curve: list
    val_curve: list
    best_epoch: int  # 1-based
    best_params: dict
    stopped_early: bool
    config: UNetConfig = None

    @property
    def epochs_run(self):
        return len(self.val_curve)

    @property
    def best_val(self):
        return self.val_curve[self.best_epoch - 1]

    def checkpoint(self, scheme="", channel=-1):
        return UNetCheckpoint(self.config, {k: v.copy() for k, v in self.best_params.items()}, scheme, channel)


def _as_batch(images):
    if isinstance(images, np.ndarray):
        arr = images
    else:
        arr = np.stack([np.asarray(img.pixels if hasattr(img, "pixels") else img) for img in images])
    if arr.ndim == 3:
        arr = arr[:, None]
    return np.ascontiguousarray(arr, dtype=np.float32)


def predict(model, inputs, batch_size=8):
    x = _as_batch(inputs)
    return np.concatenate([model.predict(x[i:i + batch_size]) for i in range(0, len(x), batch_size)])


def dataset_mse(model, inputs, targets, batch_size=8):
    """Pooled MSE of inference-mode predictions (float64 accumulation)."""
    x, y = _as_batch(inputs), _as_batch(targets)
    total = 0.0
    for i in range(0, len(x), batch_size):
        d = model.predict(x[i:i + batch_size]).astype(np.float64) - y[i:i + batch_size]
        total += float(np.dot(d.ravel(), d.ravel()))
    return total / y.size


def _batch_schedule(n, batch, steps, rng):
    """Index batches for one epoch drawn from consecutive fresh permutations."""
    need = steps * batch if steps else n
    order = []
    while len(order) < need:
        order.extend(rng.permutation(n).tolist())
    order = order[:need]
    return [order[i:i + batch] for i in range(0, need, batch)]


def train_step(model, state, x, y, cfg, rng):
    """Forward, MSE gradient and Adam update on one minibatch; returns the batch loss."""
    out, cache = model.forward(x, training=True, rng=rng)
    diff = out.astype(np.float64) - y
    loss = float(np.dot(diff.ravel(), diff.ravel()) / diff.size)
    grads = model.backward(cache, (2.0 / diff.size) * diff)
    adam_step(model.params, grads, state, cfg)
    model.mark_updated()
    return loss


def fit(model, train_images, val_images, cfg=None, stream=(), on_epoch=None):
    """Train ``model`` in place and restore its best-validation weights.

    ``train_images`` and ``val_images`` are ``(inputs, targets)`` pairs of image
    sequences or ``(n, 1, H, W)`` arrays. ``on_epoch(epoch, train_mse, val_mse)``
    is called after every epoch.
    """
    cfg = cfg or TrainConfig()
    xt, yt = (_as_batch(a) for a in train_images)
    xv, yv = (_as_batch(a) for a in val_images)
    if len(xt) == 0 or len(xv) == 0:
        raise EmptySet("training and validation sets must be nonempty")
    if xt.shape != yt.shape or xv.shape != yv.shape or xt.shape[1:] != xv.shape[1:]:
        raise ShapeMismatch("input/target image shapes disagree")
    model.config.check_input(xt[:1].shape)

    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1000, *stream)))
    steps = cfg.steps_per_epoch or math.ceil(len(xt) / cfg.batch_size)
    state = AdamState()
    stopper = EarlyStopping(cfg.patience)
    train_curve, val_curve = [], []
    best_params = model.copy_params()

    for epoch in range(1, cfg.max_epochs + 1):
        losses, weights = [], []
        for idx in _batch_schedule(len(xt), cfg.batch_size, steps, rng):
            losses.append(train_step(model, state, xt[idx], yt[idx], cfg, rng))
            weights.append(len(idx))
        train_mse = float(np.average(losses, weights=weights))
        val_mse = dataset_mse(model, xv, yv)
        train_curve.append(train_mse)
        val_curve.append(val_mse)
        if on_epoch is not None:
            on_epoch(epoch, train_mse, val_mse)
        if stopper.update(epoch, val_mse):
            best_params = model.copy_params()
        if stopper.should_stop:
            break

    model.load_params(best_params)
    return FitResult(train_curve, val_curve, stopper.best_epoch, best_params,
                     stopped_early=len(val_curve) < cfg.max_epochs, config=model.config)


# -- schemes -------------------------------------------------------------------

def codec_config(scheme, **overrides):
    return codec.CodecConfig.for_method(SchemeId(scheme).method, **overrides)


def encode_pair(pair, scheme, codec_cfg, channel=None):
    """Input/target images for one subject (method 3) or one channel (methods 1-2)."""
    scheme = SchemeId(scheme)
    if scheme is SchemeId.M3:
        x = codec.record_to_image(pair.contaminated, codec_cfg)
        y = codec.record_to_image(pair.pure, codec_cfg, norm=x.norm)
    else:
        x = codec.channel_to_image(pair.contaminated, channel, codec_cfg, method=scheme.method)
        y = codec.channel_to_image(pair.pure, channel, codec_cfg, norm=x.norm, method=scheme.method)
    return x, y


@dataclass
class PreparedSet:
    """Image pairs for one scheme, keyed by ``(subject_index, channel)``; channel is -1 for m3."""
    scheme: SchemeId
    items: dict


def prepare_images(scheme, pairs, codec_cfg=None):
    scheme = SchemeId(scheme)
    codec_cfg = codec_cfg or codec_config(scheme)
    items = {}
    for s, pair in enumerate(pairs):
        if scheme is SchemeId.M3:
            items[(s, codec.ALL_CHANNELS)] = encode_pair(pair, scheme, codec_cfg)
        else:
            for ch in range(N_CHANNELS):
                items[(s, ch)] = encode_pair(pair, scheme, codec_cfg, ch)
    return PreparedSet(scheme, items)


def scheme_split(scheme, n_subjects, cfg):
    """Subject-level split for m1/m3, image-level (subject-major order) for m2."""
    n = n_subjects * N_CHANNELS if SchemeId(scheme) is SchemeId.M2 else n_subjects
    return split_dataset(n, cfg.split_ratios, cfg.seed)


def split_keys(scheme, split, part, n_subjects):
    """Map split indices of ``part`` ('train'|'val'|'test') to PreparedSet keys."""
    idx = getattr(split, part)
    scheme = SchemeId(scheme)
    if scheme is SchemeId.M2:
        return [(i // N_CHANNELS, i % N_CHANNELS) for i in idx]
    if scheme is SchemeId.M3:
        return [(i, codec.ALL_CHANNELS) for i in idx]
    return [(i, ch) for ch in range(N_CHANNELS) for i in idx]


def _stack(prepared, keys):
    xs = [prepared.items[k][0] for k in keys]
    ys = [prepared.items[k][1] for k in keys]
    return _as_batch(xs), _as_batch(ys)


@dataclass
class SchemeRun:
    scheme: SchemeId
    split: DatasetSplit
    fits: dict  # channel (or -1) -> FitResult

    def checkpoints(self):
        return {ch: f.checkpoint(self.scheme.value, ch) for ch, f in self.fits.items()}


def _fit_one(scheme, prepared, split, n_subjects, unet_cfg, train_cfg, channel, on_epoch):
    train = split_keys(scheme, split, "train", n_subjects)
    val = split_keys(scheme, split, "val", n_subjects)
    if scheme is SchemeId.M1:
        train = [k for k in train if k[1] == channel]
        val = [k for k in val if k[1] == channel]
    stream = (SchemeId(scheme).method, channel + 1)
    seed = int(np.random.SeedSequence((train_cfg.seed, *stream)).generate_state(1)[0])
    model = UNet(unet_cfg, seed=seed, init=train_cfg.init)
    cb = None if on_epoch is None else (lambda e, t, v: on_epoch(channel, e, t, v))
    return fit(model, _stack(prepared, train), _stack(prepared, val), train_cfg, stream, cb)


def train_scheme(scheme, pairs=None, codec_cfg=None, train_cfg=None, unet_cfg=None, workers=1,
                 on_epoch=None, prepared=None):
    """Fit the model(s) of one scheme. Returns a :class:`SchemeRun`.

    Pass either the signal ``pairs`` or an already encoded ``prepared`` set.
    m1 fits are independent (own seed stream per channel), so ``workers > 1``
    runs them on a thread pool without changing any result.
    """
    scheme = SchemeId(scheme)
    train_cfg = train_cfg or TrainConfig()
    unet_cfg = unet_cfg or UNetConfig(dropout_rate=train_cfg.dropout_rate)
    if prepared is None:
        prepared = prepare_images(scheme, pairs, codec_cfg)
    if prepared.scheme is not scheme and {prepared.scheme, scheme} != {SchemeId.M1, SchemeId.M2}:
        raise SchemeMismatch(f"images prepared for {prepared.scheme.value}, training {scheme.value}")
    n_subjects = len({k[0] for k in prepared.items})
    split = scheme_split(scheme, n_subjects, train_cfg)

    channels = list(range(N_CHANNELS)) if scheme is SchemeId.M1 else [codec.ALL_CHANNELS]
    job = lambda ch: _fit_one(scheme, prepared, split, n_subjects, unet_cfg, train_cfg, ch, on_epoch)  # noqa: E731
    if workers > 1 and len(channels) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, channels))
    else:
        results = [job(ch) for ch in channels]
    return SchemeRun(scheme, split, dict(zip(channels, results)))


def _model_for(checkpoints, scheme, channel):
    ckpt = checkpoints[channel] if scheme is SchemeId.M1 else checkpoints
    if isinstance(ckpt, dict):
        ckpt = ckpt[codec.ALL_CHANNELS]
    if isinstance(ckpt, UNetCheckpoint):
        if ckpt.scheme and ckpt.scheme != scheme.value:
            raise SchemeMismatch(f"checkpoint trained for {ckpt.scheme}, requested {scheme.value}")
        if scheme is SchemeId.M1 and ckpt.channel not in (-1, channel):
            raise SchemeMismatch(f"checkpoint for channel {ckpt.channel} used on channel {channel}")
        return ckpt.to_model()
    return ckpt


def denoise(checkpoints, record, scheme, codec_cfg=None):
    """Purify one contaminated record; returns a ``19 x truncate_len`` EegRecord.

    ``checkpoints`` is a ``{channel: checkpoint}`` mapping for m1 and a single
    checkpoint (or model) otherwise.
    """
    scheme = SchemeId(scheme)
    codec_cfg = codec_cfg or codec_config(scheme)
    if scheme is SchemeId.M3:
        model = _model_for(checkpoints, scheme, codec.ALL_CHANNELS)
        img = codec.record_to_image(record, codec_cfg)
        if img.norm.degenerate:
            raise DegenerateParams("contaminated record is constant")
        pred = model.predict(img.pixels[None, None])[0, 0]
        samples = codec.image_to_record(codec.with_pixels(img, pred), codec_cfg)
        return EegRecord(record.subject_id, samples, record.sample_rate_hz)

    rows = []
    models = {}
    for ch in range(N_CHANNELS):
        if scheme is SchemeId.M1:
            model = models.setdefault(ch, _model_for(checkpoints, scheme, ch))
        else:
            model = models.setdefault(-1, _model_for(checkpoints, scheme, ch))
        img = codec.channel_to_image(record, ch, codec_cfg, method=scheme.method)
        if img.norm.degenerate:
            raise DegenerateParams(f"channel {ch} of the contaminated record is constant")
        pred = model.predict(img.pixels[None, None])[0, 0]
        rows.append(codec.image_to_channel(codec.with_pixels(img, pred), codec_cfg))
    return EegRecord(record.subject_id, np.stack(rows), record.sample_rate_hz)


def contamination_mse(prepared, keys):
    """MSE between input and target planes, the error of doing nothing."""
    return float(np.mean([mse(prepared.items[k][0].pixels, prepared.items[k][1].pixels) for k in keys]))
