"""Training loops and the trained predictors they produce."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..base import training_digest, unit_rows
from ..dataset import as_sample_set
from ..exceptions import TrainingDivergedError
from .aoa import wrap_angle
from .layers import AngleHead
from .loss import ZeroOutputError, cosine_loss_and_grad, mse_loss_and_grad
from .network import EncoderDecoderSpec, Mlp, MlpSpec, Parallel, Sequential
from .optim import SGD, Adam
from .representation import complex_from_real, flatten_input, normalize_rms

logger = logging.getLogger(__name__)

ANGLE_KINDS = ("azimuth", "elevation")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 200
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not (self.learning_rate > 0 and self.batch_size > 0 and self.epochs > 0 and self.eps > 0):
            raise ValueError("learning rate, batch size, epochs and eps must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and 0 <= self.momentum < 1):
            raise ValueError("beta1, beta2 and momentum must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)

    def seeds(self, *keys):
        """Independent child seeds derived from ``seed`` and string/int ``keys``."""
        entropy = [self.seed] + [k if isinstance(k, int) else int.from_bytes(k.encode(), "little") for k in keys]
        ss = np.random.SeedSequence(entropy)
        init, shuffle = ss.spawn(2)
        return int(init.generate_state(1)[0]), np.random.default_rng(shuffle)


def make_optimizer(params, cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(params, cfg.learning_rate, cfg.momentum)
    return Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)


@dataclass
class TrainingLog:
    history: list
    skipped_batches: int = 0


def fit_model(model, inputs, targets, loss_fn, cfg: TrainConfig, rng) -> TrainingLog:
    """Minibatch training of ``model`` in place.

    Batches whose network output has zero norm are skipped and counted;
    a non-finite loss aborts with :class:`TrainingDivergedError`.
    """
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    opt = make_optimizer(model.params(), cfg)
    log = TrainingLog(history=[])
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            # overflow shows up as a non-finite loss, which is reported with the epoch trace
            with np.errstate(over="ignore", invalid="ignore"):
                out, cache = model.forward(inputs[idx], True, rng)
                try:
                    loss, grad = loss_fn(out, targets[idx])
                except ZeroOutputError as err:
                    log.skipped_batches += 1
                    logger.warning("epoch %d: skipping batch (%s)", epoch, err)
                    continue
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"loss became non-finite in epoch {epoch}", history=log.history + [loss]
                    )
                _, grads = model.backward(grad, cache)
                opt.step(grads)
            total += loss * len(idx)
            count += len(idx)
        log.history.append(total / count if count else float("nan"))
        if not np.isfinite(log.history[-1]):
            raise TrainingDivergedError(f"epoch {epoch} produced no finite loss", history=log.history)
        logger.debug("epoch %d loss %.6f", epoch, log.history[-1])
    return log


def uplink_features(H_U, normalize=True):
    x = flatten_input(H_U)
    return normalize_rms(x) if normalize else x


class NetworkPrecoder:
    """Trained dense network mapping uplink CSI to a unit-norm precoder."""

    def __init__(self, network, normalize_input=True, log=None, train_digest=None):
        self.network = network
        self.normalize_input = normalize_input
        self.log = log
        self.train_digest_ = train_digest

    def raw_output(self, H_U):
        return self.network.forward(uplink_features(np.asarray(H_U)[None] if np.ndim(H_U) == 2 else H_U,
                                                    self.normalize_input))[0]

    def predict(self, H_U):
        return unit_rows(complex_from_real(self.raw_output(H_U)))


class LatentEncoder:
    """Uplink CSI -> latent vector (free latent or angle estimates)."""

    def __init__(self, model, latent_dim, normalize_input=True, kinds=None):
        self.model = model
        self.latent_dim = latent_dim
        self.normalize_input = normalize_input
        self.kinds = kinds

    def encode(self, H_U):
        H = np.asarray(H_U)
        return self.model.forward(uplink_features(H[None] if H.ndim == 2 else H, self.normalize_input))[0]


class LatentDecoder:
    """Latent vector -> unit-norm precoder; azimuth inputs are wrapped onto (-pi, pi]."""

    def __init__(self, model, latent_dim, kinds=None):
        self.model = model
        self.latent_dim = latent_dim
        self.kinds = kinds

    def canonicalize(self, latent):
        z = np.array(np.atleast_2d(latent), dtype=np.float64)
        for i, kind in enumerate(self.kinds or ()):
            if kind == "azimuth":
                z[:, i] = wrap_angle(z[:, i])
        return z

    def raw_output(self, latent):
        return self.model.forward(self.canonicalize(latent))[0]

    def decode(self, latent):
        return unit_rows(complex_from_real(self.raw_output(latent)))


class ComposedPrecoder:
    """Encoder and decoder connected in series."""

    def __init__(self, encoder, decoder, log=None, train_digest=None):
        if encoder.latent_dim != decoder.latent_dim:
            raise ValueError(
                f"encoder latent width {encoder.latent_dim} != decoder latent width {decoder.latent_dim}"
            )
        self.encoder = encoder
        self.decoder = decoder
        self.log = log
        self.train_digest_ = train_digest

    def predict(self, H_U):
        return self.decoder.decode(self.encoder.encode(H_U))

    def fine_tune(self, pairs, cfg: TrainConfig):
        """Jointly refine both halves end to end with the cosine loss."""
        samples = as_sample_set(pairs)
        chain = Sequential([self.encoder.model, self.decoder.model])
        _, rng = cfg.seeds("fine-tune")
        x = uplink_features(samples.H_U, self.encoder.normalize_input)
        self.log = fit_model(chain, x, samples.h_D, cosine_loss_and_grad, cfg, rng)
        return self


def compose(encoder, decoder) -> ComposedPrecoder:
    return ComposedPrecoder(encoder, decoder)


def _resize(spec: MlpSpec, n_in=None, n_out=None):
    widths = list(spec.layer_widths)
    if n_in is not None:
        widths[0] = n_in
    if n_out is not None:
        widths[-1] = n_out
    return MlpSpec(tuple(widths), spec.activation, spec.dropout)


def _check_io(spec: MlpSpec, n_in, n_out, what):
    if spec.n_in != n_in or spec.n_out != n_out:
        raise ValueError(f"{what} spec maps {spec.n_in} -> {spec.n_out}, data needs {n_in} -> {n_out}")


def train(model_spec, pairs, cfg: TrainConfig = TrainConfig(), normalize_input=True):
    """Train a DNN (:class:`MlpSpec`) or a free-latent :class:`EncoderDecoderSpec` with ``1 - P``."""
    samples = as_sample_set(pairs)
    _, M, U = samples.H_U.shape
    x = uplink_features(samples.H_U, normalize_input)
    digest = training_digest(samples.H_U)
    init_seed, rng = cfg.seeds("model")
    if isinstance(model_spec, MlpSpec):
        _check_io(model_spec, 2 * M * U, 2 * M, "network")
        net = Mlp(model_spec, init_seed)
        log = fit_model(net, x, samples.h_D, cosine_loss_and_grad, cfg, rng)
        return NetworkPrecoder(net, normalize_input, log, digest)
    if isinstance(model_spec, EncoderDecoderSpec):
        if model_spec.latent_mode != "free":
            raise ValueError("angle latent spaces are trained with train_supervised_encoder/decoder")
        _check_io(model_spec.encoder, 2 * M * U, model_spec.latent_dim, "encoder")
        _check_io(model_spec.decoder, model_spec.latent_dim, 2 * M, "decoder")
        enc_seed, dec_seed = np.random.SeedSequence(init_seed).generate_state(2)
        enc, dec = Mlp(model_spec.encoder, int(enc_seed)), Mlp(model_spec.decoder, int(dec_seed))
        log = fit_model(Sequential([enc, dec]), x, samples.h_D, cosine_loss_and_grad, cfg, rng)
        return ComposedPrecoder(
            LatentEncoder(enc, model_spec.latent_dim, normalize_input),
            LatentDecoder(dec, model_spec.latent_dim),
            log, digest,
        )
    raise TypeError(f"unsupported model spec {type(model_spec).__name__}")


def _default_kinds(width):
    if width == 1:
        return ("azimuth",)
    if width == 2:
        return ANGLE_KINDS
    raise ValueError(f"angle labels must have 1 or 2 columns, got {width}")


def train_supervised_encoder(encoder_spec: MlpSpec, pairs, labels, cfg: TrainConfig = TrainConfig(),
                             kinds=None, normalize_input=True) -> LatentEncoder:
    """Regress angle labels from uplink CSI, one independent network per column.

    Azimuth columns are learned as (sin, cos) pairs and decoded with atan2;
    elevation columns are regressed directly. Each network's seed depends
    only on ``cfg.seed`` and its column kind. ``encoder_spec`` supplies the
    hidden layout; its input/output widths are adapted to the data.
    """
    samples = as_sample_set(pairs)
    labels = np.asarray(labels, dtype=np.float64).reshape(len(samples), -1)
    kinds = tuple(kinds) if kinds is not None else _default_kinds(labels.shape[1])
    if len(kinds) != labels.shape[1] or any(k not in ANGLE_KINDS for k in kinds) or len(set(kinds)) != len(kinds):
        raise ValueError(f"invalid label kinds {kinds} for {labels.shape[1]} label columns")
    x = uplink_features(samples.H_U, normalize_input)
    branches, logs = [], []
    for col, kind in enumerate(kinds):
        init_seed, rng = cfg.seeds("encoder", kind)
        if kind == "azimuth":
            net = Mlp(_resize(encoder_spec, x.shape[1], 2), init_seed)
            target = np.column_stack([np.sin(labels[:, col]), np.cos(labels[:, col])])
            logs.append(fit_model(net, x, target, mse_loss_and_grad, cfg, rng))
            branches.append(Sequential([net, AngleHead()]))
        else:
            net = Mlp(_resize(encoder_spec, x.shape[1], 1), init_seed)
            logs.append(fit_model(net, x, labels[:, [col]], mse_loss_and_grad, cfg, rng))
            branches.append(net)
    model = branches[0] if len(branches) == 1 else Parallel(branches)
    encoder = LatentEncoder(model, len(kinds), normalize_input, kinds)
    encoder.logs = logs
    return encoder


def train_supervised_decoder(decoder_spec: MlpSpec, labels, targets, cfg: TrainConfig = TrainConfig(),
                             kinds=None) -> LatentDecoder:
    """Learn latent angles -> downlink channel with the ``1 - P`` loss."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.complex128))
    labels = np.asarray(labels, dtype=np.float64).reshape(targets.shape[0], -1)
    kinds = tuple(kinds) if kinds is not None else _default_kinds(labels.shape[1])
    _check_io(decoder_spec, labels.shape[1], 2 * targets.shape[1], "decoder")
    init_seed, rng = cfg.seeds("decoder")
    net = Mlp(decoder_spec, init_seed)
    decoder = LatentDecoder(net, labels.shape[1], kinds)
    decoder.log = fit_model(net, decoder.canonicalize(labels), targets, cosine_loss_and_grad, cfg, rng)
    return decoder
