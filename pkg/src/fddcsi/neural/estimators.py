"""Scikit-learn compatible neural precoders.

All of them consume uplink CSI ``X`` (n, M, U) and downlink targets ``y``
(n, M) in ``fit`` and return unit-norm precoders from ``predict``.
"""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .._validation import check_downlink, check_positions
from ..base import BasePrecoder
from ..dataset import ArrayPose, SampleSet
from .aoa import aoa_from_positions
from .network import EncoderDecoderSpec, Mlp, MlpSpec, Parallel, Sequential
from .layers import AngleHead
from .training import (
    ComposedPrecoder,
    LatentDecoder,
    LatentEncoder,
    NetworkPrecoder,
    TrainConfig,
    compose,
    train,
    train_supervised_decoder,
    train_supervised_encoder,
)

DNN_HIDDEN = (512, 256, 128)
ENCODER_HIDDEN = (512, 256, 64)
DECODER_HIDDEN = (64, 128, 256)
DROPOUT_AFTER = 2


def _samples(X, y):
    X = np.asarray(X)
    y = check_downlink(y, X.shape[1], X.shape[0])
    return SampleSet(X, y, np.zeros((X.shape[0], 3)))


class _NeuralPrecoder(BasePrecoder):
    def _train_config(self):
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.random_state,
            optimizer=self.optimizer,
        )

    @property
    def history_(self):
        check_is_fitted(self, "model_")
        log = self.model_.log
        return list(log.history) if log is not None else []

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(self._check_X(X))

    def _network_params(self):
        check_is_fitted(self, "model_")
        return _model_params(self.model_)


def _model_params(model):
    if isinstance(model, NetworkPrecoder):
        return model.network.params()
    return model.encoder.model.params() + model.decoder.model.params()


class DNNPrecoder(_NeuralPrecoder):
    """Four dense layers (three hidden + output), optional dropout after layer 2.

    With M = 32 and 8 uplink subcarriers the widths are
    512 -> 512 -> 256 -> 128 -> 64.
    """

    def __init__(self, hidden_layers=DNN_HIDDEN, activation="relu", dropout=0.0,
                 learning_rate=1e-3, batch_size=128, epochs=200, optimizer="adam",
                 normalize_input=True, random_state=0):
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.optimizer = optimizer
        self.normalize_input = normalize_input
        self.random_state = random_state

    def model_spec(self, n_antennas, n_subcarriers):
        widths = (2 * n_antennas * n_subcarriers, *self.hidden_layers, 2 * n_antennas)
        dropout = (DROPOUT_AFTER, self.dropout) if self.dropout else None
        return MlpSpec(widths, self.activation, dropout)

    def fit(self, X, y):
        X = self._record_fit(X)
        spec = self.model_spec(X.shape[1], X.shape[2])
        self.model_ = train(spec, _samples(X, y), self._train_config(), self.normalize_input)
        return self

    def _skeleton(self):
        spec = self.model_spec(self.n_antennas_, self.n_uplink_subcarriers_)
        return NetworkPrecoder(Mlp(spec), self.normalize_input)


class EncoderDecoderPrecoder(_NeuralPrecoder):
    """Encoder and decoder (three hidden layers each) trained end to end through a free latent space.

    ``transform`` exposes the learned latent representation.
    """

    def __init__(self, latent_dim=1, encoder_layers=ENCODER_HIDDEN, decoder_layers=DECODER_HIDDEN,
                 activation="relu", learning_rate=1e-3, batch_size=128, epochs=200, optimizer="adam",
                 normalize_input=True, random_state=0):
        self.latent_dim = latent_dim
        self.encoder_layers = encoder_layers
        self.decoder_layers = decoder_layers
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.optimizer = optimizer
        self.normalize_input = normalize_input
        self.random_state = random_state

    def model_spec(self, n_antennas, n_subcarriers):
        l = self.latent_dim
        return EncoderDecoderSpec(
            MlpSpec((2 * n_antennas * n_subcarriers, *self.encoder_layers, l), self.activation),
            MlpSpec((l, *self.decoder_layers, 2 * n_antennas), self.activation),
            "free",
        )

    def fit(self, X, y):
        X = self._record_fit(X)
        spec = self.model_spec(X.shape[1], X.shape[2])
        self.model_ = train(spec, _samples(X, y), self._train_config(), self.normalize_input)
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.encoder.encode(self._check_X(X))

    def _skeleton(self):
        spec = self.model_spec(self.n_antennas_, self.n_uplink_subcarriers_)
        return ComposedPrecoder(
            LatentEncoder(Mlp(spec.encoder), spec.latent_dim, self.normalize_input),
            LatentDecoder(Mlp(spec.decoder), spec.latent_dim),
        )


class AoaEncoderDecoderPrecoder(_NeuralPrecoder):
    """Encoder/decoder whose latent space is forced to the angle of arrival.

    ``mode="azimuth"`` uses one latent angle; ``"azimuth_elevation"`` uses two
    separately trained encoder networks. Encoder and decoder are trained
    separately on angles computed from the UE ``positions`` passed to ``fit``
    and ``array_pose``, then connected in series. ``fine_tune=True`` adds an
    end-to-end pass with the cosine loss afterwards.
    """

    def __init__(self, mode="azimuth", array_pose=None, encoder_layers=ENCODER_HIDDEN,
                 decoder_layers=DECODER_HIDDEN, activation="relu", fine_tune=False,
                 learning_rate=1e-3, batch_size=128, epochs=200, optimizer="adam",
                 normalize_input=True, random_state=0):
        self.mode = mode
        self.array_pose = array_pose
        self.encoder_layers = encoder_layers
        self.decoder_layers = decoder_layers
        self.activation = activation
        self.fine_tune = fine_tune
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.optimizer = optimizer
        self.normalize_input = normalize_input
        self.random_state = random_state

    @property
    def kinds(self):
        if self.mode == "azimuth":
            return ("azimuth",)
        if self.mode == "azimuth_elevation":
            return ("azimuth", "elevation")
        raise ValueError(f"unknown AoA mode {self.mode!r}")

    def _pose(self):
        if self.array_pose is None:
            raise ValueError("array_pose is required to derive angle labels from positions")
        if isinstance(self.array_pose, ArrayPose):
            return self.array_pose
        if isinstance(self.array_pose, dict):
            return ArrayPose.from_dict(self.array_pose)
        return ArrayPose(*self.array_pose)

    def angle_labels(self, positions):
        angles = aoa_from_positions(check_positions(positions), self._pose())
        return angles[:, : len(self.kinds)]

    def fit(self, X, y, positions=None, labels=None):
        """``labels`` (n, l) override angles derived from ``positions``."""
        X = self._record_fit(X)
        if labels is None:
            if positions is None:
                raise ValueError("fit needs UE positions (or explicit angle labels)")
            labels = self.angle_labels(check_positions(positions, X.shape[0]))
        labels = np.asarray(labels, dtype=np.float64).reshape(X.shape[0], -1)
        samples = _samples(X, y)
        cfg = self._train_config()
        enc_spec = MlpSpec((2 * X.shape[1] * X.shape[2], *self.encoder_layers, 1), self.activation)
        dec_spec = MlpSpec((len(self.kinds), *self.decoder_layers, 2 * X.shape[1]), self.activation)
        encoder = train_supervised_encoder(enc_spec, samples, labels, cfg, self.kinds, self.normalize_input)
        decoder = train_supervised_decoder(dec_spec, labels, samples.h_D, cfg, self.kinds)
        self.model_ = compose(encoder, decoder)
        if self.fine_tune:
            self.model_.fine_tune(samples, cfg)
        self.model_.train_digest_ = self.train_digest_
        return self

    def transform(self, X):
        """Estimated angles (n, l) in radians."""
        check_is_fitted(self, "model_")
        return self.model_.encoder.encode(self._check_X(X))

    def _skeleton(self):
        n_in = 2 * self.n_antennas_ * self.n_uplink_subcarriers_
        branches = []
        for kind in self.kinds:
            if kind == "azimuth":
                branches.append(Sequential([Mlp(MlpSpec((n_in, *self.encoder_layers, 2), self.activation)), AngleHead()]))
            else:
                branches.append(Mlp(MlpSpec((n_in, *self.encoder_layers, 1), self.activation)))
        enc_model = branches[0] if len(branches) == 1 else Parallel(branches)
        dec = Mlp(MlpSpec((len(self.kinds), *self.decoder_layers, 2 * self.n_antennas_), self.activation))
        return ComposedPrecoder(
            LatentEncoder(enc_model, len(self.kinds), self.normalize_input, self.kinds),
            LatentDecoder(dec, len(self.kinds), self.kinds),
        )
