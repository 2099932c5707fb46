"""Versioned binary checkpoints for fitted precoders.

Layout (little-endian)::

    b"FDDCKPT\\0" | u32 version | 32-byte SHA-256 spec hash
    | u32 n | n bytes of JSON header (class, params, data shapes, history)
    | u32 n_arrays | per array: u32 ndim, ndim x u32 dims, f64 values (C order)

The spec hash covers the estimator class and its hyper-parameters; loading
into an estimator whose hash differs is rejected.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .._io import atomic_write_bytes
from ..baselines import PrincipalComponentPrecoder
from ..dataset import ArrayPose
from ..exceptions import CheckpointError
from .estimators import AoaEncoderDecoderPrecoder, DNNPrecoder, EncoderDecoderPrecoder, _model_params
from .training import TrainingLog

MAGIC = b"FDDCKPT\0"
VERSION = 1

ESTIMATORS = {
    cls.__name__: cls
    for cls in (DNNPrecoder, EncoderDecoderPrecoder, AoaEncoderDecoderPrecoder, PrincipalComponentPrecoder)
}


def _jsonable(value):
    if isinstance(value, ArrayPose):
        return value.to_dict()
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def spec_document(estimator):
    return {"class": type(estimator).__name__, "params": _jsonable(estimator.get_params(deep=False))}


def spec_hash(estimator) -> bytes:
    doc = json.dumps(spec_document(estimator), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).digest()


def _arrays(estimator):
    if isinstance(estimator, PrincipalComponentPrecoder):
        w = estimator.w_max_
        return [w.real.copy(), w.imag.copy(), np.array([estimator.eigenvalue_])]
    return [np.asarray(p) for p in estimator._network_params()]


def encode_checkpoint(estimator) -> bytes:
    if not hasattr(estimator, "train_digest_"):
        raise CheckpointError("estimator is not fitted")
    header = spec_document(estimator)
    header["n_antennas"] = estimator.n_antennas_
    header["n_uplink_subcarriers"] = estimator.n_uplink_subcarriers_
    header["train_digest"] = estimator.train_digest_
    header["history"] = list(getattr(estimator, "history_", []))
    header_bytes = json.dumps(header, sort_keys=True).encode()
    arrays = _arrays(estimator)
    parts = [MAGIC, struct.pack("<I", VERSION), spec_hash(estimator),
             struct.pack("<I", len(header_bytes)), header_bytes, struct.pack("<I", len(arrays))]
    for a in arrays:
        a = np.ascontiguousarray(a, dtype="<f8")
        parts.append(struct.pack(f"<I{a.ndim}I", a.ndim, *a.shape))
        parts.append(a.tobytes())
    return b"".join(parts)


def save_checkpoint(estimator, path):
    return atomic_write_bytes(path, encode_checkpoint(estimator))


class _Reader:
    def __init__(self, buf):
        self.buf, self.pos = buf, 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"checkpoint truncated at byte {self.pos}")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def shape(self):
        ndim = self.u32()
        return struct.unpack(f"<{ndim}I", self.take(4 * ndim))


def decode_checkpoint(buf: bytes, estimator=None):
    r = _Reader(buf)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    stored_hash = r.take(32)
    header = json.loads(r.take(r.u32()).decode())
    arrays = []
    for _ in range(r.u32()):
        shape = r.shape()
        n = int(np.prod(shape))
        arrays.append(np.frombuffer(r.take(8 * n), dtype="<f8").reshape(shape).copy())
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after checkpoint payload")

    if estimator is None:
        cls = ESTIMATORS.get(header["class"])
        if cls is None:
            raise CheckpointError(f"unknown estimator class {header['class']!r}")
        estimator = cls(**header["params"])
    if spec_hash(estimator) != stored_hash:
        raise CheckpointError(
            f"spec hash mismatch: checkpoint was written for {header['class']} with params "
            f"{header['params']}, not {spec_document(estimator)}"
        )
    estimator.n_antennas_ = header["n_antennas"]
    estimator.n_uplink_subcarriers_ = header["n_uplink_subcarriers"]
    estimator.train_digest_ = header["train_digest"]
    if isinstance(estimator, PrincipalComponentPrecoder):
        estimator.w_max_ = arrays[0] + 1j * arrays[1]
        estimator.eigenvalue_ = float(arrays[2][0])
        return estimator
    model = estimator._skeleton()
    params = _model_params(model)
    if len(params) != len(arrays) or any(p.shape != a.shape for p, a in zip(params, arrays)):
        raise CheckpointError("weight arrays do not match the model architecture")
    for p, a in zip(params, arrays):
        p[...] = a
    model.log = TrainingLog(history=list(header.get("history", [])))
    model.train_digest_ = estimator.train_digest_
    estimator.model_ = model
    return estimator


def load_checkpoint(path, estimator=None):
    """Restore a fitted estimator; pass ``estimator`` to enforce its spec."""
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), estimator)
