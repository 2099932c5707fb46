"""Position-tagged CSI datasets: binary I/O, validation and preprocessing.

Binary layout (little-endian)::

    b"CSI1" | u32 M | u32 S | u32 record_count
    record_count x ( 3 x f64 position | M*S x (f32 re, f32 im), antenna-major )

The dataset metadata (carrier frequency, array pose, ...) lives in a JSON
sidecar next to the binary file, see :func:`sidecar_path`.
"""

from __future__ import annotations

import json
import struct
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_bytes, atomic_write_text
from .exceptions import DatasetError

MAGIC = b"CSI1"
_HEADER = struct.Struct("<4sIII")

DEFAULT_UL_RANGE = (0, 8)
DEFAULT_DL_INDEX = 28


def _record_dtype(M, S):
    return np.dtype([("position", "<f8", (3,)), ("csi", "<f4", (M, S, 2))])


@dataclass(frozen=True)
class ArrayPose:
    """Receive array center (m) and unit broadside direction."""

    position: tuple = (0.0, 0.0, 0.0)
    broadside: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        position = tuple(float(v) for v in self.position)
        broadside = np.asarray(self.broadside, dtype=np.float64)
        if len(position) != 3 or broadside.shape != (3,):
            raise ValueError("array pose needs 3-D position and broadside vectors")
        if abs(np.linalg.norm(broadside) - 1.0) > 1e-9:
            raise ValueError(f"broadside vector must have unit norm, got {np.linalg.norm(broadside)}")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "broadside", tuple(float(v) for v in broadside))

    def to_dict(self):
        return {"position": list(self.position), "broadside": list(self.broadside)}

    @classmethod
    def from_dict(cls, d):
        return cls(position=tuple(d["position"]), broadside=tuple(d["broadside"]))


@dataclass(frozen=True)
class DatasetMeta:
    num_antennas: int
    num_avg_subcarriers: int
    num_raw_subcarriers: int | None = None
    carrier_freq_hz: float = 1.272e9
    array_pose: ArrayPose = field(default_factory=ArrayPose)
    bandwidth_hz: float | None = None

    def __post_init__(self):
        if self.num_raw_subcarriers is None:
            object.__setattr__(self, "num_raw_subcarriers", self.num_avg_subcarriers)
        if self.num_antennas < 1 or self.num_avg_subcarriers < 1 or self.num_raw_subcarriers < 1:
            raise ValueError("antenna and subcarrier counts must be positive")
        if self.num_raw_subcarriers % self.num_avg_subcarriers:
            raise ValueError(
                f"{self.num_raw_subcarriers} raw subcarriers cannot be averaged "
                f"into {self.num_avg_subcarriers} equal batches"
            )
        if not self.carrier_freq_hz > 0:
            raise ValueError("carrier frequency must be positive")
        if isinstance(self.array_pose, dict):
            object.__setattr__(self, "array_pose", ArrayPose.from_dict(self.array_pose))

    @property
    def averaging_batch(self) -> int:
        return self.num_raw_subcarriers // self.num_avg_subcarriers

    def to_dict(self):
        return {
            "num_antennas": self.num_antennas,
            "num_raw_subcarriers": self.num_raw_subcarriers,
            "num_avg_subcarriers": self.num_avg_subcarriers,
            "carrier_freq_hz": self.carrier_freq_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "array_pose": self.array_pose.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            num_antennas=int(d["num_antennas"]),
            num_avg_subcarriers=int(d["num_avg_subcarriers"]),
            num_raw_subcarriers=d.get("num_raw_subcarriers"),
            carrier_freq_hz=float(d.get("carrier_freq_hz", 1.272e9)),
            array_pose=ArrayPose.from_dict(d["array_pose"]) if "array_pose" in d else ArrayPose(),
            bandwidth_hz=d.get("bandwidth_hz"),
        )


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CsiRecord:
    """One channel snapshot: 3-D position and an M x S complex matrix."""

    position: np.ndarray
    csi: np.ndarray

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64)
        csi = np.asarray(self.csi)
        if position.shape != (3,):
            raise DatasetError(f"position must have 3 coordinates, got shape {position.shape}")
        if csi.ndim != 2:
            raise DatasetError(f"csi must be an M x S matrix, got shape {csi.shape}")
        if not np.iscomplexobj(csi):
            csi = csi.astype(np.complex128)
        _check_record_values(position, csi)
        object.__setattr__(self, "position", _readonly(position))
        object.__setattr__(self, "csi", _readonly(csi))


def _check_record_values(position, csi, location=None):
    if not np.all(np.isfinite(position)):
        raise DatasetError("non-finite position", location)
    if not np.all(np.isfinite(csi)):
        raise DatasetError("non-finite CSI value", location)
    if not np.any(csi != 0):
        raise DatasetError("all-zero CSI matrix", location)


@dataclass(frozen=True, eq=False)
class SamplePair:
    """Uplink input ``H_U`` (M x U), downlink target ``h_D`` (M,) and position."""

    H_U: np.ndarray
    h_D: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.H_U)):
            raise DatasetError("uplink CSI contains non-finite values")
        if not np.linalg.norm(self.h_D) > 0:
            raise DatasetError("downlink CSI vector has zero norm")


class CsiDataset(Sequence):
    """Immutable, array-backed sequence of :class:`CsiRecord`.

    ``positions`` has shape (n, 3) and ``csi`` shape (n, M, S).
    """

    def __init__(self, positions, csi, meta: DatasetMeta | None = None, validate=True):
        positions = np.asarray(positions, dtype=np.float64)
        csi = np.asarray(csi)
        if not np.iscomplexobj(csi):
            csi = csi.astype(np.complex128)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise DatasetError(f"positions must have shape (n, 3), got {positions.shape}")
        if csi.ndim != 3 or csi.shape[0] != positions.shape[0]:
            raise DatasetError(f"csi must have shape (n, M, S) with n = {positions.shape[0]}, got {csi.shape}")
        if meta is not None and csi.shape[1:] != (meta.num_antennas, meta.num_avg_subcarriers):
            raise DatasetError(
                f"csi shape {csi.shape[1:]} disagrees with metadata "
                f"({meta.num_antennas}, {meta.num_avg_subcarriers})"
            )
        if validate:
            validate_arrays(positions, csi)
        self.positions = _readonly(positions)
        self.csi = _readonly(csi)
        self.meta = meta

    @classmethod
    def from_records(cls, records, meta=None):
        records = list(records)
        if not records:
            raise DatasetError("no records")
        positions = np.stack([r.position for r in records])
        csi = np.stack([r.csi for r in records])
        return cls(positions, csi, meta)

    @property
    def num_antennas(self):
        return self.csi.shape[1]

    @property
    def num_subcarriers(self):
        return self.csi.shape[2]

    def __len__(self):
        return self.csi.shape[0]

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return CsiRecord(self.positions[index], self.csi[index])
        return CsiDataset(self.positions[index], self.csi[index], self.meta, validate=False)

    def subset(self, mask):
        return self[np.asarray(mask)]

    def samples(self, ul_range=DEFAULT_UL_RANGE, dl_index=DEFAULT_DL_INDEX, normalize=False):
        """Vectorized :func:`extract_ul_dl` over every record."""
        ul = _check_indices(self.num_subcarriers, ul_range, dl_index)
        csi = self.csi.astype(np.complex128)
        if normalize:
            csi = csi / np.linalg.norm(csi, axis=(1, 2), keepdims=True)
        return SampleSet(csi[:, :, ul], csi[:, :, dl_index], self.positions)


def _first_invalid(positions, csi):
    bad_pos = ~np.all(np.isfinite(positions), axis=1)
    bad_csi = ~np.all(np.isfinite(csi), axis=(1, 2))
    zero = ~np.any(csi != 0, axis=(1, 2))
    for mask, what in ((bad_pos, "non-finite position"), (bad_csi, "non-finite CSI value"), (zero, "all-zero CSI matrix")):
        if mask.any():
            return int(np.argmax(mask)), what
    return None


def validate_arrays(positions, csi):
    """Check every record against the record invariants, locating the first failure."""
    bad = _first_invalid(positions, csi)
    if bad is not None:
        raise DatasetError(bad[1], f"record {bad[0]}")


class SampleSet:
    """Stacked sample pairs: ``H_U`` (n, M, U), ``h_D`` (n, M), ``positions`` (n, 3)."""

    def __init__(self, H_U, h_D, positions):
        self.H_U = _readonly(np.asarray(H_U, dtype=np.complex128))
        self.h_D = _readonly(np.asarray(h_D, dtype=np.complex128))
        self.positions = _readonly(np.asarray(positions, dtype=np.float64))
        n = self.H_U.shape[0]
        if self.H_U.ndim != 3 or self.h_D.shape != (n, self.H_U.shape[1]) or self.positions.shape != (n, 3):
            raise DatasetError(
                f"inconsistent sample shapes: H_U {self.H_U.shape}, h_D {self.h_D.shape}, "
                f"positions {self.positions.shape}"
            )

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            raise DatasetError("no sample pairs")
        return cls(
            np.stack([p.H_U for p in pairs]),
            np.stack([p.h_D for p in pairs]),
            np.stack([np.asarray(p.position, dtype=np.float64) for p in pairs]),
        )

    def __len__(self):
        return self.H_U.shape[0]

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return SamplePair(self.H_U[index].copy(), self.h_D[index].copy(), self.positions[index].copy())
        return SampleSet(self.H_U[index], self.h_D[index], self.positions[index])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, mask):
        return self[np.asarray(mask)]


def as_sample_set(pairs):
    if isinstance(pairs, SampleSet):
        return pairs
    return SampleSet.from_pairs(pairs)


def _check_indices(S, ul_range, dl_index):
    start, stop = (ul_range.start, ul_range.stop) if isinstance(ul_range, range) else ul_range
    if not (0 <= start < stop <= S):
        raise IndexError(f"uplink range [{start}, {stop}) outside [0, {S})")
    if not 0 <= dl_index < S:
        raise IndexError(f"downlink index {dl_index} outside [0, {S})")
    if start <= dl_index < stop:
        raise ValueError(f"downlink index {dl_index} lies inside uplink range [{start}, {stop})")
    return slice(start, stop)


def average_subcarriers(raw, batch):
    """Average groups of ``batch`` neighbouring subcarriers (last axis)."""
    raw = np.asarray(raw)
    if batch < 1:
        raise ValueError("batch must be a positive integer")
    n_sub = raw.shape[-1]
    if n_sub % batch:
        raise ValueError(f"batch {batch} does not divide {n_sub} subcarriers")
    return raw.reshape(*raw.shape[:-1], n_sub // batch, batch).mean(axis=-1)


def extract_ul_dl(record: CsiRecord, ul_range=DEFAULT_UL_RANGE, dl_index=DEFAULT_DL_INDEX) -> SamplePair:
    ul = _check_indices(record.csi.shape[1], ul_range, dl_index)
    csi = np.asarray(record.csi, dtype=np.complex128)
    return SamplePair(csi[:, ul].copy(), csi[:, dl_index].copy(), np.array(record.position, dtype=np.float64))


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_meta(meta: DatasetMeta, path):
    atomic_write_text(path, json.dumps(meta.to_dict(), indent=2, sort_keys=True) + "\n")


def load_meta(path) -> DatasetMeta:
    with open(path) as fh:
        return DatasetMeta.from_dict(json.load(fh))


def encode_dataset(positions, csi) -> bytes:
    positions = np.asarray(positions, dtype=np.float64)
    csi = np.asarray(csi)
    n, M, S = csi.shape
    rec = np.empty(n, dtype=_record_dtype(M, S))
    rec["position"] = positions
    rec["csi"][..., 0] = csi.real
    rec["csi"][..., 1] = csi.imag
    return _HEADER.pack(MAGIC, M, S, n) + rec.tobytes()


def write_dataset(path, dataset, meta: DatasetMeta | None = None):
    """Write records (a :class:`CsiDataset` or list of :class:`CsiRecord`).

    CSI values are stored as float32; the metadata sidecar is written when
    ``meta`` (or ``dataset.meta``) is available.
    """
    if not isinstance(dataset, CsiDataset):
        dataset = CsiDataset.from_records(dataset, meta)
    atomic_write_bytes(path, encode_dataset(dataset.positions, dataset.csi))
    meta = meta or dataset.meta
    if meta is not None:
        save_meta(meta, sidecar_path(path))
    return Path(path)


def decode_dataset(buf: bytes, meta: DatasetMeta | None = None) -> CsiDataset:
    if len(buf) < _HEADER.size:
        raise DatasetError(f"malformed header: file holds only {len(buf)} bytes", "byte 0")
    magic, M, S, count = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise DatasetError(f"malformed header: bad magic {magic!r}", "byte 0")
    if M < 1 or S < 1:
        raise DatasetError(f"malformed header: M = {M}, S = {S}", "byte 4")
    if meta is not None and (M, S) != (meta.num_antennas, meta.num_avg_subcarriers):
        raise DatasetError(
            f"shape mismatch: header says M = {M}, S = {S}, metadata says "
            f"M = {meta.num_antennas}, S = {meta.num_avg_subcarriers}",
            "byte 4",
        )
    dtype = _record_dtype(M, S)
    body = len(buf) - _HEADER.size
    if body != count * dtype.itemsize:
        held = body // dtype.itemsize
        raise DatasetError(
            f"shape mismatch: header claims {count} records but file holds "
            f"{held} complete records and {body - held * dtype.itemsize} extra bytes",
            f"byte {_HEADER.size + held * dtype.itemsize}",
        )
    if count == 0:
        raise DatasetError("dataset holds no records", "byte 12")
    rec = np.frombuffer(buf, dtype=dtype, offset=_HEADER.size, count=count)
    positions = rec["position"].astype(np.float64)
    csi = np.empty((count, M, S), dtype=np.complex64)
    csi.real = rec["csi"][..., 0]
    csi.imag = rec["csi"][..., 1]
    bad = _first_invalid(positions, csi)
    if bad is not None:
        index, what = bad
        raise DatasetError(what, f"record {index}, byte {_HEADER.size + index * dtype.itemsize}")
    return CsiDataset(positions, csi, meta, validate=False)


def load_dataset(path, meta: DatasetMeta | None = None) -> CsiDataset:
    """Load and validate a dataset file.

    Without an explicit ``meta`` the JSON sidecar is used when present.
    """
    path = Path(path)
    if meta is None and sidecar_path(path).exists():
        meta = load_meta(sidecar_path(path))
    try:
        buf = path.read_bytes()
    except OSError as err:
        raise DatasetError(f"cannot read dataset: {err.strerror}", str(path)) from err
    try:
        return decode_dataset(buf, meta)
    except DatasetError as err:
        raise DatasetError(f"{path}: {err.message}", err.location) from None
