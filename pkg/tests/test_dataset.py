import struct

import numpy as np
import pytest

from conftest import crandn
from fddcsi.dataset import (
    ArrayPose,
    CsiDataset,
    CsiRecord,
    DatasetMeta,
    SampleSet,
    average_subcarriers,
    encode_dataset,
    extract_ul_dl,
    load_dataset,
    sidecar_path,
    write_dataset,
)
from fddcsi.exceptions import DatasetError


def make_dataset(rng, n=2, M=4, S=32):
    return CsiDataset(rng.uniform(-3, 3, (n, 3)), crandn(rng, n, M, S).astype(np.complex64))


def test_two_records_round_trip(tmp_path, rng):
    data = make_dataset(rng)
    meta = DatasetMeta(num_antennas=4, num_avg_subcarriers=32, array_pose=ArrayPose((0, 0, 1.5), (-1, 0, 0)))
    path = write_dataset(tmp_path / "two.csi", data, meta)
    loaded = load_dataset(path)
    assert len(loaded) == 2
    np.testing.assert_array_equal(loaded.csi, data.csi)
    np.testing.assert_array_equal(loaded.positions, data.positions)
    assert loaded.meta == meta
    assert sidecar_path(path).exists()


def test_header_claims_more_records_than_present(tmp_path, rng):
    data = make_dataset(rng, n=2)
    buf = bytearray(encode_dataset(data.positions, data.csi))
    struct.pack_into("<I", buf, 12, 3)
    (tmp_path / "short.csi").write_bytes(bytes(buf))
    with pytest.raises(DatasetError, match="claims 3 records but file holds 2") as info:
        load_dataset(tmp_path / "short.csi")
    assert "byte" in info.value.location


def test_truncated_mid_record(tmp_path, rng):
    data = make_dataset(rng, n=3)
    buf = encode_dataset(data.positions, data.csi)
    (tmp_path / "cut.csi").write_bytes(buf[:-7])
    with pytest.raises(DatasetError, match="shape mismatch"):
        load_dataset(tmp_path / "cut.csi")


def test_bad_magic_and_empty(tmp_path):
    (tmp_path / "a.csi").write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(DatasetError, match="magic"):
        load_dataset(tmp_path / "a.csi")
    (tmp_path / "b.csi").write_bytes(b"CSI")
    with pytest.raises(DatasetError, match="malformed header"):
        load_dataset(tmp_path / "b.csi")
    (tmp_path / "c.csi").write_bytes(struct.pack("<4sIII", b"CSI1", 2, 2, 0))
    with pytest.raises(DatasetError, match="no records"):
        load_dataset(tmp_path / "c.csi")


def test_meta_shape_mismatch(tmp_path, rng):
    write_dataset(tmp_path / "d.csi", make_dataset(rng))
    with pytest.raises(DatasetError, match="shape mismatch"):
        load_dataset(tmp_path / "d.csi", DatasetMeta(num_antennas=8, num_avg_subcarriers=32))


def test_nonfinite_record_is_located(tmp_path, rng):
    data = make_dataset(rng, n=4)
    csi = np.array(data.csi)
    csi[2, 1, 5] = np.nan
    (tmp_path / "nan.csi").write_bytes(encode_dataset(data.positions, csi))
    with pytest.raises(DatasetError, match="non-finite CSI") as info:
        load_dataset(tmp_path / "nan.csi")
    assert info.value.location.startswith("record 2")


def test_zero_record_rejected(rng):
    with pytest.raises(DatasetError, match="all-zero"):
        CsiRecord(np.zeros(3), np.zeros((4, 32), complex))
    csi = crandn(rng, 3, 4, 8)
    csi[1] = 0
    with pytest.raises(DatasetError) as info:
        CsiDataset(np.zeros((3, 3)), csi)
    assert info.value.location == "record 1"


def test_record_is_immutable(rng):
    rec = CsiRecord(np.zeros(3), crandn(rng, 4, 8))
    with pytest.raises(ValueError):
        rec.csi[0, 0] = 1


def test_average_subcarriers_1024_into_32(rng):
    raw = crandn(rng, 32, 1024)
    avg = average_subcarriers(raw, 32)
    assert avg.shape == (32, 32)
    np.testing.assert_allclose(avg[3, 5], raw[3, 160:192].mean(), rtol=1e-12)


def test_average_subcarriers_identity_and_constant(rng):
    raw = crandn(rng, 3, 10)
    np.testing.assert_array_equal(average_subcarriers(raw, 1), raw)
    np.testing.assert_array_equal(average_subcarriers(np.ones((2, 4)), 2), np.ones((2, 2)))
    with pytest.raises(ValueError):
        average_subcarriers(raw, 3)
    with pytest.raises(ValueError):
        average_subcarriers(raw, 0)


def test_meta_requires_divisible_batches():
    assert DatasetMeta(32, 32, 1024).averaging_batch == 32
    with pytest.raises(ValueError):
        DatasetMeta(32, 32, 1000)


def test_extract_default_shapes(rng):
    rec = CsiRecord(np.zeros(3), crandn(rng, 32, 32))
    pair = extract_ul_dl(rec, (0, 8), 28)
    assert pair.H_U.shape == (32, 8)
    assert pair.h_D.shape == (32,)
    np.testing.assert_array_equal(pair.h_D, rec.csi[:, 28])


def test_extract_rejects_leakage_and_bounds(rng):
    rec = CsiRecord(np.zeros(3), crandn(rng, 32, 32))
    with pytest.raises(ValueError, match="inside uplink range"):
        extract_ul_dl(rec, (0, 8), 3)
    with pytest.raises(IndexError):
        extract_ul_dl(rec, (0, 8), 32)
    with pytest.raises(IndexError):
        extract_ul_dl(rec, (30, 34), 2)


def test_vectorized_samples_match_per_record(rng):
    data = make_dataset(rng, n=5, M=4, S=32)
    samples = data.samples((0, 8), 28)
    for i in range(5):
        pair = extract_ul_dl(data[i], (0, 8), 28)
        np.testing.assert_array_equal(samples.H_U[i], pair.H_U)
        np.testing.assert_array_equal(samples.h_D[i], pair.h_D)
    norm = data.samples(normalize=True)
    assert isinstance(norm, SampleSet)
    assert len(norm[np.array([True, False, True, False, True])]) == 3


def test_array_pose_requires_unit_broadside():
    with pytest.raises(ValueError):
        ArrayPose((0, 0, 0), (2, 0, 0))
