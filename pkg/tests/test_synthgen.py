import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fddcsi.dataset import ArrayPose
from fddcsi.exceptions import GeometryError
from fddcsi.metrics import normalized_power
from fddcsi.synthgen import (
    SPEED_OF_LIGHT,
    FrequencyPlan,
    Scene,
    generate_dataset,
    grid_positions,
    los_steering_vector,
    planar_array_offsets,
    random_positions,
    synth_channel,
    synth_channels,
)

# Two antennas, one LoS path plus one scatterer.
TWO_PATH = dict(
    antennas=[(0.0, 0.0, 1.5), (0.0, 0.1, 1.5)],
    ue=(-2.0, 0.5, 1.0),
    scatterer=(-1.0, -2.0, 2.0),
    gain=0.3 - 0.4j,
    freq=1.25e9,
)
# Frozen from a 40-digit mpmath evaluation of the explicit two-term sum.
TWO_PATH_FROZEN = np.array([
    0.22217291024822873 + 0.47688421402529033j,
    0.10981745049310275 + 0.4502113371203062j,
])


def two_path_scene():
    pose = ArrayPose((0.0, 0.0, 1.5), (-1.0, 0.0, 0.0))
    offsets = np.asarray(TWO_PATH["antennas"]) - np.asarray(pose.position)
    return Scene(pose, offsets, ((TWO_PATH["scatterer"], TWO_PATH["gain"]),))


def mp_path_sum(antenna, ue, paths, freq):
    mp.mp.dps = 40
    total = mp.mpc(0)
    for via, gain in paths:
        pts = [ue] + ([via] if via is not None else []) + [antenna]
        d = sum(mp.sqrt(sum((mp.mpf(a) - mp.mpf(b)) ** 2 for a, b in zip(p, q))) for p, q in zip(pts, pts[1:]))
        total += mp.mpc(gain) * mp.exp(-2j * mp.pi * mp.mpf(freq) * d / mp.mpf(SPEED_OF_LIGHT)) / d
    return complex(total)


def test_single_los_path_single_antenna():
    pose = ArrayPose((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    scene = Scene(pose, np.zeros((1, 3)))
    ue = np.array([3.0, 4.0, 0.0])
    f = 1.272e9
    h = synth_channel(scene, ue, f)
    assert h.shape == (1,)
    assert abs(h[0]) == pytest.approx(1 / 5.0, rel=1e-14)
    expected_phase = np.angle(np.exp(-2j * np.pi * f * 5.0 / SPEED_OF_LIGHT))
    assert np.angle(h[0]) == pytest.approx(expected_phase, abs=1e-9)


def test_two_path_matches_frozen_oracle():
    h = synth_channel(two_path_scene(), TWO_PATH["ue"], TWO_PATH["freq"])
    np.testing.assert_allclose(h, TWO_PATH_FROZEN, rtol=1e-12)


def test_two_path_matches_high_precision_sum():
    h = synth_channel(two_path_scene(), TWO_PATH["ue"], TWO_PATH["freq"])
    paths = [(None, 1.0), (TWO_PATH["scatterer"], TWO_PATH["gain"])]
    oracle = [mp_path_sum(a, TWO_PATH["ue"], paths, TWO_PATH["freq"]) for a in TWO_PATH["antennas"]]
    np.testing.assert_allclose(h, oracle, rtol=1e-11)


def test_repeated_queries_identical():
    scene = Scene.default(4, seed=1)
    a = synth_channel(scene, (-2.0, 1.0, 1.0), 1.26e9)
    b = synth_channel(scene, (-2.0, 1.0, 1.0), 1.26e9)
    assert a.tobytes() == b.tobytes()
    assert a.shape == (32,)


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(0.1, 10.0), phase=st.floats(-np.pi, np.pi))
def test_channel_linear_in_path_gains(scale, phase):
    scene = Scene.default(3, seed=7)
    factor = scale * np.exp(1j * phase)
    ue = (-3.0, 0.7, 1.0)
    np.testing.assert_allclose(
        synth_channel(scene.with_gains_scaled(factor), ue, 1.28e9),
        factor * synth_channel(scene, ue, 1.28e9),
        rtol=1e-12,
    )


def test_channel_continuous_in_position():
    scene = Scene.default(4, seed=2)
    ue = np.array([-3.0, 0.5, 1.0])
    h0 = synth_channel(scene, ue, 1.27e9)
    h1 = synth_channel(scene, ue + [1e-7, 0, 0], 1.27e9)
    assert np.linalg.norm(h1 - h0) / np.linalg.norm(h0) < 1e-5


def test_ue_on_scatterer_is_geometry_error():
    scene = two_path_scene()
    with pytest.raises(GeometryError):
        synth_channel(scene, TWO_PATH["scatterer"], 1.25e9)
    with pytest.raises(GeometryError):
        synth_channel(scene, TWO_PATH["antennas"][0], 1.25e9)


def test_generate_grid_shapes():
    scene = Scene.default(1, seed=0)
    pos = grid_positions((-5.0, -3.0), (-2.5, 2.5), spacing=0.5)
    assert len(pos) == 40
    data = generate_dataset(scene, FrequencyPlan.from_band(), pos[:100])
    assert data.csi.shape == (40, 32, 32)
    # every column is filled with a genuine channel response
    assert np.all(np.abs(data.csi) > 0)
    with pytest.raises(ValueError):
        generate_dataset(scene, FrequencyPlan.from_band(), np.zeros((0, 3)))


def test_los_records_matched_filter_is_optimal():
    scene = Scene.default(0)
    plan = FrequencyPlan.from_band()
    pos = random_positions(200, seed=3)
    data = generate_dataset(scene, plan, pos)
    samples = data.samples()
    w = np.stack([los_steering_vector(scene, p, plan.dl_freq_hz) for p in pos])
    np.testing.assert_allclose(normalized_power(samples.h_D, w), 1.0, atol=1e-9)


def test_frequency_plan_layout():
    plan = FrequencyPlan.from_band()
    assert plan.dl_freq_hz - np.mean(plan.ul_freqs_hz) == pytest.approx(38.28125e6)
    freqs = plan.column_freqs()
    assert np.all(np.diff(freqs) > 0)
    assert freqs[28] == plan.dl_freq_hz
    with pytest.raises(ValueError):
        FrequencyPlan((1e9, 1e9), 2e9)
    with pytest.raises(ValueError):
        FrequencyPlan((1e9, 2e9), 2e9)


def test_planar_array_is_half_wavelength_grid():
    off = planar_array_offsets(8, 4, broadside=(-1, 0, 0))
    assert off.shape == (32, 3)
    np.testing.assert_allclose(off[:, 0], 0.0, atol=1e-15)
    lam = SPEED_OF_LIGHT / 1.272e9
    assert np.linalg.norm(off[1] - off[0]) == pytest.approx(lam / 2)
    np.testing.assert_allclose(off.mean(axis=0), 0.0, atol=1e-15)


def test_scene_round_trip(tmp_path):
    scene = Scene.default(4, seed=5)
    scene.save(tmp_path / "scene.json")
    back = Scene.load(tmp_path / "scene.json")
    ue = (-2.5, 0.3, 1.0)
    np.testing.assert_array_equal(synth_channel(back, ue, 1.27e9), synth_channel(scene, ue, 1.27e9))
    preset = Scene.from_dict({"preset": {"n_scatterers": 4}, "seed": 5})
    np.testing.assert_array_equal(synth_channel(preset, ue, 1.27e9), synth_channel(scene, ue, 1.27e9))


def test_batched_equals_single():
    scene = Scene.default(2, seed=9)
    pos = random_positions(5, seed=1)
    H = synth_channels(scene, pos, [1.25e9, 1.29e9])
    for i, p in enumerate(pos):
        np.testing.assert_array_equal(H[i, :, 1], synth_channel(scene, p, 1.29e9))
