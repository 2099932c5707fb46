"""Desk-scale synthetic CSI from a single-bounce geometric multipath model.

Every path contributes ``g * exp(-j 2 pi f d / c) / d`` to each antenna,
where ``d`` is the total UE -> (scatterer ->) antenna path length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import DEFAULT_DL_INDEX, DEFAULT_UL_RANGE, ArrayPose, CsiDataset, DatasetMeta
from .exceptions import GeometryError

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_HZ = 1.272e9
BANDWIDTH_HZ = 50e6

# Default room: array on the x = 0 wall looking into -x, UEs held at 1 m.
ROOM_X = (-6.0, -0.5)
ROOM_Y = (-3.0, 3.0)
ARRAY_HEIGHT = 1.5
UE_HEIGHT = 1.0

_MIN_SEGMENT = 1e-9


def planar_array_offsets(n_horizontal=8, n_vertical=4, spacing=None, broadside=(1.0, 0.0, 0.0)):
    """Element offsets (M x 3) of a uniform planar array centred on the origin.

    The array plane is perpendicular to ``broadside``; elements are ordered
    row by row (horizontal index fastest). ``spacing`` defaults to half a
    wavelength at 1.272 GHz.
    """
    if spacing is None:
        spacing = SPEED_OF_LIGHT / CARRIER_HZ / 2
    b = np.asarray(broadside, dtype=np.float64)
    b = b / np.linalg.norm(b)
    up = np.array([0.0, 0.0, 1.0])
    horizontal = np.cross(up, b)
    if np.linalg.norm(horizontal) < 1e-12:
        horizontal = np.array([1.0, 0.0, 0.0])
    horizontal /= np.linalg.norm(horizontal)
    vertical = np.cross(b, horizontal)
    i = np.arange(n_horizontal) - (n_horizontal - 1) / 2
    k = np.arange(n_vertical) - (n_vertical - 1) / 2
    kk, ii = np.meshgrid(k, i, indexing="ij")
    return spacing * (ii.reshape(-1, 1) * horizontal + kk.reshape(-1, 1) * vertical)


@dataclass(frozen=True, eq=False)
class Scene:
    """Array geometry plus point scatterers; with a UE position it fixes the channel."""

    array_pose: ArrayPose
    antenna_offsets: np.ndarray
    scatterers: tuple = ()
    include_los: bool = True
    seed: int = 0
    los_gain: complex = 1.0

    def __post_init__(self):
        offsets = np.atleast_2d(np.asarray(self.antenna_offsets, dtype=np.float64))
        if offsets.ndim != 2 or offsets.shape[1] != 3 or offsets.shape[0] < 1:
            raise ValueError(f"antenna offsets must have shape (M, 3), got {offsets.shape}")
        scatterers = tuple((np.asarray(p, dtype=np.float64), complex(g)) for p, g in self.scatterers)
        if not self.include_los and not scatterers:
            raise ValueError("scene has no propagation path")
        antennas = np.asarray(self.array_pose.position) + offsets
        for p, _ in scatterers:
            if p.shape != (3,):
                raise ValueError("scatterer positions must be 3-D")
            if np.min(np.linalg.norm(antennas - p, axis=1)) < _MIN_SEGMENT:
                raise GeometryError(f"scatterer at {p.tolist()} coincides with an antenna")
        offsets.flags.writeable = False
        object.__setattr__(self, "antenna_offsets", offsets)
        object.__setattr__(self, "scatterers", scatterers)
        object.__setattr__(self, "los_gain", complex(self.los_gain))

    @property
    def num_antennas(self):
        return self.antenna_offsets.shape[0]

    @property
    def antenna_positions(self):
        return np.asarray(self.array_pose.position) + self.antenna_offsets

    def with_gains_scaled(self, factor):
        """Copy of the scene with every path gain (LoS included) multiplied by ``factor``."""
        factor = complex(factor)
        return replace(
            self,
            scatterers=tuple((p, g * factor) for p, g in self.scatterers),
            los_gain=self.los_gain * factor,
        )

    @classmethod
    def default(cls, n_scatterers=0, include_los=True, seed=0):
        """The desk-scale reference room with ``n_scatterers`` random scatterers.

        Presets used in the docs and tests are 0 (LoS only), 1, 4 and 16.
        """
        pose = ArrayPose((0.0, 0.0, ARRAY_HEIGHT), (-1.0, 0.0, 0.0))
        rng = np.random.default_rng(seed)
        scatterers = []
        for _ in range(n_scatterers):
            pos = (rng.uniform(*ROOM_X), rng.uniform(*ROOM_Y), rng.uniform(0.0, 2.5))
            gain = complex(rng.normal(), rng.normal()) / np.sqrt(2)
            scatterers.append((pos, gain))
        return cls(pose, planar_array_offsets(broadside=pose.broadside), tuple(scatterers), include_los, seed)

    def to_dict(self):
        return {
            "array": {
                "position": list(self.array_pose.position),
                "broadside": list(self.array_pose.broadside),
                "antenna_offsets": self.antenna_offsets.tolist(),
            },
            "scatterers": [
                {"position": p.tolist(), "gain": [g.real, g.imag]} for p, g in self.scatterers
            ],
            "include_los": self.include_los,
            "los_gain": [self.los_gain.real, self.los_gain.imag],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        """Build a scene from its JSON form.

        ``array.antenna_offsets`` may be omitted (8 x 4 half-wavelength
        array), and a ``preset`` key ``{"n_scatterers": k}`` draws random
        scatterers with ``seed`` instead of listing them.
        """
        seed = int(d.get("seed", 0))
        include_los = bool(d.get("include_los", True))
        if "preset" in d:
            base = cls.default(int(d["preset"].get("n_scatterers", 0)), include_los, seed)
        else:
            base = None
        array = d.get("array", {})
        pose = ArrayPose(
            tuple(array.get("position", (0.0, 0.0, ARRAY_HEIGHT))),
            tuple(array.get("broadside", (-1.0, 0.0, 0.0))),
        )
        offsets = array.get("antenna_offsets")
        if offsets is None:
            offsets = planar_array_offsets(broadside=pose.broadside)
        if base is not None and "scatterers" not in d:
            scatterers = base.scatterers
        else:
            scatterers = tuple(
                (tuple(s["position"]), complex(s["gain"][0], s["gain"][1])) for s in d.get("scatterers", [])
            )
        los_gain = complex(*d.get("los_gain", (1.0, 0.0)))
        return cls(pose, np.asarray(offsets, dtype=np.float64), scatterers, include_los, seed, los_gain)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class FrequencyPlan:
    """Eight uplink frequencies and one downlink frequency (Hz)."""

    ul_freqs_hz: tuple
    dl_freq_hz: float

    def __post_init__(self):
        ul = np.asarray(self.ul_freqs_hz, dtype=np.float64)
        if ul.ndim != 1 or ul.size < 1:
            raise ValueError("uplink frequencies must be a non-empty list")
        if np.any(ul <= 0) or not self.dl_freq_hz > 0:
            raise ValueError("frequencies must be positive")
        if np.any(np.diff(ul) <= 0):
            raise ValueError("uplink frequencies must be strictly increasing")
        if np.any(ul == self.dl_freq_hz):
            raise ValueError("downlink frequency coincides with an uplink frequency")
        object.__setattr__(self, "ul_freqs_hz", tuple(float(f) for f in ul))
        object.__setattr__(self, "dl_freq_hz", float(self.dl_freq_hz))

    @classmethod
    def from_band(cls, carrier_hz=CARRIER_HZ, bandwidth_hz=BANDWIDTH_HZ, n_columns=32,
                  ul_range=DEFAULT_UL_RANGE, dl_index=DEFAULT_DL_INDEX):
        """Centre frequencies of averaged subcarrier columns across the band.

        With the defaults the uplink block is centred near 1.2533 GHz and the
        downlink column sits at about 1.2915 GHz, 38.28 MHz apart.
        """
        centres = column_centres(carrier_hz, bandwidth_hz, n_columns)
        return cls(tuple(centres[ul_range[0]:ul_range[1]]), float(centres[dl_index]))

    def column_freqs(self, n_columns=32, ul_range=DEFAULT_UL_RANGE, dl_index=DEFAULT_DL_INDEX):
        """Frequency of every dataset column.

        Uplink columns take the uplink frequencies and the downlink column the
        downlink frequency; every other column is placed on the straight line
        through (last uplink column, last uplink frequency) and (downlink
        column, downlink frequency), extrapolated past the downlink column.
        """
        start, stop = ul_range
        if stop - start != len(self.ul_freqs_hz):
            raise ValueError(f"uplink range [{start}, {stop}) does not hold {len(self.ul_freqs_hz)} columns")
        if not (0 <= start < stop <= n_columns) or not 0 <= dl_index < n_columns or start <= dl_index < stop:
            raise ValueError("inconsistent column layout")
        anchor = stop - 1
        slope = (self.dl_freq_hz - self.ul_freqs_hz[-1]) / (dl_index - anchor)
        freqs = self.ul_freqs_hz[-1] + slope * (np.arange(n_columns) - anchor)
        freqs[start:stop] = self.ul_freqs_hz
        freqs[dl_index] = self.dl_freq_hz
        if np.any(freqs <= 0):
            raise ValueError("column layout extrapolates to non-positive frequencies")
        return freqs

    def to_dict(self):
        return {"ul_freqs_hz": list(self.ul_freqs_hz), "dl_freq_hz": self.dl_freq_hz}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["ul_freqs_hz"]), float(d["dl_freq_hz"]))


def column_centres(carrier_hz, bandwidth_hz, n_columns):
    width = bandwidth_hz / n_columns
    return carrier_hz - bandwidth_hz / 2 + (np.arange(n_columns) + 0.5) * width


def _path_lengths(scene: Scene, positions):
    """Path lengths (n, P, M) and gains (P,) for every UE position."""
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    antennas = scene.antenna_positions
    lengths, gains = [], []
    if scene.include_los:
        lengths.append(np.linalg.norm(positions[:, None, :] - antennas[None], axis=-1))
        gains.append(scene.los_gain)
    for p, g in scene.scatterers:
        first = np.linalg.norm(positions - p, axis=-1)
        if np.any(first < _MIN_SEGMENT):
            bad = positions[np.argmin(first)]
            raise GeometryError(f"UE position {bad.tolist()} coincides with a scatterer")
        lengths.append(first[:, None] + np.linalg.norm(antennas - p, axis=-1)[None])
        gains.append(g)
    d = np.stack(lengths, axis=1)
    if np.any(d < _MIN_SEGMENT):
        raise GeometryError("UE position coincides with an antenna (zero path length)")
    return d, np.asarray(gains, dtype=np.complex128)


def synth_channels(scene: Scene, positions, freqs_hz):
    """Channel coefficients of shape (n_positions, M, n_freqs)."""
    d, g = _path_lengths(scene, positions)
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    phase = -2j * np.pi * freqs[None, None, None, :] * d[..., None] / SPEED_OF_LIGHT
    terms = g[None, :, None, None] * np.exp(phase) / d[..., None]
    return terms.sum(axis=1)


def synth_channel(scene: Scene, ue_pos, freq_hz):
    """Channel vector (length M) at a single UE position and frequency."""
    ue_pos = np.asarray(ue_pos, dtype=np.float64)
    if ue_pos.shape != (3,):
        raise ValueError("UE position must be 3-D")
    return synth_channels(scene, ue_pos[None], [freq_hz])[0, :, 0]


def los_steering_vector(scene: Scene, ue_pos, freq_hz):
    """Spherical-wave line-of-sight array response ``exp(-j 2 pi f d / c) / d``."""
    d = np.linalg.norm(scene.antenna_positions - np.asarray(ue_pos, dtype=np.float64), axis=1)
    return np.exp(-2j * np.pi * freq_hz * d / SPEED_OF_LIGHT) / d


def generate_dataset(scene: Scene, plan: FrequencyPlan, positions, n_columns=32,
                     ul_range=DEFAULT_UL_RANGE, dl_index=DEFAULT_DL_INDEX,
                     noise_std=0.0, noise_seed=None) -> CsiDataset:
    """Evaluate the scene at every position over all dataset columns.

    ``noise_std`` > 0 adds circularly-symmetric complex Gaussian noise of that
    standard deviation per entry (seeded by ``noise_seed``, else the scene seed).
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[0] == 0 or positions.shape[1] != 3:
        raise ValueError("positions must be a non-empty (n, 3) array")
    freqs = plan.column_freqs(n_columns, ul_range, dl_index)
    csi = synth_channels(scene, positions, freqs)
    if noise_std > 0:
        rng = np.random.default_rng(scene.seed if noise_seed is None else noise_seed)
        noise = rng.normal(size=csi.shape) + 1j * rng.normal(size=csi.shape)
        csi = csi + noise_std / np.sqrt(2) * noise
    meta = DatasetMeta(
        num_antennas=scene.num_antennas,
        num_avg_subcarriers=n_columns,
        num_raw_subcarriers=n_columns,
        carrier_freq_hz=float(np.mean([freqs.min(), freqs.max()])),
        array_pose=scene.array_pose,
        bandwidth_hz=float(freqs.max() - freqs.min()),
    )
    return CsiDataset(positions, csi, meta)


def grid_positions(x_range=ROOM_X, y_range=ROOM_Y, spacing=0.2, z=UE_HEIGHT):
    """Regular grid of UE positions with cell-centred samples."""
    xs = np.arange(x_range[0] + spacing / 2, x_range[1], spacing)
    ys = np.arange(y_range[0] + spacing / 2, y_range[1], spacing)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, float(z))])


def random_positions(n, x_range=ROOM_X, y_range=ROOM_Y, z=UE_HEIGHT, seed=0):
    rng = np.random.default_rng(seed)
    return np.column_stack([
        rng.uniform(*x_range, size=n),
        rng.uniform(*y_range, size=n),
        np.full(n, float(z)),
    ])


def arc_positions(n, radius, center=(0.0, 0.0), azimuth_range=(-1.2, 1.2), z=UE_HEIGHT, facing=np.pi):
    """Points on a horizontal circular arc around ``center``.

    Azimuths are measured from the direction ``facing`` (radians, x-axis = 0).
    """
    az = np.linspace(*azimuth_range, n)
    return np.column_stack([
        center[0] + radius * np.cos(facing + az),
        center[1] + radius * np.sin(facing + az),
        np.full(n, float(z)),
    ])
