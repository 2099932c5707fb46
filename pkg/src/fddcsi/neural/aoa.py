"""Angle-of-arrival labels derived from UE positions and the array pose."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..exceptions import GeometryError


class AoaLabel(NamedTuple):
    azimuth: float
    elevation: float


def wrap_angle(a):
    """Map angles onto (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=np.float64), 2 * np.pi)


def aoa_from_positions(positions, array_pose):
    """Azimuth/elevation (n, 2) of every position as seen from the array.

    Azimuth is the signed angle from the horizontally projected broadside to
    the horizontally projected UE direction, positive counter-clockwise
    seen from above; elevation is the angle of the UE direction above the
    horizontal plane.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    d = positions - np.asarray(array_pose.position, dtype=np.float64)
    b = np.asarray(array_pose.broadside, dtype=np.float64)
    b_h = np.array([b[0], b[1]])
    if np.linalg.norm(b_h) < 1e-12:
        raise GeometryError("broadside is vertical; azimuth is undefined")
    norm = np.linalg.norm(d, axis=1)
    if np.any(norm < 1e-12):
        raise GeometryError("UE coincides with the array center")
    horiz = np.hypot(d[:, 0], d[:, 1])
    cross = b_h[0] * d[:, 1] - b_h[1] * d[:, 0]
    dot = b_h[0] * d[:, 0] + b_h[1] * d[:, 1]
    azimuth = wrap_angle(np.arctan2(cross, dot))
    elevation = np.arctan2(d[:, 2], horiz)
    return np.column_stack([azimuth, elevation])


def aoa_from_position(position, array_pose) -> AoaLabel:
    az, el = aoa_from_positions(position, array_pose)[0]
    return AoaLabel(float(az), float(el))
