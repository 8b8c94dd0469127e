"""Plane-to-sphere coordinate math for ERP and pseudocylindrical grids.

All angles are radians in 64-bit floats. Grid indices address sample
centers offset by half a pixel: row i sits at (i + 0.5)/H of the vertical
span, which is where the +0.5 terms below come from. Latitude decreases
with the row index (row 0 is the northernmost row), longitude increases
with the column index.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "TWO_PI",
    "wrap_longitude",
    "erp_latitude",
    "erp_longitude",
    "pseudocyl_longitude",
    "sinusoidal_width",
    "craster_latitude",
    "row_latitudes",
]


def _scalar_or_array(values, template):
    arr = np.asarray(template)
    if arr.ndim == 0:
        return float(values)
    return values


def wrap_longitude(phi):
    """Wrap longitude(s) into [-pi, pi)."""
    out = np.mod(np.asarray(phi, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    return _scalar_or_array(out, phi)


def erp_latitude(i, height):
    """Latitude of ERP row ``i`` on a grid of ``height`` rows."""
    if height < 1:
        raise ValueError(f"height must be >= 1, got {height}")
    idx = np.asarray(i, dtype=np.float64)
    if np.any(idx < 0) or np.any(idx >= height):
        raise ValueError(f"row index out of [0, {height}): {i}")
    lat = (0.5 - (idx + 0.5) / height) * np.pi
    return _scalar_or_array(lat, i)


def erp_longitude(j, width):
    """Longitude of ERP column ``j`` on a grid of ``width`` columns."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    idx = np.asarray(j, dtype=np.float64)
    if np.any(idx < 0) or np.any(idx >= width):
        raise ValueError(f"column index out of [0, {width}): {j}")
    lon = ((idx + 0.5) / width - 0.5) * TWO_PI
    return _scalar_or_array(lon, j)


def pseudocyl_longitude(j, row_width, start=0):
    """Longitude of column ``j`` in a row of ``row_width`` samples.

    ``start`` is the column offset of the row's first sample; rows stored
    flush left use the default of 0.
    """
    if row_width < 1:
        raise ValueError(f"row width must be >= 1, got {row_width}")
    idx = np.asarray(j, dtype=np.float64)
    if np.any(idx < start) or np.any(idx >= start + row_width):
        raise ValueError(
            f"column index out of [{start}, {start + row_width}): {j}"
        )
    lon = ((idx - start + 0.5) / row_width - 0.5) * TWO_PI
    return _scalar_or_array(lon, j)


def sinusoidal_width(theta, width):
    """Row width that keeps sample spacing uniform at latitude ``theta``."""
    th = np.asarray(theta, dtype=np.float64)
    if np.any(np.abs(th) > np.pi / 2):
        raise ValueError(f"latitude out of [-pi/2, pi/2]: {theta}")
    return _scalar_or_array(np.cos(th) * width, theta)


def craster_latitude(i, height):
    """Latitude of row ``i`` under the Craster parabolic vertical mapping."""
    if height < 1:
        raise ValueError(f"height must be >= 1, got {height}")
    idx = np.asarray(i, dtype=np.float64)
    if np.any(idx < 0) or np.any(idx >= height):
        raise ValueError(f"row index out of [0, {height}): {i}")
    lat = 3.0 * np.arcsin(0.5 - (idx + 0.5) / height)
    return _scalar_or_array(lat, i)


def row_latitudes(height):
    """ERP latitudes of all ``height`` rows as a float64 array."""
    rows = np.arange(height, dtype=np.float64)
    return (0.5 - (rows + 0.5) / height) * np.pi
