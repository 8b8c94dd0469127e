"""Rectilinear viewport extraction from spherical rasters.

The camera frame is x = forward, y = east, z = up; a viewport centered at
(lat, lon) orients the forward axis with Rz(lon) @ Ry(-lat). At the poles
this fixes the roll so that viewport "up" points along the lon = pi
meridian for the north pole viewport.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import TWO_PI, row_latitudes, wrap_longitude
from .representation import TiledImage, as_image

__all__ = [
    "ViewportSpec",
    "canonical_viewports",
    "viewport_rays",
    "extract_viewport",
    "viewport_contains",
    "embed_viewport",
    "sample_sphere",
]

_BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class ViewportSpec:
    """Center direction, field of view and raster size of one viewport."""

    center_lat: float
    center_lon: float
    fov_lat: float
    fov_lon: float
    height: int
    width: int

    def __post_init__(self):
        if not 0.0 < self.fov_lat < np.pi or not 0.0 < self.fov_lon < np.pi:
            raise ValueError("field of view must lie in (0, pi) on both axes")
        if self.height < 1 or self.width < 1:
            raise ValueError("viewport raster must be at least 1x1")


_CANONICAL_CENTERS = (
    (0.0, -np.pi / 2),
    (0.0, 0.0),
    (0.0, np.pi / 2),
    (0.0, np.pi),
    (-np.pi / 4, -np.pi / 2),
    (-np.pi / 4, 0.0),
    (-np.pi / 4, np.pi / 2),
    (-np.pi / 4, np.pi),
    (np.pi / 4, -np.pi / 2),
    (np.pi / 4, 0.0),
    (np.pi / 4, np.pi / 2),
    (np.pi / 4, np.pi),
    (np.pi / 2, 0.0),
    (-np.pi / 2, 0.0),
)


def canonical_viewports(height, width):
    """The 14 sphere-covering viewports for an ERP raster of the given size.

    Four sit on the equator, four on each of the +-45 degree parallels and
    one on each pole; each is ceil(H/3) x ceil(W/4) with a pi/3 x pi/2
    field of view.
    """
    if height < 4 or width < 4:
        raise ValueError("source raster must be at least 4x4")
    vh = -(-height // 3)
    vw = -(-width // 4)
    return [
        ViewportSpec(lat, wrap_longitude(lon), np.pi / 3, np.pi / 2, vh, vw)
        for lat, lon in _CANONICAL_CENTERS
    ]


def _rotation(spec):
    cl, sl = math.cos(spec.center_lat), math.sin(spec.center_lat)
    co, so = math.cos(spec.center_lon), math.sin(spec.center_lon)
    ry = np.array([[cl, 0.0, -sl], [0.0, 1.0, 0.0], [sl, 0.0, cl]])
    rz = np.array([[co, -so, 0.0], [so, co, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry


@lru_cache(maxsize=256)
def viewport_rays(spec):
    """Per-pixel (latitude, longitude) arrays for a viewport's rays."""
    tan_u = math.tan(spec.fov_lon / 2)
    tan_v = math.tan(spec.fov_lat / 2)
    cols = np.arange(spec.width, dtype=np.float64)
    rows = np.arange(spec.height, dtype=np.float64)
    u = (2.0 * (cols + 0.5) / spec.width - 1.0) * tan_u
    v = (1.0 - 2.0 * (rows + 0.5) / spec.height) * tan_v
    uu, vv = np.meshgrid(u, v)
    cam = np.stack([np.ones_like(uu), uu, vv], axis=-1)
    cam /= np.linalg.norm(cam, axis=-1, keepdims=True)
    world = cam @ _rotation(spec).T
    theta = np.arcsin(np.clip(world[..., 2], -1.0, 1.0))
    phi = np.arctan2(world[..., 1], world[..., 0])
    theta.setflags(write=False)
    phi.setflags(write=False)
    return theta, phi


def _row_table(source):
    """Flattened (samples, channels) view plus per-row start/width tables."""
    if isinstance(source, TiledImage):
        cfg = source.config
        flat = np.concatenate(
            [tile.reshape(-1, source.channels) for tile in source.tiles], axis=0
        )
        widths = cfg.row_widths()
    else:
        img = as_image(source)
        flat = img.reshape(-1, img.shape[2])
        widths = np.full(img.shape[0], img.shape[1], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(widths)])[:-1]
    return flat, starts, widths


def sample_sphere(source, theta, phi):
    """Bilinear sample of an ERP array or TiledImage at sphere coordinates.

    Longitude wraps circularly; latitude clamps at the pole rows. Rows of
    different widths are sampled at their own column scale before the
    vertical blend.
    """
    flat, starts, widths = _row_table(source)
    height = widths.shape[0]
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    frac_row = (0.5 - theta / np.pi) * height - 0.5
    r0 = np.floor(frac_row)
    fr = (frac_row - r0)[..., None]
    r0 = r0.astype(np.int64)
    lon_unit = phi / TWO_PI + 0.5

    def row_values(rows):
        rows = np.clip(rows, 0, height - 1)
        w = widths[rows]
        pos = lon_unit * w - 0.5
        lo = np.floor(pos)
        fc = (pos - lo)[..., None]
        lo = lo.astype(np.int64)
        base = starts[rows]
        v0 = flat[base + np.mod(lo, w)]
        v1 = flat[base + np.mod(lo + 1, w)]
        return (1.0 - fc) * v0 + fc * v1

    return (1.0 - fr) * row_values(r0) + fr * row_values(r0 + 1)


def extract_viewport(source, spec):
    """Render one rectilinear viewport from an ERP array or TiledImage."""
    theta, phi = viewport_rays(spec)
    return sample_sphere(source, theta, phi)


def viewport_contains(spec, theta, phi):
    """Boolean mask of sphere directions inside the viewport frustum."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    ct = np.cos(theta)
    world = np.stack(
        [ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1
    )
    cam = world @ _rotation(spec)
    x, y, z = cam[..., 0], cam[..., 1], cam[..., 2]
    tan_u = math.tan(spec.fov_lon / 2)
    tan_v = math.tan(spec.fov_lat / 2)
    return (
        (x > 0)
        & (np.abs(y) <= x * tan_u + _BOUNDARY_EPS)
        & (np.abs(z) <= x * tan_v + _BOUNDARY_EPS)
    )


def _sample_clamped(patch, rows, cols):
    h, w = patch.shape[0], patch.shape[1]
    r0 = np.floor(rows)
    c0 = np.floor(cols)
    fr = (rows - r0)[..., None]
    fc = (cols - c0)[..., None]
    r0 = np.clip(r0.astype(np.int64), 0, h - 1)
    c0 = np.clip(c0.astype(np.int64), 0, w - 1)
    r1 = np.clip(r0 + 1, 0, h - 1)
    c1 = np.clip(c0 + 1, 0, w - 1)
    top = (1.0 - fc) * patch[r0, c0] + fc * patch[r0, c1]
    bot = (1.0 - fc) * patch[r1, c0] + fc * patch[r1, c1]
    return (1.0 - fr) * top + fr * bot


def embed_viewport(erp, patch, spec):
    """Paste a viewport-shaped patch into an ERP raster by inverse projection.

    Every ERP pixel whose direction falls inside the frustum is replaced
    with the bilinearly sampled patch value; the rest is left untouched.
    """
    img = as_image(erp).copy()
    patch = as_image(patch)
    if patch.shape[:2] != (spec.height, spec.width):
        raise ValueError(
            f"patch is {patch.shape[0]}x{patch.shape[1]}, spec expects "
            f"{spec.height}x{spec.width}"
        )
    if patch.shape[2] != img.shape[2]:
        raise ValueError("patch and target channel counts differ")
    height, width = img.shape[0], img.shape[1]
    theta = row_latitudes(height)[:, None]
    phi = ((np.arange(width, dtype=np.float64) + 0.5) / width - 0.5) * TWO_PI
    theta, phi = np.broadcast_arrays(theta, phi[None, :])
    ct = np.cos(theta)
    world = np.stack(
        [ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1
    )
    cam = world @ _rotation(spec)
    x, y, z = cam[..., 0], cam[..., 1], cam[..., 2]
    tan_u = math.tan(spec.fov_lon / 2)
    tan_v = math.tan(spec.fov_lat / 2)
    mask = (
        (x > 0)
        & (np.abs(y) <= x * tan_u + _BOUNDARY_EPS)
        & (np.abs(z) <= x * tan_v + _BOUNDARY_EPS)
    )
    u = y[mask] / x[mask]
    v = z[mask] / x[mask]
    cols = (u / tan_u + 1.0) * 0.5 * spec.width - 0.5
    rows = (1.0 - v / tan_v) * 0.5 * spec.height - 0.5
    img[mask] = _sample_clamped(patch, rows, cols)
    return img
