"""Convolution over tiled spherical rasters.

Two reference routes evaluate the per-neighbor definition directly: the
exact column mapping corrects for the latitude difference between rows,
the approximate one keeps only the width ratio. The fast route reaches
the approximate result by padding every tile (borders resampled from the
neighbors, circular wrap along rows) and running a standard convolution
on the padded block, which is the form that scales.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .representation import (
    TiledImage,
    as_image,
    pad_tile,
    pole_row,
    sample_row_circular,
)

__all__ = [
    "GridCoord",
    "ConvKernel",
    "OpCountReport",
    "standard_conv",
    "pconv_fast",
    "pconv_reference",
    "neighbor_exact",
    "neighbor_approx",
    "op_count_report",
]


class GridCoord(NamedTuple):
    row: float
    col: float


@dataclass
class ConvKernel:
    """Dense convolution weights of spread (2*radius + 1) per axis.

    ``weights`` has shape (out_channels, in_channels, 2K+1, 2K+1) and is
    applied in correlation order: output(p, q) sums w[i, j] * x(p+i, q+j)
    over offsets i, j in [-K, K].
    """

    radius: int
    in_channels: int
    out_channels: int
    weights: np.ndarray

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be >= 1")
        span = 2 * self.radius + 1
        w = np.asarray(self.weights, dtype=np.float64)
        want = (self.out_channels, self.in_channels, span, span)
        if w.shape != want:
            raise ValueError(f"weights shape {w.shape}, expected {want}")
        if not np.all(np.isfinite(w)):
            raise ValueError("kernel weights must be finite")
        self.weights = w

    @classmethod
    def delta(cls, channels, radius=1):
        """Identity kernel: center weight 1 on the matching channel."""
        span = 2 * radius + 1
        w = np.zeros((channels, channels, span, span))
        for c in range(channels):
            w[c, c, radius, radius] = 1.0
        return cls(radius, channels, channels, w)

    @classmethod
    def random(cls, radius, in_channels, out_channels, seed=0):
        rng = np.random.default_rng(seed)
        span = 2 * radius + 1
        w = rng.standard_normal((out_channels, in_channels, span, span))
        return cls(radius, in_channels, out_channels, w)

    def save(self, path):
        data = {
            "radius": self.radius,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "weights": self.weights.reshape(-1).tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        radius = int(data["radius"])
        cin = int(data["in_channels"])
        cout = int(data["out_channels"])
        span = 2 * radius + 1
        w = np.asarray(data["weights"], dtype=np.float64).reshape(
            cout, cin, span, span
        )
        return cls(radius, cin, cout, w)


def _conv_valid(padded, weights):
    """Valid-region correlation with scalar taps.

    Works on contiguous channel planes; the (offset, offset, in-channel)
    loop order and the separate multiply/add roundings fix the exact
    accumulation sequence, so every caller gets bit-identical sums for
    identical inputs.
    """
    cout, cin, kh, kw = weights.shape
    rows = padded.shape[0] - kh + 1
    cols = padded.shape[1] - kw + 1
    src = np.ascontiguousarray(padded.transpose(2, 0, 1))
    acc = np.zeros((cout, rows, cols), dtype=np.float64)
    tmp = np.empty((rows, cols), dtype=np.float64)
    for di in range(kh):
        for dj in range(kw):
            for ci in range(cin):
                plane = src[ci, di : di + rows, dj : dj + cols]
                for co in range(cout):
                    np.multiply(plane, weights[co, ci, di, dj], out=tmp)
                    np.add(acc[co], tmp, out=acc[co])
    return np.ascontiguousarray(acc.transpose(1, 2, 0))


def standard_conv(image, kernel, padding="zero"):
    """Same-size convolution of a planar image with zero or circular padding."""
    img = as_image(image)
    if img.shape[2] != kernel.in_channels:
        raise ValueError(
            f"image has {img.shape[2]} channels, kernel expects {kernel.in_channels}"
        )
    k = kernel.radius
    if padding == "zero":
        padded = np.pad(img, ((k, k), (k, k), (0, 0)))
    elif padding == "circular":
        padded = np.pad(img, ((k, k), (k, k), (0, 0)), mode="wrap")
    else:
        raise ValueError(f"unknown padding {padding!r}")
    return _conv_valid(padded, kernel.weights)


def pconv_fast(tiled, kernel):
    """Per-tile padded convolution; matches the approximate reference."""
    cfg = tiled.config
    if tiled.channels != kernel.in_channels:
        raise ValueError(
            f"input has {tiled.channels} channels, kernel expects {kernel.in_channels}"
        )
    if kernel.radius > cfg.tile_height:
        raise ValueError(
            f"kernel radius {kernel.radius} exceeds tile height {cfg.tile_height}"
        )
    out = [
        _conv_valid(pad_tile(tiled, t, kernel.radius), kernel.weights)
        for t in range(cfg.tiles)
    ]
    return TiledImage(cfg, out)


def _widths_and_height(config):
    if hasattr(config, "row_widths"):
        return config.row_widths(), config.height
    widths = np.asarray(config, dtype=np.int64)
    if widths.ndim != 1 or widths.size == 0 or np.any(widths < 1):
        raise ValueError("per-row widths must be a 1-D array of positive ints")
    return widths, widths.shape[0]


def _unwrapped_latitude(i, height):
    # Analytic continuation of the ERP row latitude; rows past a pole get
    # |latitude| > pi/2 and a negated cosine, as the pre-wrap mapping demands.
    return (0.5 - (i + 0.5) / height) * np.pi


def _neighbor(p, q, i, j, config, exact):
    widths, height = _widths_and_height(config)
    if not 0 <= p < height:
        raise ValueError(f"row index out of [0, {height}): {p}")
    w_p = float(widths[p])
    if not 0 <= q < w_p:
        raise ValueError(f"column index out of [0, {w_p}): {q}")
    raw = p + i
    crosses_pole = raw < 0 or raw >= height
    row = pole_row(raw, height) if crosses_pole else raw
    w_n = float(widths[row])
    if exact:
        ratio = np.cos(_unwrapped_latitude(p, height)) / np.cos(
            _unwrapped_latitude(raw, height)
        )
    else:
        ratio = 1.0
    col = (w_n / w_p) * (q + ratio * j + 0.5) - 0.5
    if crosses_pole:
        col = col + 0.5 * w_n
    return GridCoord(float(row), float(np.mod(col, w_n)))


def neighbor_exact(p, q, i, j, config):
    """Grid location of the offset-(i, j) neighbor of sample (p, q).

    Columns are mapped through the sphere with the latitude-dependent
    cosine ratio; rows running past a pole wrap to the antipodal meridian.
    ``config`` is a :class:`PseudocylConfig` or a per-row width array.
    """
    return _neighbor(p, q, i, j, config, exact=True)


def neighbor_approx(p, q, i, j, config):
    """Like :func:`neighbor_exact` with the cosine ratio dropped.

    Only the width ratio between the two rows remains, which makes
    neighbors of adjacent samples shifted copies of one another.
    """
    return _neighbor(p, q, i, j, config, exact=False)


def pconv_reference(tiled, kernel, mode="approx"):
    """Direct per-neighbor evaluation of the convolution on a tiled raster."""
    if mode not in ("exact", "approx"):
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    cfg = tiled.config
    if tiled.channels != kernel.in_channels:
        raise ValueError(
            f"input has {tiled.channels} channels, kernel expects {kernel.in_channels}"
        )
    k = kernel.radius
    if k >= cfg.height:
        raise ValueError(f"kernel radius {k} must be < height {cfg.height}")
    widths = cfg.row_widths()
    height = cfg.height
    cin, cout = kernel.in_channels, kernel.out_channels
    weights = kernel.weights
    out = [
        np.zeros((cfg.tile_height, cfg.widths[t], cout), dtype=np.float64)
        for t in range(cfg.tiles)
    ]
    for p in range(height):
        w_p = float(widths[p])
        cols = np.arange(w_p, dtype=np.float64)
        acc = np.zeros((int(w_p), cout), dtype=np.float64)
        lat_p = _unwrapped_latitude(p, height)
        for i in range(-k, k + 1):
            raw = p + i
            crosses_pole = raw < 0 or raw >= height
            row = pole_row(raw, height) if crosses_pole else raw
            src = tiled.row(row)
            w_n = float(widths[row])
            scale = w_n / w_p
            ratio = (
                np.cos(lat_p) / np.cos(_unwrapped_latitude(raw, height))
                if mode == "exact"
                else 1.0
            )
            for j in range(-k, k + 1):
                pos = scale * (cols + ratio * j + 0.5) - 0.5
                if crosses_pole:
                    pos = pos + 0.5 * w_n
                vals = sample_row_circular(src, pos)
                wmat = weights[:, :, i + k, j + k]
                for ci in range(cin):
                    tap = vals[:, ci]
                    for co in range(cout):
                        acc[:, co] += wmat[co, ci] * tap
        t = p // cfg.tile_height
        out[t][p - t * cfg.tile_height] = acc
    return TiledImage(cfg, out)


@dataclass(frozen=True)
class OpCountReport:
    """Closed-form operation counts for one kernel radius and tile layout."""

    radius: int
    search_per_sample: int
    interp_per_sample: int
    inner_product_per_sample: int
    padding_per_tile: tuple
    conv_per_tile: tuple

    @property
    def reference_per_sample(self):
        return (
            self.search_per_sample
            + self.interp_per_sample
            + self.inner_product_per_sample
        )

    @property
    def total_padding(self):
        return sum(self.padding_per_tile)

    @property
    def total_conv(self):
        return sum(self.conv_per_tile)


def op_count_report(height, width, config, radius):
    """Per-sample reference costs and fast-path padding costs per tile.

    Per sample the reference needs 28K^2+14K operations for neighbor
    search, 20K^2+10K for interpolation and 8K^2+8K+1 for the inner
    product; the fast path instead pays 20K*W_t + (2K+H_t)*2K per tile
    for padding and only the inner product per sample.
    """
    if config.height != height or config.width != width:
        raise ValueError(
            f"config is {config.height}x{config.width}, expected {height}x{width}"
        )
    k = int(radius)
    if k < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    h0 = config.tile_height
    padding = tuple(20 * k * w + (2 * k + h0) * 2 * k for w in config.widths)
    inner = 8 * k * k + 8 * k + 1
    conv = tuple(inner * w * h0 for w in config.widths)
    return OpCountReport(
        radius=k,
        search_per_sample=28 * k * k + 14 * k,
        interp_per_sample=20 * k * k + 10 * k,
        inner_product_per_sample=inner,
        padding_per_tile=padding,
        conv_per_tile=conv,
    )
