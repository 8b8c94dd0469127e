"""Planar and viewport-based quality metrics plus Bjontegaard comparison."""

import csv
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d

from .representation import as_image
from .viewport import canonical_viewports, extract_viewport

__all__ = [
    "mse",
    "psnr",
    "ssim",
    "vmse",
    "vpsnr",
    "vssim",
    "vssim_loss",
    "RdPoint",
    "RdCurve",
    "CurveOverlapError",
    "bd_rate",
    "bd_distortion",
    "bd_metrics",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(ref, test):
    a = as_image(ref)
    b = as_image(test)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(ref, test):
    """Mean squared sample difference."""
    a, b = _pair(ref, test)
    return float(np.mean((a - b) ** 2))


def psnr(ref, test, peak=1.0):
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    err = mse(ref, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _gaussian_taps(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    half = (size - 1) / 2
    x = np.arange(size, dtype=np.float64) - half
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _local_mean(plane, taps):
    out = correlate1d(plane, taps, axis=0, mode="nearest")
    return correlate1d(out, taps, axis=1, mode="nearest")


def ssim(ref, test, dynamic_range=1.0):
    """Mean structural similarity over an 11x11 Gaussian window (sigma 1.5).

    Channels are scored separately and averaged. Only windows fully inside
    the image contribute, so both dimensions must be at least 11.
    """
    a, b = _pair(ref, test)
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM"
        )
    taps = _gaussian_taps()
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    half = SSIM_WINDOW // 2
    crop = (slice(half, a.shape[0] - half), slice(half, a.shape[1] - half))
    scores = []
    for c in range(a.shape[2]):
        x, y = a[:, :, c], b[:, :, c]
        mu_x = _local_mean(x, taps)[crop]
        mu_y = _local_mean(y, taps)[crop]
        xx = _local_mean(x * x, taps)[crop] - mu_x * mu_x
        yy = _local_mean(y * y, taps)[crop] - mu_y * mu_y
        xy = _local_mean(x * y, taps)[crop] - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


def _viewport_pairs(ref, test, viewports=None):
    a, b = _pair(ref, test)
    if viewports is None:
        viewports = canonical_viewports(a.shape[0], a.shape[1])
    for spec in viewports:
        yield extract_viewport(a, spec), extract_viewport(b, spec)


def vmse(ref, test, viewports=None):
    """Mean MSE over the 14 canonical viewports."""
    return float(np.mean([mse(x, y) for x, y in _viewport_pairs(ref, test, viewports)]))


def vpsnr(ref, test, viewports=None):
    """10*log10(1/VMSE) with unit peak; identical images give +inf."""
    err = vmse(ref, test, viewports)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def vssim(ref, test, viewports=None):
    """Mean SSIM over the 14 canonical viewports."""
    return float(
        np.mean([ssim(x, y) for x, y in _viewport_pairs(ref, test, viewports)])
    )


def vssim_loss(ref, test, viewports=None):
    """1 - VSSIM, the form used as a training objective."""
    return 1.0 - vssim(ref, test, viewports)


class RdPoint(NamedTuple):
    qp: int
    bpp: float
    distortion: float


@dataclass
class RdCurve:
    """Rate-distortion points ordered by bits per pixel."""

    points: list
    distortion_kind: str = "VMSE"

    def __post_init__(self):
        pts = [RdPoint(int(q), float(r), float(d)) for q, r, d in self.points]
        if len(pts) < 2:
            raise ValueError("an RD curve needs at least 2 points")
        if any(p.bpp <= 0 for p in pts):
            raise ValueError("bits per pixel must be positive")
        self.points = sorted(pts, key=lambda p: p.bpp)

    @property
    def bpps(self):
        return np.array([p.bpp for p in self.points])

    @property
    def distortions(self):
        return np.array([p.distortion for p in self.points])

    def save_csv(self, path):
        path = Path(path)
        tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
        try:
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["qp", "bpp", "distortion"])
                for p in self.points:
                    writer.writerow([p.qp, repr(p.bpp), repr(p.distortion)])
            os.replace(tmp, path)
        finally:
            tmp.unlink(missing_ok=True)

    @classmethod
    def load_csv(cls, path, distortion_kind="VMSE"):
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["qp", "bpp", "distortion"]:
                raise ValueError(f"{path}: expected header 'qp,bpp,distortion'")
            pts = [(int(row[0]), float(row[1]), float(row[2])) for row in reader if row]
        return cls(pts, distortion_kind)


class CurveOverlapError(ValueError):
    """The two curves share no interval on the integration axis."""


def _trapezoid(y, x):
    return float(np.sum((y[1:] + y[:-1]) * 0.5 * np.diff(x)))


def _fit_cubic(x, y):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", np.exceptions.RankWarning)
        return np.polyfit(x, y, 3)


def _mean_gap(x_anchor, y_anchor, x_test, y_test, samples=1000):
    lo = max(x_anchor.min(), x_test.min())
    hi = min(x_anchor.max(), x_test.max())
    if not hi > lo:
        raise CurveOverlapError("curves do not overlap on the integration axis")
    grid = np.linspace(lo, hi, samples)
    gap = np.polyval(_fit_cubic(x_test, y_test), grid) - np.polyval(
        _fit_cubic(x_anchor, y_anchor), grid
    )
    return _trapezoid(gap, grid) / (hi - lo)


def _check_bd_points(anchor, test):
    for curve in (anchor, test):
        if len(curve.points) < 4:
            raise ValueError("BD comparison needs at least 4 points per curve")


def bd_rate(anchor, test):
    """Average bitrate delta in percent over the shared distortion range.

    Cubic fits of log10-rate against distortion, integrated with a
    1000-sample trapezoid; negative means the test curve saves bits.
    """
    _check_bd_points(anchor, test)
    delta = _mean_gap(
        anchor.distortions, np.log10(anchor.bpps), test.distortions, np.log10(test.bpps)
    )
    return float((10.0 ** delta - 1.0) * 100.0)


def bd_distortion(anchor, test):
    """Average distortion delta (test minus anchor) over the shared log-rate range.

    For quality-valued axes such as PSNR or SSIM, positive means the test
    curve scores better at the same rate; for error-valued axes the sign
    flips.
    """
    _check_bd_points(anchor, test)
    return float(
        _mean_gap(
            np.log10(anchor.bpps), anchor.distortions, np.log10(test.bpps), test.distortions
        )
    )


def bd_metrics(anchor, test):
    """Both Bjontegaard deltas: (bd_rate_percent, bd_distortion)."""
    return bd_rate(anchor, test), bd_distortion(anchor, test)
