"""Non-uniform quantizer centers and discretized mixture-of-Gaussians rates.

Parameters arrive from outside (nothing here is trained): cumulative
exponentials give strictly increasing quantization centers per channel,
codes snap to the nearest center, and a three-component Gaussian mixture
integrated over the center bins yields the probability mass that prices
each code in bits.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

__all__ = [
    "QuantizerParams",
    "MogParams",
    "quant_centers",
    "quantize",
    "mog_pmf",
    "code_length",
]


@dataclass(frozen=True)
class QuantizerParams:
    """Per-channel log-gap parameters of the cumulative-exponential centers."""

    omega: np.ndarray  # shape (channels, levels)

    def __post_init__(self):
        om = np.atleast_2d(np.asarray(self.omega, dtype=np.float64))
        if om.ndim != 2 or om.size == 0:
            raise ValueError("omega must be a (channels, levels) array")
        if not np.all(np.isfinite(om)):
            raise ValueError("omega must be finite")
        object.__setattr__(self, "omega", om)

    @property
    def channels(self):
        return self.omega.shape[0]

    @property
    def levels(self):
        return self.omega.shape[1]


def quant_centers(params):
    """Strictly increasing centers: cumulative sums of exp(omega) per channel."""
    return np.cumsum(np.exp(params.omega), axis=1)


def quantize(code, centers):
    """Index and value of the center nearest to ``code``.

    Exact midpoints break toward the lower index.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 1 or centers.size == 0:
        raise ValueError("centers must be a non-empty 1-D array")
    if centers.size > 1 and not np.all(np.diff(centers) > 0):
        raise ValueError("centers must be strictly increasing")
    # argmin returns the first minimizer, which is the lower index on ties
    idx = int(np.argmin((code - centers) ** 2))
    return idx, float(centers[idx])


@dataclass(frozen=True)
class MogParams:
    """One code's Gaussian mixture: weights, means and variances."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.means, dtype=np.float64)
        v = np.asarray(self.variances, dtype=np.float64)
        if not (w.ndim == m.ndim == v.ndim == 1 and w.shape == m.shape == v.shape):
            raise ValueError("weights, means and variances must be equal-length 1-D")
        if w.size == 0:
            raise ValueError("mixture must have at least one component")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
            raise ValueError("mixture parameters must be finite")
        if np.any(w < 0):
            raise ValueError("mixing weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixing weights sum to {w.sum()}, expected 1")
        if np.any(v < 0):
            raise ValueError("variances must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)


def _normal_cdf(x):
    # Phi(x) = (1 + erf(x / sqrt(2))) / 2, exact to double precision.
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def mog_pmf(centers, mog):
    """Probability mass of each center under the discretized mixture.

    Bin l spans the midpoints to its neighbors; the outermost bins extend
    to +-infinity so the masses always sum to one. A zero-variance
    component degenerates to a point mass on the bin containing its mean.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 1 or centers.size == 0:
        raise ValueError("centers must be a non-empty 1-D array")
    if centers.size > 1 and not np.all(np.diff(centers) > 0):
        raise ValueError("centers must be strictly increasing")
    interior = 0.5 * (centers[:-1] + centers[1:])
    pmf = np.zeros(centers.size, dtype=np.float64)
    for weight, mean, var in zip(mog.weights, mog.means, mog.variances):
        if var == 0.0:
            # Bins are half-open [lo, hi); searchsorted(side=right) matches.
            pmf[int(np.searchsorted(interior, mean, side="right"))] += weight
            continue
        sigma = math.sqrt(var)
        cdf = np.empty(centers.size + 1)
        cdf[0] = 0.0
        cdf[-1] = 1.0
        cdf[1:-1] = _normal_cdf((interior - mean) / sigma)
        pmf += weight * np.diff(cdf)
    return pmf


def code_length(pmf, index):
    """Ideal code length -log2 pmf[index]; zero mass yields +inf."""
    p = float(np.asarray(pmf)[index])
    if p < 0:
        raise ValueError(f"probability must be nonnegative, got {p}")
    if p == 0.0:
        return math.inf
    return -math.log2(p)
