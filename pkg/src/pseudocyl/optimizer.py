"""Greedy and exhaustive search over symmetric, monotone width configurations.

Candidate widths live on a quantized grid; configurations mirror across
the equator and may not shrink toward it. The greedy solver fixes tiles
pole-first, scoring each full configuration by its averaged RD curve and
comparing curves to the incumbent via the Bjontegaard rate delta (more
negative wins, ties go to the smaller width).
"""

import itertools
import math
from dataclasses import dataclass, field

from .codec import CachingCodec, rd_curve
from .metrics import CurveOverlapError, RdCurve, bd_rate
from .representation import PseudocylConfig

__all__ = [
    "SearchSpace",
    "SearchStep",
    "SearchLog",
    "score_config",
    "greedy_optimize",
    "exhaustive_optimize",
    "enumerate_widths",
]

_MIN_VMSE = 1e-12


@dataclass(frozen=True)
class SearchSpace:
    """Quantized width grid and constraint structure for one raster size."""

    height: int
    width: int
    tiles: int
    levels: int

    def __post_init__(self):
        if self.tiles < 1 or self.levels < 1:
            raise ValueError("tiles and levels must be >= 1")
        if self.height % self.tiles:
            raise ValueError(f"{self.tiles} tiles do not divide height {self.height}")
        if self.width // self.levels < 1:
            raise ValueError(f"{self.levels} levels exceed width {self.width}")

    @property
    def tile_height(self):
        return self.height // self.tiles

    @property
    def quantized_widths(self):
        step = self.width // self.levels
        return tuple((l + 1) * step for l in range(self.levels))

    @property
    def t_half(self):
        """Last tile index under the monotone constraint and greedy loop."""
        return (self.tiles - 1) // 2 - 1

    def config(self, widths):
        return PseudocylConfig(self.height, self.width, self.tile_height, tuple(widths))

    def is_legal(self, widths):
        """Membership, equator symmetry and pole-to-equator monotonicity."""
        widths = tuple(widths)
        if len(widths) != self.tiles:
            return False
        grid = set(self.quantized_widths)
        if any(w not in grid for w in widths):
            return False
        if any(widths[t] != widths[self.tiles - 1 - t] for t in range(self.tiles)):
            return False
        half = self.t_half
        if any(widths[t] > widths[t + 1] for t in range(half)):
            return False
        # tiles past the constrained range stay at the top width
        top = self.quantized_widths[-1]
        if any(
            widths[t] != top for t in range(half + 1, self.tiles - 1 - half)
        ):
            return False
        return True


@dataclass
class SearchStep:
    """One scored candidate during the greedy sweep."""

    tile: int
    width: int
    curve: RdCurve
    bd_rate_vs_incumbent: float
    accepted: bool = False


@dataclass
class SearchLog:
    steps: list = field(default_factory=list)

    def to_jsonable(self):
        return [
            {
                "tile": s.tile,
                "width": s.width,
                "curve": [[p.qp, p.bpp, p.distortion] for p in s.curve.points],
                "bd_rate_vs_incumbent": s.bd_rate_vs_incumbent,
                "accepted": s.accepted,
            }
            for s in self.steps
        ]


def score_config(dataset, config, codec, threads=1):
    """Averaged RD curve (VMSE distortion) of a configuration on a dataset."""
    return rd_curve(dataset, config, codec, threads=threads)


def _psnr_curve(curve):
    # BD fits are far better conditioned in dB than in raw MSE.
    pts = [
        (p.qp, p.bpp, 10.0 * math.log10(1.0 / max(p.distortion, _MIN_VMSE)))
        for p in curve.points
    ]
    return RdCurve(pts, "VPSNR")


def compare_curves(incumbent, candidate):
    """BD-rate of a candidate against the incumbent; negative saves bits.

    A candidate whose quality range never reaches the incumbent's ranks
    as +inf: it cannot serve the same operating points, so it never wins.
    """
    try:
        return bd_rate(_psnr_curve(incumbent), _psnr_curve(candidate))
    except CurveOverlapError:
        return math.inf


def _wrap_codec(codec):
    return codec if isinstance(codec, CachingCodec) else CachingCodec(codec)


def greedy_optimize(dataset, space, codec, threads=1):
    """Pole-first greedy width estimation; returns (widths, search log).

    All tiles start at the top quantized width. For each constrained tile
    (and its mirror) the candidate widths from the previous tile's choice
    upward are scored as full configurations; the best BD-rate against
    the incumbent curve wins and becomes the new incumbent.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset must not be empty")
    codec = _wrap_codec(codec)
    grid = space.quantized_widths
    top = grid[-1]
    widths = [top] * space.tiles
    log = SearchLog()
    if space.levels == 1 or space.t_half < 0:
        return widths, log

    incumbent = score_config(dataset, space.config(widths), codec, threads)
    start_level = 0
    for t in range(space.t_half + 1):
        best = None
        for level in range(start_level, space.levels):
            trial = list(widths)
            trial[t] = trial[space.tiles - 1 - t] = grid[level]
            curve = score_config(dataset, space.config(trial), codec, threads)
            bd = compare_curves(incumbent, curve)
            step = SearchStep(t, grid[level], curve, bd)
            log.steps.append(step)
            if best is None or bd < best[0]:
                best = (bd, level, curve, step)
        _, level, curve, step = best
        step.accepted = True
        widths[t] = widths[space.tiles - 1 - t] = grid[level]
        incumbent = curve
        start_level = level
    return widths, log


def enumerate_widths(space):
    """All legal width tuples, in lexicographic order of the pole half."""
    half = space.t_half
    grid = space.quantized_widths
    top = grid[-1]
    if half < 0:
        return [tuple([top] * space.tiles)]
    configs = []
    for prefix in itertools.combinations_with_replacement(grid, half + 1):
        widths = [top] * space.tiles
        for t, w in enumerate(prefix):
            widths[t] = widths[space.tiles - 1 - t] = w
        configs.append(tuple(widths))
    return configs


def exhaustive_optimize(dataset, space, codec, cap=10000, threads=1):
    """Score every legal configuration; returns (best widths, all scored).

    Every candidate is compared to the all-top-width anchor by BD-rate.
    The scored list holds (widths, curve, bd_rate) triples in enumeration
    order. Refuses to run when the space exceeds ``cap`` configurations.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset must not be empty")
    candidates = enumerate_widths(space)
    if len(candidates) > cap:
        raise ValueError(
            f"search space holds {len(candidates)} configurations, cap is {cap}"
        )
    codec = _wrap_codec(codec)
    anchor_widths = tuple([space.quantized_widths[-1]] * space.tiles)
    anchor = score_config(dataset, space.config(anchor_widths), codec, threads)
    scored = []
    best = None
    for widths in candidates:
        curve = score_config(dataset, space.config(widths), codec, threads)
        bd = compare_curves(anchor, curve)
        scored.append((widths, curve, bd))
        if best is None or bd < best[0]:
            best = (bd, widths)
    return list(best[1]), scored
