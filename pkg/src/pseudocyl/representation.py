"""Tiled pseudocylindrical rasters and their ERP conversions.

A tiled raster stores one rectangular block per tile, every row of tile t
holding ``widths[t]`` samples. Row resampling is two-tap linear with
circular wrap, using the same half-pixel sample-center convention as the
coordinate math in :mod:`pseudocyl.geometry`.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import row_latitudes

__all__ = [
    "PseudocylConfig",
    "TiledImage",
    "as_image",
    "erp_config",
    "sinusoidal_config",
    "sample_row_circular",
    "resize_row",
    "resize_image_width",
    "erp_to_tiled",
    "tiled_to_erp",
    "pole_row",
    "pad_tile",
]


@dataclass(frozen=True)
class PseudocylConfig:
    """Width-per-tile layout of a height x width spherical raster.

    Every row of tile t holds ``widths[t]`` samples and all tiles share
    ``tile_height`` rows, so ``len(widths) * tile_height == height``.
    """

    height: int
    width: int
    tile_height: int
    widths: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.height < 1 or self.width < 1 or self.tile_height < 1:
            raise ValueError("height, width and tile_height must be >= 1")
        if not self.widths:
            raise ValueError("widths must not be empty")
        if self.tile_height * len(self.widths) != self.height:
            raise ValueError(
                f"{len(self.widths)} tiles of height {self.tile_height} "
                f"do not cover height {self.height}"
            )
        for w in self.widths:
            if not 1 <= w <= self.width:
                raise ValueError(f"tile width {w} out of [1, {self.width}]")

    @property
    def tiles(self):
        return len(self.widths)

    def is_symmetric(self):
        return self.widths == self.widths[::-1]

    def is_uniform(self):
        return all(w == self.width for w in self.widths)

    def tile_of_row(self, i):
        if not 0 <= i < self.height:
            raise ValueError(f"row index out of [0, {self.height}): {i}")
        return i // self.tile_height

    def row_widths(self):
        """Per-row widths as an int64 array of length ``height``."""
        return np.repeat(np.asarray(self.widths, dtype=np.int64), self.tile_height)

    def to_dict(self):
        return {
            "height": self.height,
            "width": self.width,
            "tile_height": self.tile_height,
            "widths": list(self.widths),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                height=int(data["height"]),
                width=int(data["width"]),
                tile_height=int(data["tile_height"]),
                widths=tuple(int(w) for w in data["widths"]),
            )
        except KeyError as exc:
            raise ValueError(f"config is missing key {exc}") from exc

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def erp_config(height, width, tile_height):
    """Config whose tiles all span the full width (plain ERP in tiles)."""
    if height % tile_height:
        raise ValueError(f"tile_height {tile_height} does not divide {height}")
    return PseudocylConfig(
        height, width, tile_height, (width,) * (height // tile_height)
    )


def sinusoidal_config(height, width, tile_height):
    """Config with tile widths following the cosine of the tile-center latitude."""
    if height % tile_height:
        raise ValueError(f"tile_height {tile_height} does not divide {height}")
    tiles = height // tile_height
    lats = row_latitudes(height)
    widths = []
    for t in range(tiles):
        center = lats[t * tile_height : (t + 1) * tile_height].mean()
        widths.append(int(np.clip(round(np.cos(center) * width), 1, width)))
    return PseudocylConfig(height, width, tile_height, tuple(widths))


def as_image(arr):
    """Coerce to a float64 (rows, cols, channels) array with finite samples."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1 or img.shape[2] < 1:
        raise ValueError(f"degenerate image shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite samples")
    return img


@dataclass
class TiledImage:
    """One raster block per tile, realizing a :class:`PseudocylConfig`."""

    config: PseudocylConfig
    tiles: list

    def __post_init__(self):
        if len(self.tiles) != self.config.tiles:
            raise ValueError(
                f"expected {self.config.tiles} tiles, got {len(self.tiles)}"
            )
        tiles = [as_image(t) for t in self.tiles]
        channels = tiles[0].shape[2]
        h0 = self.config.tile_height
        for t, tile in enumerate(tiles):
            want = (h0, self.config.widths[t], channels)
            if tile.shape != want:
                raise ValueError(
                    f"tile {t} has shape {tile.shape}, config expects {want}"
                )
        self.tiles = tiles

    @property
    def channels(self):
        return self.tiles[0].shape[2]

    def row(self, i):
        """View of global row ``i`` as a (row_width, channels) array."""
        t = self.config.tile_of_row(i)
        return self.tiles[t][i - t * self.config.tile_height]

    def copy(self):
        return TiledImage(self.config, [t.copy() for t in self.tiles])


def sample_row_circular(row, positions):
    """Two-tap linear interpolation of a circular row at fractional positions.

    ``row`` has shape (width, channels). A position landing exactly on a
    sample center gets weights (1, 0), so integer positions are exact reads.
    """
    pos = np.asarray(positions, dtype=np.float64)
    lo = np.floor(pos)
    frac = pos - lo
    lo = lo.astype(np.int64)
    width = row.shape[0]
    v0 = row[np.mod(lo, width)]
    v1 = row[np.mod(lo + 1, width)]
    return (1.0 - frac)[..., None] * v0 + frac[..., None] * v1


def _resample_positions(src_width, dst_width):
    # Center-aligned mapping: shift by half a pixel, scale, shift back.
    cols = np.arange(dst_width, dtype=np.float64)
    return (src_width / dst_width) * (cols + 0.5) - 0.5


def resize_row(row, new_width):
    """Resample one circular row to ``new_width`` samples."""
    if new_width < 1:
        raise ValueError(f"target width must be >= 1, got {new_width}")
    row = np.asarray(row, dtype=np.float64)
    squeeze = row.ndim == 1
    if squeeze:
        row = row[:, None]
    if row.shape[0] == new_width:
        out = row.copy()
    else:
        out = sample_row_circular(row, _resample_positions(row.shape[0], new_width))
    return out[:, 0] if squeeze else out


def _resize_block(block, new_width):
    """Resample a stack of equal-width circular rows to ``new_width``."""
    if block.shape[1] == new_width:
        return block.copy()
    pos = _resample_positions(block.shape[1], new_width)
    lo = np.floor(pos)
    frac = (pos - lo)[None, :, None]
    lo = lo.astype(np.int64)
    width = block.shape[1]
    v0 = block[:, np.mod(lo, width)]
    v1 = block[:, np.mod(lo + 1, width)]
    return (1.0 - frac) * v0 + frac * v1


def resize_image_width(image, new_width):
    """Resample every row of an image to ``new_width`` samples."""
    if new_width < 1:
        raise ValueError(f"target width must be >= 1, got {new_width}")
    return _resize_block(as_image(image), new_width)


def erp_to_tiled(erp, config):
    """Split an ERP raster into tiles, resampling each row band to its width."""
    img = as_image(erp)
    if img.shape[0] != config.height or img.shape[1] != config.width:
        raise ValueError(
            f"image is {img.shape[0]}x{img.shape[1]}, config expects "
            f"{config.height}x{config.width}"
        )
    h0 = config.tile_height
    tiles = [
        _resize_block(img[t * h0 : (t + 1) * h0], config.widths[t])
        for t in range(config.tiles)
    ]
    return TiledImage(config, tiles)


def tiled_to_erp(tiled):
    """Resample every tile back to the full width and stack into an ERP raster."""
    cfg = tiled.config
    return np.concatenate(
        [_resize_block(tile, cfg.width) for tile in tiled.tiles], axis=0
    )


def pole_row(i, height):
    """Row reached when index ``i`` runs past a pole: (-1 - i) mod height."""
    return (-1 - i) % height


def _border_row(tiled, global_row, target_width):
    """Row used to pad a tile edge, resampled to the tile's width.

    In-range rows come from the adjacent tile. Out-of-range rows cross a
    pole: the wrapped row is read shifted by half its width, matching the
    antipodal meridian.
    """
    cfg = tiled.config
    if 0 <= global_row < cfg.height:
        return resize_row(tiled.row(global_row), target_width)
    src = tiled.row(pole_row(global_row, cfg.height))
    if src.shape[0] != target_width:
        raise ValueError(
            "pole padding crossed into a tile of different width; "
            "pad radius exceeds the pole tile height"
        )
    pos = np.arange(target_width, dtype=np.float64) + 0.5 * target_width
    return sample_row_circular(src, pos)


def pad_tile(tiled, t, pad):
    """Tile ``t`` extended by ``pad`` samples on every side.

    Vertical borders are the nearest rows of the adjacent tiles (wrapped
    across the pole for the outermost tiles), resampled to this tile's
    width; the horizontal border wraps circularly afterwards so corners
    are filled too.
    """
    cfg = tiled.config
    if not 0 <= t < cfg.tiles:
        raise ValueError(f"tile index out of [0, {cfg.tiles}): {t}")
    if pad < 0:
        raise ValueError(f"pad radius must be >= 0, got {pad}")
    if pad > cfg.tile_height:
        raise ValueError(
            f"pad radius {pad} exceeds tile height {cfg.tile_height}; "
            "the border would span more than one neighbor tile"
        )
    tile = tiled.tiles[t]
    if pad == 0:
        return tile.copy()
    h0, wt = cfg.tile_height, cfg.widths[t]
    vert = np.empty((h0 + 2 * pad, wt, tiled.channels), dtype=np.float64)
    vert[pad : pad + h0] = tile
    first = t * h0
    last = (t + 1) * h0 - 1
    for m in range(1, pad + 1):
        vert[pad - m] = _border_row(tiled, first - m, wt)
        vert[pad + h0 - 1 + m] = _border_row(tiled, last + m, wt)
    cols = np.mod(np.arange(-pad, wt + pad), wt)
    return vert[:, cols]
