"""Shared synthetic inputs for the test suite."""

import numpy as np


def cosine_texture(height, width, channels=3, seed=0, waves=8, fmax=8.0):
    """Smooth, detailed, deterministic texture in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    img = np.zeros((height, width, channels))
    for _ in range(waves):
        fy, fx = rng.uniform(0.5, fmax, 2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.2, 1.0)
        grating = amp * np.cos(2 * np.pi * (fy * yy / height + fx * xx / width) + phase)
        img += grating[:, :, None] * rng.uniform(0.3, 1.0, channels)
    img -= img.min()
    peak = img.max()
    if peak > 0:
        img /= peak
    return img


def quantized(img):
    """Snap samples to the 8-bit grid (k / 255) so PNG round trips exactly."""
    return np.rint(np.asarray(img) * 255.0) / 255.0


def random_tiled(config, channels=3, seed=0):
    from pseudocyl.representation import TiledImage

    rng = np.random.default_rng(seed)
    tiles = [
        rng.random((config.tile_height, w, channels)) for w in config.widths
    ]
    return TiledImage(config, tiles)
