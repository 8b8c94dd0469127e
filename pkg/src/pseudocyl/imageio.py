"""8-bit image files, tiled-image directories and atomic output helpers."""

import json
import os
from pathlib import Path

import numpy as np
from PIL import Image

from .representation import PseudocylConfig, TiledImage, as_image

__all__ = [
    "read_image",
    "write_image",
    "to_uint8",
    "from_uint8",
    "write_bytes_atomic",
    "write_text_atomic",
    "write_json_atomic",
    "save_tiled",
    "load_tiled",
]

MANIFEST_NAME = "config.json"


def from_uint8(arr):
    """8-bit samples to floats in [0, 1] (value / 255)."""
    return np.asarray(arr, dtype=np.float64) / 255.0


def to_uint8(img):
    """Floats nominally in [0, 1] to rounded, clipped 8-bit samples."""
    return np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)


def read_image(path):
    """Load an image file as float64 (rows, cols, channels) in [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        arr = np.asarray(im)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return from_uint8(arr)


def write_image(path, img):
    """Write a float image as an 8-bit PNG (or format implied by suffix)."""
    img = as_image(img)
    if img.shape[2] not in (1, 3):
        raise ValueError(f"can only write 1- or 3-channel images, got {img.shape[2]}")
    data = to_uint8(img)
    if data.shape[2] == 1:
        pil = Image.fromarray(data[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(data, mode="RGB")
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        pil.save(tmp, format=_format_for(path))
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _format_for(path):
    suffix = path.suffix.lower()
    if suffix in ("", ".png"):
        return "PNG"
    return None  # let Pillow infer from the suffix


def write_bytes_atomic(path, data):
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def write_text_atomic(path, text):
    write_bytes_atomic(path, text.encode("utf-8"))


def write_json_atomic(path, obj):
    write_text_atomic(path, json.dumps(obj, indent=2) + "\n")


def save_tiled(directory, tiled):
    """Write one PNG per tile plus the config manifest into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_json_atomic(directory / MANIFEST_NAME, tiled.config.to_dict())
    for t, tile in enumerate(tiled.tiles):
        write_image(directory / f"tile_{t:03d}.png", tile)


def load_tiled(directory):
    """Read a tiled image written by :func:`save_tiled`."""
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    config = PseudocylConfig.load(manifest)
    tiles = [
        read_image(directory / f"tile_{t:03d}.png") for t in range(config.tiles)
    ]
    return TiledImage(config, tiles)
