"""Codecs and the per-tile rate estimation used to score width configurations.

The builtin codec is a deterministic 8x8 block-DCT coder: uniform scalar
quantization of the transform coefficients and exponential-Golomb code
lengths for the rate, so identical inputs always produce identical bits.
External codecs are shelled out through a command template and measured
by output file size.

The rate of a single tile is estimated context-aware: resample the whole
image to the tile's width, code the two sub-images whose intersection is
the tile and whose union is the full image, and charge the tile
bits(sub1) + bits(sub2) - bits(full).
"""

import hashlib
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dctn, idctn

from . import imageio
from .metrics import RdCurve, vmse
from .representation import TiledImage, as_image, resize_image_width, tiled_to_erp

__all__ = [
    "CodecError",
    "BuiltinCodec",
    "ExternalCodec",
    "CachingCodec",
    "make_codec",
    "builtin_encode",
    "external_encode",
    "TileRateReport",
    "tile_rate",
    "reconstruct_config",
    "rd_curve",
    "eg_code_length",
    "zigzag_order",
]

DEFAULT_QP_RANGE = (8, 14, 24, 40, 64)

_BLOCK = 8


class CodecError(RuntimeError):
    """An encode or decode step failed."""


def zigzag_order(n=_BLOCK):
    """Anti-diagonal scan order of an n x n coefficient block."""
    def key(ij):
        i, j = ij
        s = i + j
        return (s, i if s % 2 else j)

    return sorted(((i, j) for i in range(n) for j in range(n)), key=key)


def eg_code_length(values):
    """Exponential-Golomb code lengths of signed integers.

    Signed values map to unsigned as u = 2v - 1 for v > 0 and u = -2v
    otherwise; the code for u spends 2*floor(log2(u + 1)) + 1 bits.
    """
    v = np.asarray(values, dtype=np.int64)
    u = np.where(v > 0, 2 * v - 1, -2 * v)
    return (2 * np.floor(np.log2(u + 1.0)).astype(np.int64) + 1).astype(np.int64)


def _pad_to_blocks(img):
    rows, cols = img.shape[0], img.shape[1]
    pr = (-rows) % _BLOCK
    pc = (-cols) % _BLOCK
    if pr or pc:
        img = np.pad(img, ((0, pr), (0, pc), (0, 0)), mode="edge")
    return img


def _to_blocks(img):
    rows, cols, ch = img.shape
    by, bx = rows // _BLOCK, cols // _BLOCK
    blocks = img.reshape(by, _BLOCK, bx, _BLOCK, ch)
    return blocks.transpose(0, 2, 4, 1, 3)  # (by, bx, ch, 8, 8)


def _from_blocks(blocks, rows, cols):
    by, bx, ch = blocks.shape[:3]
    img = blocks.transpose(0, 3, 1, 4, 2).reshape(by * _BLOCK, bx * _BLOCK, ch)
    return img[:rows, :cols]


def builtin_encode(img, qp):
    """Deterministic block-DCT encode; returns (payload_bits, reconstruction).

    Samples are scaled to the 8-bit range, transformed per 8x8 block with
    an orthonormal DCT-II, quantized with uniform step ``qp`` and coded
    coefficient by coefficient with exponential-Golomb lengths. The
    reconstruction is the dequantized inverse transform clamped to [0, 1].
    """
    quantized, shape = _builtin_quantize(img, qp)
    bits = int(eg_code_length(quantized.reshape(-1)).sum())
    recon = idctn(quantized * float(qp), type=2, axes=(-2, -1), norm="ortho")
    recon = _from_blocks(recon, shape[0], shape[1]) / 255.0
    return bits, np.clip(recon, 0.0, 1.0)


def builtin_rate(img, qp):
    """Payload bits of :func:`builtin_encode` without the reconstruction."""
    quantized, _ = _builtin_quantize(img, qp)
    return int(eg_code_length(quantized.reshape(-1)).sum())


def _builtin_quantize(img, qp):
    qp = int(qp)
    if qp < 1:
        raise ValueError(f"qp must be >= 1, got {qp}")
    img = as_image(img)
    shape = img.shape
    blocks = _to_blocks(_pad_to_blocks(img)) * 255.0
    coeffs = dctn(blocks, type=2, axes=(-2, -1), norm="ortho")
    return np.rint(coeffs / qp).astype(np.int64), shape


class BuiltinCodec:
    """The deterministic block-DCT codec behind a common encode interface."""

    kind = "builtin"

    def __init__(self, qp_range=DEFAULT_QP_RANGE):
        self.qp_range = _check_qp_range(qp_range)

    def encode(self, img, qp):
        return builtin_encode(img, qp)

    def rate(self, img, qp):
        return builtin_rate(img, qp)


def _check_qp_range(qp_range):
    qps = tuple(int(q) for q in qp_range)
    if not qps:
        raise ValueError("qp_range must not be empty")
    if sorted(qps) != list(qps):
        raise ValueError(f"qp_range must be sorted: {qp_range}")
    return qps


class ExternalCodec:
    """Adapter for a command-line codec.

    ``command_template`` must contain the {input}, {output} and {qp}
    placeholders. The input is written as an 8-bit PNG, the command runs
    without a shell, the rate is the output file size times eight and the
    reconstruction is the output decoded as an image (so the tool must
    emit a Pillow-readable format; pick ``output_suffix`` accordingly).
    """

    kind = "external"

    def __init__(self, command_template, qp_range, output_suffix=".png"):
        for placeholder in ("{input}", "{output}", "{qp}"):
            if placeholder not in command_template:
                raise ValueError(
                    f"codec command template is missing {placeholder}: "
                    f"{command_template!r}"
                )
        self.command_template = command_template
        self.qp_range = _check_qp_range(qp_range)
        self.output_suffix = output_suffix

    def encode(self, img, qp):
        return external_encode(img, qp, self)

    def rate(self, img, qp):
        return self.encode(img, qp)[0]


def external_encode(img, qp, adapter):
    """Run one external encode; returns (bits, reconstruction)."""
    img = as_image(img)
    with tempfile.TemporaryDirectory(prefix="pseudocyl-codec-") as tmp:
        src = Path(tmp) / "input.png"
        dst = Path(tmp) / f"encoded{adapter.output_suffix}"
        imageio.write_image(src, img)
        cmd = adapter.command_template.format(input=src, output=dst, qp=qp)
        argv = shlex.split(cmd)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise CodecError(f"could not run {argv[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise CodecError(
                f"codec exited with {proc.returncode}: {cmd}\n"
                f"stdout: {proc.stdout.strip()}\nstderr: {proc.stderr.strip()}"
            )
        if not dst.exists():
            raise CodecError(f"codec produced no output file: {cmd}")
        bits = dst.stat().st_size * 8
        recon = imageio.read_image(dst)
        if recon.shape[2] != img.shape[2]:
            if recon.shape[2] == 3 and img.shape[2] == 1:
                recon = recon.mean(axis=2, keepdims=True)
            else:
                raise CodecError(
                    f"decoded image has {recon.shape[2]} channels, "
                    f"input had {img.shape[2]}"
                )
        if recon.shape != img.shape:
            raise CodecError(
                f"decoded image is {recon.shape[:2]}, input was {img.shape[:2]}"
            )
    return bits, recon


class CachingCodec:
    """Memoizes encode results by content hash; safe to share across threads.

    Width-configuration search re-encodes the same resampled tiles many
    times; identical (image bytes, qp) pairs hit the cache instead.
    """

    def __init__(self, inner):
        self.inner = inner
        self._rates = {}
        self._encodes = {}
        self._lock = threading.Lock()

    @property
    def kind(self):
        return self.inner.kind

    @property
    def qp_range(self):
        return self.inner.qp_range

    @staticmethod
    def _key(img, qp):
        digest = hashlib.blake2b(np.ascontiguousarray(img).tobytes(), digest_size=16)
        return img.shape, digest.digest(), int(qp)

    def encode(self, img, qp):
        key = self._key(img, qp)
        with self._lock:
            hit = self._encodes.get(key)
        if hit is None:
            hit = self.inner.encode(img, qp)
            with self._lock:
                self._encodes[key] = hit
                self._rates[key] = hit[0]
        return hit

    def rate(self, img, qp):
        key = self._key(img, qp)
        with self._lock:
            hit = self._rates.get(key)
        if hit is None:
            hit = self.inner.rate(img, qp)
            with self._lock:
                self._rates[key] = hit
        return hit


def make_codec(kind, command_template=None, qp_range=None, output_suffix=".png"):
    """Build a codec from CLI-style options."""
    if kind == "builtin":
        return BuiltinCodec(qp_range or DEFAULT_QP_RANGE)
    if kind == "external":
        if not command_template:
            raise ValueError("external codec needs a command template")
        if qp_range is None:
            raise ValueError("external codec needs an explicit qp range")
        return ExternalCodec(command_template, qp_range, output_suffix)
    raise ValueError(f"unknown codec kind {kind!r}")


@dataclass(frozen=True)
class TileRateReport:
    """Bits charged to one tile plus the three encodes behind the estimate."""

    tile_index: int
    bits: int
    sub1_bits: int
    sub2_bits: int
    full_bits: int

    @property
    def raw_bits(self):
        """Unclamped estimate; negative when codec overhead dominates."""
        return self.sub1_bits + self.sub2_bits - self.full_bits


def tile_rate(erp, config, t, codec, qp):
    """Context-aware rate estimate of tile ``t`` at quality ``qp``.

    The whole image is resampled to the tile's width; the two sub-images
    share the tile band and together cover everything, so their joint
    surplus over the full image is what the tile itself costs.
    """
    if not 0 <= t < config.tiles:
        raise ValueError(f"tile index out of [0, {config.tiles}): {t}")
    resized = _resized_for_tile(erp, config, t)
    h0 = config.tile_height
    sub1_bits = codec.rate(resized[: (t + 1) * h0], qp)
    sub2_bits = codec.rate(resized[t * h0 :], qp)
    full_bits = codec.rate(resized, qp)
    raw = sub1_bits + sub2_bits - full_bits
    return TileRateReport(
        tile_index=t,
        bits=max(0, raw),
        sub1_bits=sub1_bits,
        sub2_bits=sub2_bits,
        full_bits=full_bits,
    )


def _resized_for_tile(erp, config, t):
    img = as_image(erp)
    if img.shape[0] != config.height or img.shape[1] != config.width:
        raise ValueError(
            f"image is {img.shape[0]}x{img.shape[1]}, config expects "
            f"{config.height}x{config.width}"
        )
    return resize_image_width(img, config.widths[t])


def reconstruct_config(erp, config, codec, qp):
    """Code an image under one width configuration; returns (bits, recon ERP).

    Each tile's reconstruction is cut out of the coded full image at that
    tile's width, so distortion is measured in the same coding context
    that the rate estimate assumes. Total bits are the per-tile estimates
    summed.
    """
    img = as_image(erp)
    h0 = config.tile_height
    full = {}
    tiles = []
    total_bits = 0
    for t in range(config.tiles):
        w = config.widths[t]
        resized = _resized_for_tile(img, config, t)
        if w not in full:
            full[w] = codec.encode(resized, qp)
        full_bits, recon_full = full[w]
        tiles.append(recon_full[t * h0 : (t + 1) * h0])
        sub1_bits = codec.rate(resized[: (t + 1) * h0], qp)
        sub2_bits = codec.rate(resized[t * h0 :], qp)
        total_bits += max(0, sub1_bits + sub2_bits - full_bits)
    recon = tiled_to_erp(TiledImage(config, tiles))
    return total_bits, recon


def rd_curve(dataset, config, codec, threads=1):
    """Average rate-distortion curve of a dataset under one configuration.

    For every qp in the codec's range, bits per pixel and viewport MSE
    are averaged over the images coded at that qp.
    """
    images = [as_image(x) for x in dataset]
    if not images:
        raise ValueError("dataset must not be empty")
    pixels = config.height * config.width

    def one(idx_qp):
        idx, qp = idx_qp
        try:
            bits, recon = reconstruct_config(images[idx], config, codec, qp)
            return bits / pixels, vmse(images[idx], recon)
        except Exception as exc:
            raise CodecError(f"image #{idx} at qp={qp}: {exc}") from exc

    jobs = [(i, qp) for qp in codec.qp_range for i in range(len(images))]
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(jobs, pool.map(one, jobs)))
    else:
        results = {job: one(job) for job in jobs}

    points = []
    for qp in codec.qp_range:
        rows = [results[(i, qp)] for i in range(len(images))]
        points.append(
            (qp, float(np.mean([r[0] for r in rows])), float(np.mean([r[1] for r in rows])))
        )
    return RdCurve(points, "VMSE")
