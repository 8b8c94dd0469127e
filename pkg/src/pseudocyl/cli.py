"""Command-line drivers for conversion, search, metrics and demos.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors
(including missing input files). All outputs are plain files written via
temp-and-rename; nothing mutates its inputs. Temporary codec files honor
TMPDIR.
"""

import argparse
import math
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import imageio
from .codec import CodecError, make_codec, rd_curve
from .metrics import RdCurve, bd_metrics, vmse, vpsnr, vssim
from .optimizer import SearchSpace, exhaustive_optimize, greedy_optimize
from .pconv import ConvKernel, pconv_fast, pconv_reference, standard_conv
from .representation import (
    PseudocylConfig,
    TiledImage,
    erp_to_tiled,
    sinusoidal_config,
    tiled_to_erp,
)
from .viewport import ViewportSpec, canonical_viewports, embed_viewport, extract_viewport


class UsageError(Exception):
    """Bad invocation (missing files, malformed flags); exits with 2."""


def _existing(path, what):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _parse_qps(text):
    try:
        qps = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise UsageError(f"bad qp list {text!r}: {exc}") from exc
    if not qps:
        raise UsageError("qp list is empty")
    return qps


def _load_codec(args):
    qps = _parse_qps(args.qps) if args.qps else None
    try:
        return make_codec(
            args.codec,
            command_template=args.codec_cmd,
            qp_range=qps,
            output_suffix=args.codec_suffix,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_dataset(directory):
    root = _existing(directory, "dataset directory")
    paths = sorted(
        p for p in root.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        raise UsageError(f"no images (*.png, *.jpg) in {root}")
    return [imageio.read_image(p) for p in paths], paths


def _add_codec_flags(parser):
    parser.add_argument("--codec", choices=("builtin", "external"), default="builtin")
    parser.add_argument(
        "--codec-cmd",
        default=None,
        help="external command template with {input}, {output} and {qp}",
    )
    parser.add_argument(
        "--codec-suffix",
        default=".png",
        help="suffix of the external codec's output file (default .png)",
    )
    parser.add_argument("--qps", default=None, help="comma-separated qp list")
    parser.add_argument("--threads", type=int, default=1, help="worker thread cap")


def cmd_convert(args):
    if args.direction == "to-tiled":
        image = imageio.read_image(_existing(args.image, "input image"))
        config = PseudocylConfig.load(_existing(args.config, "config file"))
        out = Path(args.out)
        imageio.save_tiled(out, erp_to_tiled(image, config))
        print(f"wrote {config.tiles} tiles to {out}")
    else:
        tiled = imageio.load_tiled(_existing(args.tiles, "tiled directory"))
        imageio.write_image(args.out, tiled_to_erp(tiled))
        print(f"wrote {args.out}")
    return 0


def cmd_optimize(args):
    dataset, paths = _load_dataset(args.dataset)
    height, width = dataset[0].shape[0], dataset[0].shape[1]
    for img, path in zip(dataset, paths):
        if img.shape[:2] != (height, width):
            raise UsageError(f"{path} is {img.shape[:2]}, expected {(height, width)}")
    codec = _load_codec(args)
    space = SearchSpace(height, width, args.tiles, args.levels)
    if args.exhaustive:
        widths, scored = exhaustive_optimize(
            dataset, space, codec, cap=args.cap, threads=args.threads
        )
        log = [
            {"widths": list(w), "bd_rate_vs_anchor": bd}
            for w, _, bd in scored
        ]
    else:
        widths, search_log = greedy_optimize(dataset, space, codec, threads=args.threads)
        log = search_log.to_jsonable()
    config = space.config(widths)
    imageio.write_json_atomic(args.out_config, config.to_dict())
    if args.out_log:
        imageio.write_json_atomic(args.out_log, log)
    print(f"optimized widths: {list(widths)}")
    print(f"wrote {args.out_config}" + (f" and {args.out_log}" if args.out_log else ""))
    return 0


def cmd_rd(args):
    dataset, _ = _load_dataset(args.dataset)
    config = PseudocylConfig.load(_existing(args.config, "config file"))
    codec = _load_codec(args)
    curve = rd_curve(dataset, config, codec, threads=args.threads)
    curve.save_csv(args.out)
    for p in curve.points:
        print(f"qp={p.qp} bpp={p.bpp:.6f} vmse={p.distortion:.8f}")
    print(f"wrote {args.out}")
    return 0


def cmd_bd(args):
    anchor = RdCurve.load_csv(_existing(args.anchor, "anchor curve"))
    test = RdCurve.load_csv(_existing(args.test, "test curve"))
    bd_rate, bd_dist = bd_metrics(anchor, test)
    print(f"BD-rate: {bd_rate:+.2f}%")
    print(f"BD-distortion: {bd_dist:+.6f}")
    return 0


def cmd_viewports(args):
    if args.tiles:
        source = imageio.load_tiled(_existing(args.tiles, "tiled directory"))
        height, width = source.config.height, source.config.width
    else:
        source = imageio.read_image(_existing(args.image, "input image"))
        height, width = source.shape[0], source.shape[1]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, spec in enumerate(canonical_viewports(height, width)):
        lat = round(math.degrees(spec.center_lat))
        lon = round(math.degrees(spec.center_lon))
        name = f"viewport_{idx:02d}_lat{lat:+04d}_lon{lon:+04d}.png"
        imageio.write_image(out / name, extract_viewport(source, spec))
    print(f"wrote 14 viewports to {out}")
    return 0


def cmd_metrics(args):
    ref = imageio.read_image(_existing(args.reference, "reference image"))
    test = imageio.read_image(_existing(args.test, "test image"))
    print(
        f"VMSE={vmse(ref, test):.8f} "
        f"VPSNR={vpsnr(ref, test):.4f} "
        f"VSSIM={vssim(ref, test):.6f}"
    )
    return 0


def _demo_tiled(height, width, tile_height, channels, seed):
    rng = np.random.default_rng(seed)
    config = sinusoidal_config(height, width, tile_height)
    tiles = [
        rng.random((tile_height, w, channels)) for w in config.widths
    ]
    return TiledImage(config, tiles)


def cmd_conv_demo(args):
    if args.kernel:
        kernel = ConvKernel.load(_existing(args.kernel, "kernel file"))
    else:
        kernel = ConvKernel.random(args.radius, args.channels, args.channels, args.seed)
    if kernel.in_channels != args.channels:
        raise UsageError(
            f"kernel expects {kernel.in_channels} channels, input has {args.channels}"
        )
    tiled = _demo_tiled(args.height, args.width, args.tile_height, args.channels, args.seed)
    fast = pconv_fast(tiled, kernel)
    reference = pconv_reference(tiled, kernel, mode="approx")
    diff = max(
        float(np.max(np.abs(a - b))) for a, b in zip(fast.tiles, reference.tiles)
    )
    print(f"max |fast - reference| = {diff:.3e}")

    total = sum(t.shape[0] * t.shape[1] for t in tiled.tiles)
    rows = max(1, round(total / args.width))
    rng = np.random.default_rng(args.seed + 1)
    plane = rng.random((rows, args.width, args.channels))

    def med(fn):
        times = []
        for _ in range(args.runs):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return statistics.median(times)

    t_fast = med(lambda: pconv_fast(tiled, kernel))
    t_std = med(lambda: standard_conv(plane, kernel, padding="zero"))
    t_ref = med(lambda: pconv_reference(tiled, kernel, mode="approx"))
    print(f"timings, median of {args.runs} runs:")
    print(f"  padded tiled convolution   {t_fast * 1e3:9.2f} ms")
    print(f"  standard conv, same pixels {t_std * 1e3:9.2f} ms")
    print(f"  per-neighbor reference     {t_ref * 1e3:9.2f} ms")
    print(f"  fast/standard ratio        {t_fast / t_std:9.3f}")
    return 0


def _demo_patch(height, width, channels, seed):
    rng = np.random.default_rng(seed)
    rows = np.arange(height)[:, None, None]
    cols = np.arange(width)[None, :, None]
    patch = 0.5 + 0.5 * np.sin(rows * 0.7 + cols * 1.3)
    patch = np.broadcast_to(patch, (height, width, channels)).copy()
    patch += 0.25 * rng.random((height, width, channels))
    return np.clip(patch, 0.0, 1.0)


def cmd_oversample_demo(args):
    height, width = args.height, args.width
    vh, vw = -(-height // 3), -(-width // 4)
    if args.patch:
        patch = imageio.read_image(_existing(args.patch, "patch image"))
        if patch.shape[:2] != (vh, vw):
            raise UsageError(f"patch must be {vh}x{vw} for a {height}x{width} canvas")
    else:
        patch = _demo_patch(vh, vw, 3, args.seed)
    codec = make_codec("builtin")
    rows = []
    for lat in (-np.pi / 3, 0.0, np.pi / 3):
        spec = ViewportSpec(lat, 0.0, np.pi / 3, np.pi / 2, vh, vw)
        canvas = embed_viewport(np.zeros((height, width, patch.shape[2])), patch, spec)
        bits, _ = codec.encode(canvas, args.qp)
        rows.append((lat, bits))
        print(f"theta={math.degrees(lat):+7.2f} deg  bytes={bits / 8:10.1f}")
    if args.out:
        lines = ["theta_rad,bytes"] + [f"{lat!r},{bits / 8!r}" for lat, bits in rows]
        imageio.write_text_atomic(args.out, "\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pseudocyl",
        description="Width-parameterized spherical raster toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between ERP and tiled form")
    p.add_argument("direction", choices=("to-tiled", "to-erp"))
    p.add_argument("--image", help="ERP image (to-tiled)")
    p.add_argument("--config", help="config JSON (to-tiled)")
    p.add_argument("--tiles", help="tiled directory (to-erp)")
    p.add_argument("--out", required=True, help="output directory or image path")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("optimize", help="search the width configuration")
    p.add_argument("--dataset", required=True, help="directory of ERP images")
    p.add_argument("--tiles", type=int, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--cap", type=int, default=10000)
    p.add_argument("--out-config", required=True)
    p.add_argument("--out-log", default=None)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("rd", help="rate-distortion curve of one configuration")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    _add_codec_flags(p)
    p.set_defaults(func=cmd_rd)

    p = sub.add_parser("bd", help="Bjontegaard deltas between two RD CSVs")
    p.add_argument("anchor")
    p.add_argument("test")
    p.set_defaults(func=cmd_bd)

    p = sub.add_parser("viewports", help="extract the 14 canonical viewports")
    p.add_argument("--image", help="ERP image source")
    p.add_argument("--tiles", help="tiled directory source")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_viewports)

    p = sub.add_parser("metrics", help="viewport metrics between two ERP images")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("conv-demo", help="fast vs reference convolution check")
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--tile-height", type=int, default=16)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--kernel", default=None, help="kernel JSON file")
    p.add_argument("--radius", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=5)
    p.set_defaults(func=cmd_conv_demo)

    p = sub.add_parser(
        "oversample-demo",
        help="bits of the same patch embedded at three latitudes",
    )
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--qp", type=int, default=24)
    p.add_argument("--patch", default=None, help="patch image (ceil(H/3) x ceil(W/4))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV output")
    p.set_defaults(func=cmd_oversample_demo)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "convert":
        if args.direction == "to-tiled" and not (args.image and args.config):
            parser.error("convert to-tiled needs --image and --config")
        if args.direction == "to-erp" and not args.tiles:
            parser.error("convert to-erp needs --tiles")
    if args.command == "viewports" and bool(args.image) == bool(args.tiles):
        parser.error("viewports needs exactly one of --image or --tiles")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CodecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
