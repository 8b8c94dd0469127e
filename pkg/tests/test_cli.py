import json

import numpy as np
import pytest

from helpers import cosine_texture
from pseudocyl import imageio
from pseudocyl.cli import main
from pseudocyl.metrics import RdCurve
from pseudocyl.representation import PseudocylConfig, sinusoidal_config


@pytest.fixture
def erp_png(tmp_path):
    path = tmp_path / "erp.png"
    imageio.write_image(path, cosine_texture(64, 128, seed=100))
    return path


@pytest.fixture
def dataset_dir(tmp_path):
    root = tmp_path / "dataset"
    root.mkdir()
    for i in range(2):
        imageio.write_image(root / f"img_{i}.png", cosine_texture(32, 64, seed=110 + i))
    return root


def write_config(tmp_path, config):
    path = tmp_path / "config.json"
    config.save(path)
    return path


def test_convert_round_trip_uniform(tmp_path, erp_png):
    cfg = PseudocylConfig(64, 128, 16, (128,) * 4)
    cfg_path = write_config(tmp_path, cfg)
    tiles_dir = tmp_path / "tiles"
    assert main(["convert", "to-tiled", "--image", str(erp_png),
                 "--config", str(cfg_path), "--out", str(tiles_dir)]) == 0
    assert (tiles_dir / "config.json").exists()
    assert len(list(tiles_dir.glob("tile_*.png"))) == 4
    back = tmp_path / "back.png"
    assert main(["convert", "to-erp", "--tiles", str(tiles_dir), "--out", str(back)]) == 0
    original = imageio.read_image(erp_png)
    restored = imageio.read_image(back)
    assert np.array_equal(original, restored)


def test_convert_sixteen_tiles_at_paper_size(tmp_path):
    erp = tmp_path / "big.png"
    imageio.write_image(erp, cosine_texture(512, 1024, seed=120, waves=4))
    cfg_path = write_config(tmp_path, sinusoidal_config(512, 1024, 32))
    out = tmp_path / "tiles512"
    assert main(["convert", "to-tiled", "--image", str(erp),
                 "--config", str(cfg_path), "--out", str(out)]) == 0
    tiles = sorted(out.glob("tile_*.png"))
    assert len(tiles) == 16
    manifest = json.loads((out / "config.json").read_text())
    assert manifest["tile_height"] == 32


def test_convert_missing_config_exits_2(tmp_path, erp_png):
    code = main(["convert", "to-tiled", "--image", str(erp_png),
                 "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "t")])
    assert code == 2


def test_metrics_line(tmp_path, capsys):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    img = cosine_texture(48, 96, seed=130)
    imageio.write_image(a, img)
    imageio.write_image(b, np.clip(img + 0.02, 0, 1))
    assert main(["metrics", str(a), str(b)]) == 0
    out = capsys.readouterr().out
    assert "VMSE=" in out and "VPSNR=" in out and "VSSIM=" in out


def test_rd_and_bd_round_trip(tmp_path, dataset_dir, capsys):
    cfg_path = write_config(tmp_path, sinusoidal_config(32, 64, 8))
    csv_path = tmp_path / "curve.csv"
    code = main(["rd", "--dataset", str(dataset_dir), "--config", str(cfg_path),
                 "--qps", "4,8,16,32", "--out", str(csv_path)])
    assert code == 0
    curve = RdCurve.load_csv(csv_path)
    assert len(curve.points) == 4
    capsys.readouterr()
    assert main(["bd", str(csv_path), str(csv_path)]) == 0
    out = capsys.readouterr().out
    assert "BD-rate: +0.00%" in out


def test_bd_missing_file_exits_2(tmp_path):
    assert main(["bd", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == 2


def test_viewports_writes_14_files(tmp_path, erp_png):
    out = tmp_path / "views"
    assert main(["viewports", "--image", str(erp_png), "--out", str(out)]) == 0
    files = sorted(out.glob("viewport_*.png"))
    assert len(files) == 14
    sample = imageio.read_image(files[0])
    assert sample.shape[:2] == (22, 32)  # ceil(64/3) x ceil(128/4)


def test_viewports_needs_exactly_one_source(tmp_path, erp_png, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["viewports", "--image", str(erp_png), "--tiles", "x", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_optimize_emits_config_and_log(tmp_path, dataset_dir):
    out_cfg = tmp_path / "opt.json"
    out_log = tmp_path / "log.json"
    code = main([
        "optimize", "--dataset", str(dataset_dir), "--tiles", "4", "--levels", "2",
        "--qps", "4,8,16,32", "--out-config", str(out_cfg), "--out-log", str(out_log),
    ])
    assert code == 0
    config = PseudocylConfig.load(out_cfg)
    assert config.tiles == 4
    assert config.is_symmetric()
    log = json.loads(out_log.read_text())
    assert all({"tile", "width", "curve", "bd_rate_vs_incumbent", "accepted"} == set(e) for e in log)


def test_optimize_exhaustive_path(tmp_path, dataset_dir):
    out_cfg = tmp_path / "opt_ex.json"
    out_log = tmp_path / "log_ex.json"
    code = main([
        "optimize", "--dataset", str(dataset_dir), "--tiles", "4", "--levels", "2",
        "--exhaustive", "--qps", "4,8,16,32",
        "--out-config", str(out_cfg), "--out-log", str(out_log),
    ])
    assert code == 0
    log = json.loads(out_log.read_text())
    assert len(log) == 2  # nondecreasing singletons over 2 levels


def test_conv_demo_reports_tiny_diff(capsys):
    # sixteen-tile input
    assert main(["conv-demo", "--height", "128", "--width", "256",
                 "--tile-height", "8", "--runs", "1"]) == 0
    out = capsys.readouterr().out
    diff = float(out.splitlines()[0].split("=")[1])
    assert diff <= 1e-10
    assert "fast/standard ratio" in out


def test_conv_demo_consumes_kernel_file(tmp_path, capsys):
    from pseudocyl.pconv import ConvKernel

    kernel_path = tmp_path / "kernel.json"
    ConvKernel.random(1, 3, 3, seed=7).save(kernel_path)
    assert main(["conv-demo", "--height", "32", "--width", "64", "--tile-height", "8",
                 "--kernel", str(kernel_path), "--runs", "1"]) == 0
    out = capsys.readouterr().out
    assert float(out.splitlines()[0].split("=")[1]) <= 1e-10


def test_rd_threads_flag(tmp_path, dataset_dir):
    cfg_path = write_config(tmp_path, sinusoidal_config(32, 64, 8))
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out, threads in ((a, "1"), (b, "2")):
        assert main(["rd", "--dataset", str(dataset_dir), "--config", str(cfg_path),
                     "--qps", "8,16", "--threads", threads, "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_viewports_from_tiled_directory(tmp_path, erp_png):
    cfg_path = write_config(tmp_path, sinusoidal_config(64, 128, 16))
    tiles_dir = tmp_path / "tiles"
    assert main(["convert", "to-tiled", "--image", str(erp_png),
                 "--config", str(cfg_path), "--out", str(tiles_dir)]) == 0
    out = tmp_path / "views_tiled"
    assert main(["viewports", "--tiles", str(tiles_dir), "--out", str(out)]) == 0
    assert len(list(out.glob("viewport_*.png"))) == 14


def test_oversample_demo_direction(tmp_path, capsys):
    csv_path = tmp_path / "bytes.csv"
    assert main(["oversample-demo", "--height", "96", "--width", "192",
                 "--qp", "16", "--out", str(csv_path)]) == 0
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines() if line.startswith("theta=")]
    assert len(rows) == 3
    sizes = {}
    for line in rows:
        deg = float(line.split("deg")[0].split("=")[1])
        sizes[round(deg)] = float(line.split("bytes=")[1])
    assert sizes[60] > sizes[0]
    assert sizes[-60] > sizes[0]
    assert csv_path.exists()


def test_dataset_dir_empty_exits_2(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["rd", "--dataset", str(empty), "--config", "x", "--out", "y"])
    assert code == 2


def test_external_codec_flags(tmp_path, dataset_dir):
    import sys

    script = tmp_path / "copy.py"
    script.write_text(
        "import shutil, sys\n"
        "args = dict(a.split('=', 1) for a in sys.argv[1:])\n"
        "shutil.copyfile(args['in'], args['out'])\n"
    )
    cfg_path = write_config(tmp_path, PseudocylConfig(32, 64, 8, (64,) * 4))
    out_csv = tmp_path / "ext.csv"
    code = main([
        "rd", "--dataset", str(dataset_dir), "--config", str(cfg_path),
        "--codec", "external",
        "--codec-cmd", f"{sys.executable} {script} in={{input}} out={{output}} qp={{qp}}",
        "--qps", "1,2,3,4", "--out", str(out_csv),
    ])
    assert code == 0
    curve = RdCurve.load_csv(out_csv)
    assert all(p.distortion == 0.0 for p in curve.points)
