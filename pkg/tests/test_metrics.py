import math

import numpy as np
import pytest

from helpers import cosine_texture
from pseudocyl.metrics import (
    CurveOverlapError,
    RdCurve,
    bd_distortion,
    bd_metrics,
    bd_rate,
    mse,
    psnr,
    ssim,
    vmse,
    vpsnr,
    vssim,
    vssim_loss,
)
from pseudocyl.viewport import canonical_viewports, extract_viewport


# --- mse / psnr ---------------------------------------------------------------


def test_mse_psnr_basics():
    a = cosine_texture(16, 16, seed=40)
    assert mse(a, a) == 0.0
    assert psnr(a, a) == math.inf
    zeros = np.zeros((8, 8, 1))
    ones = np.ones((8, 8, 1))
    assert mse(zeros, ones) == 1.0
    assert psnr(zeros, ones) == pytest.approx(0.0)
    halves = np.full((8, 8, 1), 0.5)
    assert mse(zeros, halves) == pytest.approx(0.25)
    assert psnr(zeros, halves) == pytest.approx(6.0206, abs=1e-4)


def test_metric_shape_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros((4, 4, 1)), np.zeros((4, 5, 1)))


# --- ssim ----------------------------------------------------------------------


def gaussian_window():
    x = np.arange(11, dtype=np.float64) - 5
    taps = np.exp(-(x * x) / (2 * 1.5 * 1.5))
    taps /= taps.sum()
    return np.outer(taps, taps)


def ssim_loop_oracle(a, b):
    """Direct windowed summation over every complete 11x11 window."""
    win = gaussian_window()
    c1 = 0.01 ** 2
    c2 = 0.03 ** 2
    per_channel = []
    for c in range(a.shape[2]):
        x, y = a[:, :, c], b[:, :, c]
        vals = []
        for r in range(a.shape[0] - 10):
            for q in range(a.shape[1] - 10):
                wx = x[r : r + 11, q : q + 11]
                wy = y[r : r + 11, q : q + 11]
                mx = (win * wx).sum()
                my = (win * wy).sum()
                sx = (win * wx * wx).sum() - mx * mx
                sy = (win * wy * wy).sum() - my * my
                sxy = (win * wx * wy).sum() - mx * my
                vals.append(
                    ((2 * mx * my + c1) * (2 * sxy + c2))
                    / ((mx * mx + my * my + c1) * (sx + sy + c2))
                )
        per_channel.append(np.mean(vals))
    return float(np.mean(per_channel))


def test_ssim_identical_is_one():
    img = cosine_texture(16, 20, seed=41)
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_loop_oracle():
    a = cosine_texture(16, 16, seed=42)
    b = np.clip(a + 0.1 * cosine_texture(16, 16, seed=43) - 0.05, 0, 1)
    assert ssim(a, b) == pytest.approx(ssim_loop_oracle(a, b), abs=1e-10)


def test_ssim_symmetric_and_below_one_for_negative():
    a = cosine_texture(16, 16, seed=44)
    b = 1.0 - a
    s1 = ssim(a, b)
    s2 = ssim(b, a)
    assert s1 == pytest.approx(s2, abs=1e-12)
    assert s1 < 1.0


def test_ssim_too_small_raises():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 16, 1)), np.zeros((10, 16, 1)))


# --- viewport metrics -----------------------------------------------------------


def test_viewport_metrics_identical():
    img = cosine_texture(48, 96, seed=45)
    assert vmse(img, img) == 0.0
    assert vpsnr(img, img) == math.inf
    assert vssim(img, img) == pytest.approx(1.0, abs=1e-12)
    assert vssim_loss(img, img) == pytest.approx(0.0, abs=1e-12)


def test_vmse_constant_offset_is_exact():
    img = cosine_texture(48, 96, seed=46) * 0.8
    assert vmse(img, img + 0.1) == pytest.approx(0.01, abs=1e-12)


def test_vmse_is_mean_of_per_viewport_mse():
    ref = cosine_texture(48, 96, seed=47)
    test = np.clip(ref + 0.05 * cosine_texture(48, 96, seed=48) - 0.02, 0, 1)
    specs = canonical_viewports(48, 96)
    per = [mse(extract_viewport(ref, s), extract_viewport(test, s)) for s in specs]
    assert vmse(ref, test) == pytest.approx(float(np.mean(per)), abs=1e-15)
    per_ssim = [ssim(extract_viewport(ref, s), extract_viewport(test, s)) for s in specs]
    assert vssim(ref, test) == pytest.approx(float(np.mean(per_ssim)), abs=1e-15)


def test_rotation_invariance_of_non_pole_viewports():
    # a quarter-turn of both inputs permutes the twelve equator and
    # mid-latitude viewports exactly; the two pole viewports only rotate
    # in plane, so the aggregate matches to content smoothness
    w = 96
    ref = cosine_texture(48, w, seed=49, waves=5, fmax=4.0)
    test = np.clip(ref + 0.03 * cosine_texture(48, w, seed=50) - 0.015, 0, 1)
    r_ref = np.roll(ref, w // 4, axis=1)
    r_test = np.roll(test, w // 4, axis=1)
    specs = canonical_viewports(48, w)
    base = {}
    rolled = {}
    for spec in specs:
        # centers are multiples of pi/4; integer keys avoid wrap rounding
        key = (round(spec.center_lat / (np.pi / 4)), round(spec.center_lon / (np.pi / 4)) % 8)
        base[key] = mse(extract_viewport(ref, spec), extract_viewport(test, spec))
        rolled[key] = mse(extract_viewport(r_ref, spec), extract_viewport(r_test, spec))
    for (lat, lon), value in base.items():
        if abs(lat) == 2:  # pole viewports
            continue
        assert rolled[(lat, (lon + 2) % 8)] == pytest.approx(value, rel=1e-9, abs=1e-12)
    # aggregate invariance holds approximately (pole frusta rotate in plane)
    assert vmse(r_ref, r_test) == pytest.approx(vmse(ref, test), rel=0.05)


def test_vssim_in_bounds():
    ref = cosine_texture(48, 96, seed=51)
    test = 1.0 - ref
    val = vssim(ref, test)
    assert -1.0 <= val <= 1.0


# --- Bjontegaard ----------------------------------------------------------------


def _psnr_curve(rates, dists, qps=None):
    qps = qps or range(1, len(rates) + 1)
    return RdCurve(list(zip(qps, rates, dists)), "VPSNR")


def test_bd_identical_curves_zero():
    curve = _psnr_curve([0.2, 0.4, 0.8, 1.6], [30.0, 33.5, 36.0, 39.0])
    rate, dist = bd_metrics(curve, curve)
    assert abs(rate) < 1e-9
    assert abs(dist) < 1e-9


def test_bd_doubled_rates():
    anchor = _psnr_curve([0.2, 0.4, 0.8, 1.6], [30.0, 33.5, 36.0, 39.0])
    test = _psnr_curve([0.4, 0.8, 1.6, 3.2], [30.0, 33.5, 36.0, 39.0])
    rate, dist = bd_metrics(anchor, test)
    assert rate == pytest.approx(100.0, abs=1e-6)
    assert dist < 0  # same quality for twice the bits scores worse at equal rate


def test_bd_one_db_offset():
    anchor = _psnr_curve([0.2, 0.4, 0.8, 1.6], [30.0, 33.5, 36.0, 39.0])
    test = _psnr_curve([0.2, 0.4, 0.8, 1.6], [31.0, 34.5, 37.0, 40.0])
    rate, dist = bd_metrics(anchor, test)
    assert dist == pytest.approx(1.0, abs=1e-6)
    assert rate < 0  # better quality at equal rates saves bits


def test_bd_antisymmetry_of_distortion():
    a = _psnr_curve([0.21, 0.45, 0.83, 1.62], [30.0, 33.1, 36.4, 38.8])
    b = _psnr_curve([0.25, 0.52, 0.9, 1.8], [30.5, 33.9, 36.8, 39.5])
    d_ab = bd_distortion(a, b)
    d_ba = bd_distortion(b, a)
    assert d_ab == pytest.approx(-d_ba, rel=0.01)


def test_bd_requires_four_points():
    short = RdCurve([(1, 0.2, 30.0), (2, 0.4, 33.0), (3, 0.8, 36.0)], "VPSNR")
    full = _psnr_curve([0.2, 0.4, 0.8, 1.6], [30.0, 33.0, 36.0, 39.0])
    with pytest.raises(ValueError):
        bd_metrics(short, full)


def test_bd_disjoint_ranges():
    a = _psnr_curve([0.2, 0.4, 0.8, 1.6], [20.0, 22.0, 24.0, 26.0])
    b = _psnr_curve([0.2, 0.4, 0.8, 1.6], [30.0, 32.0, 34.0, 36.0])
    with pytest.raises(CurveOverlapError):
        bd_rate(a, b)


# --- RdCurve -------------------------------------------------------------------


def test_rd_curve_validation_and_sorting():
    curve = RdCurve([(2, 0.8, 30.0), (1, 0.2, 20.0)], "VMSE")
    assert [p.bpp for p in curve.points] == [0.2, 0.8]
    with pytest.raises(ValueError):
        RdCurve([(1, 0.2, 20.0)], "VMSE")
    with pytest.raises(ValueError):
        RdCurve([(1, 0.0, 20.0), (2, 0.5, 10.0)], "VMSE")


def test_rd_curve_csv_round_trip(tmp_path):
    curve = RdCurve([(1, 0.25, 1e-4), (2, 0.5, 5e-5), (3, 1.0, 2e-5)], "VMSE")
    path = tmp_path / "curve.csv"
    curve.save_csv(path)
    text = path.read_text().splitlines()
    assert text[0] == "qp,bpp,distortion"
    back = RdCurve.load_csv(path)
    assert back.points == curve.points
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        RdCurve.load_csv(bad)
