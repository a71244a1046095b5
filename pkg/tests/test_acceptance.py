"""Acceptance criteria, each checked at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import random_camera, random_points, random_projector
from phasesampling import io
from phasesampling.cli import main
from phasesampling.geometry import (
    Correspondences,
    project_camera,
    project_projector,
    solve_camera,
    solve_projector,
    triangulate,
    triangulation_system,
)
from phasesampling.recovery import reconstruct_sinc, recover_frequency, recover_spline, recovery_error
from phasesampling.signal import PatternConfig, SampledSignal, Scene, extract_columns, generate_pattern
from phasesampling.simkit import ExperimentSpec, dense_truth, run_experiment

F0 = 1 / 32
I0 = 1.0
NYQUIST_OK_TS = (2, 4, 8, 14, 16)


@pytest.fixture(autouse=True)
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is None:
        yield None
        return
    number, title = marker.args
    request.node.user_properties.append(("criterion", number))
    request.node.user_properties.append(("title", title))

    def measured(text: str) -> None:
        request.node.user_properties.append(("measured", text))

    yield measured


def _carrier_run(height: int, ts: int):
    """Samples and dense truth of a flat-scene complex carrier."""
    cfg = PatternConfig(height=height, width=1, ts=ts, f0=F0, amplitude=I0)
    s = extract_columns(generate_pattern(cfg))
    return s, dense_truth(cfg, Scene.identity(height, 1))


@pytest.mark.criterion(1, "perfect recovery above Nyquist, max error < 1e-9 I_0")
def test_criterion_1_perfect_recovery(criterion):
    worst = 0.0
    for ts in NYQUIST_OK_TS:
        s, truth = _carrier_run(448, ts)
        _, mx = recovery_error(recover_frequency(s), truth)
        worst = max(worst, mx)
    criterion(f"worst max error {worst:.3g} over T_s={list(NYQUIST_OK_TS)}")
    assert worst < 1e-9 * I0


@pytest.mark.criterion(2, "Nyquist failure detected, max error > 1e-2 I_0")
def test_criterion_2_nyquist_failure(criterion):
    # 448 is not a multiple of 17; 544 = 17 * 32 keeps the same carrier leakage-free
    runs = {17: 544, 32: 448, 64: 448}
    errs = {}
    for ts, height in runs.items():
        assert 2 * np.pi / ts < 2 * (2 * np.pi * F0)  # really below Nyquist
        s, truth = _carrier_run(height, ts)
        errs[ts] = recovery_error(recover_frequency(s), truth)[1]
    criterion(", ".join(f"T_s={k}: {v:.3g}" for k, v in errs.items()))
    assert min(errs.values()) > 1e-2 * I0


@pytest.mark.criterion(3, "spline > 100x frequency error; frequency ~0, spline > 0")
def test_criterion_3_method_ordering(criterion):
    ratios = []
    for ts in NYQUIST_OK_TS:
        s, truth = _carrier_run(448, ts)
        freq = recovery_error(recover_frequency(s), truth)[0]
        spline = recovery_error(recover_spline(s), truth)[0]
        assert freq < 1e-9 * I0
        assert spline > 0
        assert spline > 100 * freq
        ratios.append((ts, spline, freq))
    criterion("; ".join(f"T_s={t}: spline {a:.2g} vs freq {b:.2g}" for t, a, b in ratios))


@pytest.mark.criterion(4, "sinc series and frequency path agree within 1e-6 on 100 signals")
def test_criterion_4_cross_oracle(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        ts = int(rng.choice([2, 3, 4, 5, 6, 8]))
        m = int(rng.integers(8, 40))
        n = ts * m
        k = np.fft.fftfreq(n, d=1 / n)  # exact integer bin indices
        inside = np.abs(k) < n / (2 * ts)  # strictly inside |w| < w_s / 2
        coef = np.where(inside, rng.normal(size=n) + 1j * rng.normal(size=n), 0)
        dense = np.fft.ifft(coef)
        s = SampledSignal(dense[::ts], ts, n)
        diff = np.max(np.abs(reconstruct_sinc(s).values - recover_frequency(s).values))
        worst = max(worst, diff)
    criterion(f"worst max abs difference {worst:.3g}")
    assert worst < 1e-6


@pytest.mark.criterion(5, "calibration exactness: params < 1e-9 relative, residual < 1e-10")
def test_criterion_5_calibration(criterion):
    rng = np.random.default_rng(99)
    worst_rel = worst_res = 0.0
    for _ in range(100):
        tc, tp = random_camera(rng), random_projector(rng)
        world = random_points(rng, 20)
        c = Correspondences(world, project_camera(tc, world), project_projector(tp, world))
        est_c, res_c = solve_camera(c)
        est_p, res_p = solve_projector(c)
        rel_c = np.max(np.abs(est_c.theta - tc.theta)) / np.max(np.abs(tc.theta))
        rel_p = np.max(np.abs(est_p.theta - tp.theta)) / np.max(np.abs(tp.theta))
        worst_rel = max(worst_rel, rel_c, rel_p)
        worst_res = max(worst_res, res_c, res_p)
    criterion(f"worst relative error {worst_rel:.3g}, worst residual {worst_res:.3g}")
    assert worst_rel < 1e-9
    assert worst_res < 1e-10


@pytest.mark.criterion(6, "triangulation round trip < 1e-8 per coordinate (1000 triples, cond < 1e6)")
def test_criterion_6_round_trip(criterion):
    rng = np.random.default_rng(6)
    accepted = 0
    worst = 0.0
    while accepted < 1000:
        tc, tp = random_camera(rng), random_projector(rng)
        p = random_points(rng, 1)[0]
        x, y = project_camera(tc, p)
        yp = project_projector(tp, p)
        h, _ = triangulation_system(tc, tp, x, y, yp)
        if np.linalg.cond(h) >= 1e6:
            continue
        accepted += 1
        worst = max(worst, float(np.max(np.abs(triangulate(tc, tp, x, y, yp) - p))))
    criterion(f"worst coordinate error {worst:.3g}")
    assert worst < 1e-8


def _cli(*argv) -> int:
    return main([str(a) for a in argv])


def _pipeline(tmp, dims, scene_args=()):
    f0 = dims[dims.index("--f0") + 1]
    ts = dims[dims.index("--ts") + 1]
    assert _cli("pattern", *dims, "--out", tmp / "pattern") == 0
    assert _cli("simulate", *dims, *scene_args, "--rig", "--out-dir", tmp / "sim") == 0
    assert _cli("calibrate", "--input", tmp / "sim" / "correspondences.csv", "--out", tmp / "cal.json") == 0
    assert _cli("recover", "--input", tmp / "sim" / "samples.csv", "--ts", ts, "--f0", f0,
                "--out", tmp / "rec.csv") == 0
    assert _cli("reconstruct", "--calibration", tmp / "cal.json", "--input", tmp / "rec.csv",
                "--f0", f0, "--out", tmp / "cloud.ply") == 0
    ply = io.read_ply(tmp / "cloud.ply")
    assert ply["valid"].all()
    return ply


@pytest.mark.criterion(7, "pipeline: flat plane-fit RMS < 1e-3 mm, bump depth RMS < 1e-2 mm")
def test_criterion_7_end_to_end(criterion, tmp_path, capsys):
    flat = _pipeline(tmp_path / "flat", ["--height", 256, "--width", 32, "--ts", 8, "--f0", F0])
    pts = np.column_stack([flat["x"], flat["y"], flat["z"]])
    a = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(a, pts[:, 2], rcond=None)
    plane_rms = float(np.sqrt(np.mean((a @ coef - pts[:, 2]) ** 2)))

    bump = _pipeline(tmp_path / "bump", ["--height", 512, "--width", 32, "--ts", 8, "--f0", F0],
                     ["--scene", "gaussian_bump", "--scene-amplitude", 20.0])
    gt = np.loadtxt(tmp_path / "bump" / "sim" / "points_gt.csv", delimiter=",", skiprows=1)
    gt_z = {(int(x), int(t)): z for x, t, z in gt[:, [0, 1, 4]]}
    dz = np.array([bump["z"][i] - gt_z[(int(bump["col"][i]), int(bump["row"][i]))]
                   for i in range(len(bump["z"]))])
    depth_rms = float(np.sqrt(np.mean(dz * dz)))
    capsys.readouterr()
    criterion(f"plane RMS {plane_rms:.3g} mm, bump depth RMS {depth_rms:.3g} mm "
              f"(peak {gt[:, 4].max():.3g} mm)")
    assert plane_rms < 1e-3
    assert depth_rms < 1e-2


@pytest.mark.criterion(8, "report determinism: byte-identical bodies, independent of --threads")
def test_criterion_8_determinism(criterion, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "pattern": {"height": 448, "width": 24, "f0": F0},
        "scene": {"kind": "gaussian_bump", "amplitude": 5.0, "reflectivity": "speckle"},
        "rig": {},
        "noise": 0.01,
        "ts_values": [4, 8, 16, 32],
    }))
    for name, threads in (("a", 1), ("b", 1), ("c", 4)):
        assert _cli("--threads", threads, "--seed", 3, "report", "--config", cfg,
                    "--out-dir", tmp_path / name) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = [
        (tmp_path / "a" / n).read_bytes() == (tmp_path / d / n).read_bytes()
        for n in names
        for d in ("b", "c")
    ]
    criterion(f"{sum(same)}/{len(same)} artifact comparisons identical ({len(names)} files)")
    assert all(same)


@pytest.mark.criterion(9, "noise sigma = 1% I_0: frequency mean error < 5 sigma")
def test_criterion_9_noise(criterion):
    sigma = 0.01 * I0
    errs = []
    for seed in range(5):
        spec = ExperimentSpec(PatternConfig(height=448, width=32, ts=8, f0=F0, amplitude=I0),
                              noise=sigma, seed=seed, methods=("frequency",))
        rep = run_experiment(spec)
        assert rep.nyquist_ok
        errs.append(rep.results["frequency"].report.mean_abs_error)
    criterion(f"mean errors {min(errs):.3g}..{max(errs):.3g} (5 sigma = {5 * sigma:.3g})")
    assert all(np.isfinite(errs))
    assert max(errs) < 5 * sigma
