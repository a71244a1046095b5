"""Command-line frontend.

Subcommands ``pattern``, ``simulate``, ``recover``, ``calibrate``,
``reconstruct`` and ``report``; every file one of them writes can be fed
to the next unmodified.

Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 numerical
diagnostic.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io
from .errors import InvalidConfig, PSPError, ValidationError
from .geometry import (
    Correspondences,
    backproject_camera,
    project_camera,
    project_projector,
    solve_camera,
    solve_projector,
    triangulate_many,
)
from .plots import plot_recovery, plot_spectrum, plot_sweep
from .recovery import (
    DenseSignal,
    RecoveryReport,
    extract_phase,
    phase_to_projector_row,
    recover_frequency,
    recover_spline,
    reconstruct_sinc,
)
from .signal import COMPLEX, REAL, PatternConfig, deform_pattern, extract_columns, generate_pattern
from .simkit import (
    DEFAULT_SWEEP,
    ExperimentSpec,
    Rig,
    RigSpec,
    SceneSpec,
    add_noise,
    default_spec,
    dense_truth,
    make_scene,
    sweep_sampling_period,
    synthetic_rig,
)

log = logging.getLogger("phasesampling")

MODE_NAMES = {"complex": COMPLEX, "real": REAL, COMPLEX: COMPLEX, REAL: REAL}
RECOVERERS = {"freq": recover_frequency, "spline": recover_spline, "sinc": reconstruct_sinc}
METHOD_LABEL = {"freq": "frequency", "spline": "spline", "sinc": "sinc"}


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _pattern_config(args, ts: int | None = None) -> PatternConfig:
    return PatternConfig(
        height=args.height,
        width=args.width,
        ts=args.ts if ts is None else ts,
        f0=args.f0,
        amplitude=args.amplitude,
        mode=MODE_NAMES[args.mode],
    )


# ---------------------------------------------------------------- pattern


def cmd_pattern(args) -> int:
    cfg = _pattern_config(args)
    img = generate_pattern(cfg)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    files = io.write_pattern(img, out, args.pgm_format)
    _emit({
        "files": [str(f) for f in files],
        "height": cfg.height,
        "width": cfg.width,
        "T_s": cfg.ts,
        "f0": cfg.f0,
        "mode": cfg.mode,
        "sample_rows": cfg.n_samples,
    })
    return 0


# ---------------------------------------------------------------- simulate


def _calibration_target(rig: Rig, height: int, width: int, depth: float) -> Correspondences:
    """Non-coplanar grid of world points filling the camera view, with their images."""
    t, x = np.meshgrid(np.linspace(0.1, 0.9, 5) * (height - 1), np.linspace(0.1, 0.9, 5) * (width - 1))
    levels = np.linspace(-depth, depth, 3)
    world = np.concatenate([backproject_camera(rig.camera, x.ravel(), t.ravel(), z) for z in levels])
    return Correspondences(world, project_camera(rig.camera, world), project_projector(rig.projector, world))


def cmd_simulate(args) -> int:
    cfg = _pattern_config(args)
    scene_spec = SceneSpec(
        kind=args.scene,
        amplitude=args.scene_amplitude,
        sigma=args.sigma,
        cycles=args.cycles,
        reflectivity=args.reflectivity,
        gamma_min=args.gamma_min,
        seed=args.seed,
    )
    rig = None
    if args.calibration:
        camera, projector = io.read_calibration(args.calibration)
        rig = Rig(camera, projector)
    elif args.rig:
        rig = synthetic_rig(cfg.height, cfg.width, RigSpec(args.standoff, args.baseline, args.focal))

    scene = make_scene(scene_spec, cfg.height, cfg.width, rig=rig, f0=cfg.f0)
    img = deform_pattern(generate_pattern(cfg), scene)
    samples = add_noise(extract_columns(img), args.noise, np.random.default_rng([args.seed, 1]))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = io.write_pattern(img, out / "deformed", args.pgm_format)
    files.append(io.write_signal_csv(out / "samples.csv", samples.values, samples.instants))
    files.append(io.write_signal_csv(out / "gt.csv", dense_truth(cfg, scene).values))
    meta = {
        "pattern": asdict(cfg),
        "scene": asdict(scene_spec),
        "noise": args.noise,
        "seed": args.seed,
        "geometry": rig is not None,
    }
    files.append(io.write_json(out / "meta.json", meta))
    if rig is not None:
        t, x = np.mgrid[0 : cfg.height, 0 : cfg.width]
        pts = scene.points.reshape(-1, 3)
        table = np.column_stack([x.ravel(), t.ravel(), pts])
        path = out / "points_gt.csv"
        np.savetxt(path, table, fmt=["%d", "%d"] + [io.FLOAT_FMT] * 3, delimiter=",",
                   header="x,t,Xw,Yw,Zw", comments="")
        files.append(path)
        if args.rig and not args.calibration:
            files.append(io.write_calibration(out / "rig.json", rig.camera, 0.0, rig.projector, 0.0))
            target = _calibration_target(rig, cfg.height, cfg.width, max(args.scene_amplitude, 10.0))
            files.append(io.write_correspondences(out / "correspondences.csv", target))
    _emit({"files": [str(f) for f in files], "sample_rows": cfg.n_samples, "geometry": rig is not None})
    return 0


# ---------------------------------------------------------------- recover


def cmd_recover(args) -> int:
    columns, t, values, _ = io.read_signal_csv(args.input)
    real = MODE_NAMES[args.mode] == REAL
    s = io.sampled_from_table(t, values, args.ts, args.height, real=real)
    dense = RECOVERERS[args.method](s)

    truth = None
    if args.truth:
        tcols, tt, tvals, _ = io.read_signal_csv(args.truth)
        if len(tt) != s.n_dense or (columns is None) != (tcols is None) or (
            columns is not None and not np.array_equal(columns, tcols)
        ):
            raise ValidationError("truth signal does not match the recovered grid")
        truth = DenseSignal(tvals.real if real else tvals)
    report = RecoveryReport.build(METHOD_LABEL[args.method], dense, truth)

    if args.phase and args.f0 is None:
        raise ValidationError("--phase needs --f0")
    if args.f0 is not None:
        phase, mag = extract_phase(dense, args.f0, args.amplitude, strict=args.phase)
    else:
        phase, mag = np.angle(dense.values), np.abs(dense.values)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_signal_csv(out, dense.values, columns=columns, extra={"mag": mag, "phase": phase})
    body = report.to_dict(args.ts)
    report_path = Path(args.report) if args.report else out.with_suffix(".json")
    io.write_json(report_path, body)
    _emit({**body, "files": [str(out), str(report_path)]})
    return 0


# ---------------------------------------------------------------- calibrate


def cmd_calibrate(args) -> int:
    corr = io.read_correspondences(args.input)
    camera, res_c = solve_camera(corr)
    projector, res_p = (None, None)
    if corr.rows is not None:
        projector, res_p = solve_projector(corr)
    path = io.write_calibration(args.out, camera, res_c, projector, res_p)
    _emit({"file": str(path), "points": len(corr), "residual_c": res_c, "residual_p": res_p})
    return 0


# ---------------------------------------------------------------- reconstruct


def cmd_reconstruct(args) -> int:
    camera, projector = io.read_calibration(args.calibration)
    columns, t, values, _ = io.read_signal_csv(args.input)
    real = MODE_NAMES[args.mode] == REAL
    dense = DenseSignal(values.real if real else values)
    phi, _ = extract_phase(dense, args.f0, args.amplitude, strict=False)
    y_p = phase_to_projector_row(phi, args.f0, t if phi.ndim == 1 else t[:, None])
    cols = np.zeros(1) if columns is None else columns
    tt, xx = np.meshgrid(t, cols, indexing="ij")
    y_p = y_p.reshape(tt.shape)
    points, valid = triangulate_many(camera, projector, xx, tt, y_p)
    path = io.write_ply(args.out, points, valid, cols=xx, rows=tt)
    _emit({"file": str(path), "points": int(valid.size), "valid": int(valid.sum())})
    return 0


# ---------------------------------------------------------------- report


def _load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _report_spec(args) -> tuple[ExperimentSpec, list[int]]:
    if args.config:
        cfg = dict(_load_config(args.config))
        ts_values = args.sweep or cfg.pop("ts_values", None)
        cfg.pop("ts_values", None)
        pattern = dict(cfg.get("pattern", {}))
        if "ts" not in pattern:
            if not ts_values:
                raise InvalidConfig("config needs pattern.ts, ts_values or --sweep")
            pattern["ts"] = ts_values[0]
        if "mode" in pattern:
            pattern["mode"] = MODE_NAMES.get(pattern["mode"], pattern["mode"])
        cfg["pattern"] = pattern
        spec = ExperimentSpec.from_dict(cfg)
        ts_values = ts_values or [spec.pattern.ts]
    else:
        spec = default_spec()
        ts_values = list(DEFAULT_SWEEP)
    if args.sweep:
        ts_values = args.sweep
    if args.seed_given:
        spec = replace(spec, seed=args.seed, scene=replace(spec.scene, seed=args.seed))
    return spec, ts_values


def cmd_report(args) -> int:
    spec, ts_values = _report_spec(args)
    sweep = sweep_sampling_period(spec, ts_values, threads=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for rep in sweep.reports:
        if not rep.nyquist_ok:
            log.warning("NyquistViolation: T_s=%d gives w_s=%.6g < 2 w_m=%.6g",
                        rep.ts, 2 * np.pi / rep.ts, 2 * rep.w_m)

    body = {
        "config_hash": spec.config_hash(),
        "ts_values": [r.ts for r in sweep.reports],
        "ts_nyquist_max": sweep.ts_nyquist_max,
        "experiments": [r.to_dict() for r in sweep.reports],
        "sweep": [asdict(r) for r in sweep.rows],
    }
    files = [io.write_json(out / "report.json", body)]

    table = out / "errors.csv"
    with table.open("w") as fh:
        fh.write("T_s,method,mean_abs_error,max_abs_error,nyquist_ok\n")
        for r in sweep.rows:
            fh.write(f"{r.ts},{r.method},{r.mean_abs_error:.17g},{r.max_abs_error:.17g},"
                     f"{int(r.nyquist_ok)}\n")
    files.append(table)

    if not args.no_plots:
        for rep in sweep.reports:
            snap = rep.spectra
            csv_path = out / f"spectrum_ts{rep.ts}.csv"
            np.savetxt(csv_path, np.column_stack([snap["freqs"], snap["sampled"], snap["windowed"]]),
                       fmt=io.FLOAT_FMT, delimiter=",", header="freq,sampled,windowed", comments="")
            files.append(csv_path)
            files.append(plot_spectrum(snap, out / f"spectrum_ts{rep.ts}.svg",
                                       f"T_s = {rep.ts}, column {snap['column']}"))
            col = snap["column"]
            recovered = {m: r.report.recovered.values[:, col] for m, r in rep.results.items()}
            files.append(plot_recovery(rep.truth.values[:, col], recovered, rep.samples.instants,
                                       rep.samples.values[:, col], out / f"recovery_ts{rep.ts}.svg",
                                       f"T_s = {rep.ts}"))
        methods = list(spec.methods)
        ts_list = [r.ts for r in sweep.reports]
        errs = {m: [sweep.errors(m)[ts] for ts in ts_list] for m in methods}
        files.append(plot_sweep(ts_list, errs, sweep.ts_nyquist_max, out / "sweep.svg"))

    _emit({"files": [str(f) for f in files], "ts_values": body["ts_values"],
           "nyquist_ok": {str(r.ts): r.nyquist_ok for r in sweep.reports}})
    return 0


# ---------------------------------------------------------------- parser


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_pattern_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pattern")
    g.add_argument("--height", type=int, required=True)
    g.add_argument("--width", type=int, required=True)
    g.add_argument("--ts", type=int, required=True, help="sampling period T_s in pixels")
    g.add_argument("--f0", type=float, required=True, help="carrier frequency, cycles/pixel")
    g.add_argument("--amplitude", type=float, default=1.0, help="carrier amplitude I_0")
    g.add_argument("--mode", choices=["complex", "real"], default="complex")
    g.add_argument("--pgm-format", choices=["P5", "P2"], default="P5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psp", description="Phase sampling profilometry pipeline")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: all cores); output does not depend on it")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for speckle and sample noise (default 0)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="write the designed sampled pattern as PGM")
    _add_pattern_args(p)
    p.add_argument("--out", required=True, help="output stem; complex mode adds _i/_q")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("simulate", help="render the pattern on a synthetic scene")
    _add_pattern_args(p)
    p.add_argument("--scene", default="flat",
                   choices=["flat", "gaussian_bump", "ramp", "sinusoidal_relief"])
    p.add_argument("--scene-amplitude", type=float, default=0.0,
                   help="radians, or millimetres with --rig/--calibration")
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--reflectivity", default="uniform",
                   choices=["uniform", "linear_gradient", "speckle"])
    p.add_argument("--gamma-min", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.0, help="sample noise standard deviation")
    p.add_argument("--rig", action="store_true", help="use the synthetic camera/projector rig")
    p.add_argument("--standoff", type=float, default=500.0)
    p.add_argument("--baseline", type=float, default=100.0)
    p.add_argument("--focal", type=float, default=800.0)
    p.add_argument("--calibration", help="calibration JSON defining the geometry")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover", help="recover dense signals from samples")
    p.add_argument("--input", required=True)
    p.add_argument("--ts", type=int, required=True)
    p.add_argument("--method", choices=sorted(RECOVERERS), default="freq")
    p.add_argument("--truth")
    p.add_argument("--f0", type=float)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--mode", choices=["complex", "real"], default="complex")
    p.add_argument("--height", type=int, help="dense length (default: samples * T_s)")
    p.add_argument("--phase", action="store_true",
                   help="require a defined phase everywhere (exit 3 otherwise)")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("calibrate", help="least-squares camera/projector calibration")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reconstruct", help="triangulate a recovered phase field into a PLY cloud")
    p.add_argument("--calibration", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--f0", type=float, required=True)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--mode", choices=["complex", "real"], default="complex")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("report", help="run the sampling-period experiments")
    p.add_argument("--config", help="experiment config (JSON or TOML)")
    p.add_argument("--sweep", type=_int_list, help="comma-separated T_s values")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors exit 2, --help exits 0
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except PSPError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
