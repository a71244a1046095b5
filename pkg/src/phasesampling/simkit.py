"""Synthetic scenes, a synthetic camera/projector rig and the experiment harness.

An experiment renders the sampled pattern on a scene, extracts every
column, recovers it with each requested method and scores the result
against the analytic dense signal.  With a rig attached the recovered
phase is also turned into projector rows and triangulated, and the depth
map is compared against the scene's world points.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from .geometry import (
    CameraProjection,
    ProjectorProjection,
    backproject_camera,
    project_projector,
    triangulate_many,
)
from .recovery import (
    DenseSignal,
    RecoveryReport,
    extract_phase,
    phase_to_projector_row,
    recover,
    recovery_error,
    rect_window,
    spectrum_of,
)
from .signal import (
    PatternConfig,
    SampledSignal,
    Scene,
    deform_pattern,
    evaluate,
    extract_columns,
    generate_pattern,
)

SCENE_KINDS = ("flat", "gaussian_bump", "ramp", "sinusoidal_relief")
REFLECTIVITIES = ("uniform", "linear_gradient", "speckle")
METHOD_NAMES = ("frequency", "spline", "sinc")


@dataclass(frozen=True)
class SceneSpec:
    """Scene recipe.

    ``amplitude`` is radians of phase for phase-only scenes and millimetres
    of height when a rig is attached.  ``sigma`` is the bump width as a
    fraction of the raster side, per axis; ``cycles`` counts relief periods
    along ``t``.  The ramp rises by ``amplitude`` over the full height.
    """

    kind: str = "flat"
    amplitude: float = 0.0
    sigma: float = 0.1
    cycles: int = 2
    reflectivity: str = "uniform"
    gamma_min: float = 0.5
    speckle_cutoff: float = 1 / 64
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise InvalidSpec(f"scene kind must be one of {SCENE_KINDS}, got {self.kind!r}")
        if self.reflectivity not in REFLECTIVITIES:
            raise InvalidSpec(
                f"reflectivity must be one of {REFLECTIVITIES}, got {self.reflectivity!r}"
            )
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise InvalidSpec("amplitude must be finite and non-negative")
        if not self.sigma > 0:
            raise InvalidSpec("sigma must be positive")
        if isinstance(self.cycles, bool) or not isinstance(self.cycles, int) or self.cycles < 1:
            raise InvalidSpec("cycles must be a positive integer")
        if not 0 < self.gamma_min <= 1:
            raise InvalidSpec("gamma_min must lie in (0, 1]")
        if not 0 < self.speckle_cutoff < 0.5:
            raise InvalidSpec("speckle_cutoff must lie in (0, 0.5) cycles/pixel")


@dataclass(frozen=True)
class RigSpec:
    """Parallel-axis camera and projector looking down the world Z axis.

    Distances in millimetres, focal length in pixels.  The projector is
    offset by ``baseline`` along world Y and its principal point is shifted
    so the plane ``Z_w = 0`` maps camera row ``t`` onto projector row ``t``.
    """

    standoff: float = 500.0
    baseline: float = 100.0
    focal: float = 800.0

    def __post_init__(self):
        if not (self.standoff > 0 and self.focal > 0 and self.baseline != 0):
            raise InvalidSpec("rig needs positive standoff and focal length, nonzero baseline")


@dataclass(frozen=True, eq=False)
class Rig:
    camera: CameraProjection
    projector: ProjectorProjection


def synthetic_rig(height: int, width: int, spec: RigSpec = RigSpec()) -> Rig:
    d, b, f = spec.standoff, spec.baseline, spec.focal
    cx, cy = (width - 1) / 2, (height - 1) / 2
    camera = CameraProjection([
        f / d, 0, -cx / d, cx,
        0, f / d, -cy / d, cy,
        0, 0, -1 / d,
    ])
    shift = cy + f * b / d
    projector = ProjectorProjection([0, f / d, -shift / d, cy, 0, 0, -1 / d])
    return Rig(camera, projector)


def _profile(spec: SceneSpec, height: int, width: int) -> np.ndarray:
    t = np.arange(height)[:, None]
    x = np.arange(width)[None, :]
    a = spec.amplitude
    if spec.kind == "flat":
        return np.zeros((height, width))
    if spec.kind == "gaussian_bump":
        st = spec.sigma * height
        sx = spec.sigma * width
        r2 = ((t - height // 2) / st) ** 2 + ((x - width // 2) / sx) ** 2
        return a * np.exp(-r2 / 2)
    if spec.kind == "ramp":
        return np.broadcast_to(a * t / height, (height, width)).copy()
    return np.broadcast_to(a * np.sin(2 * np.pi * spec.cycles * t / height), (height, width)).copy()


def _speckle(spec: SceneSpec, height: int, width: int) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0])
    noise = np.fft.fft2(rng.standard_normal((height, width)))
    ky = np.abs(np.fft.fftfreq(height))[:, None]
    kx = np.abs(np.fft.fftfreq(width))[None, :]
    # |k| <= cutoff is symmetric under k -> -k, so the field stays real
    noise[(ky > spec.speckle_cutoff) | (kx > spec.speckle_cutoff)] = 0
    field_ = np.fft.ifft2(noise).real
    lo, hi = field_.min(), field_.max()
    if hi - lo < 1e-12:
        return np.ones((height, width))
    return spec.gamma_min + (1 - spec.gamma_min) * (field_ - lo) / (hi - lo)


def _reflectivity(spec: SceneSpec, height: int, width: int) -> np.ndarray:
    if spec.reflectivity == "uniform":
        return np.ones((height, width))
    if spec.reflectivity == "linear_gradient":
        ramp = np.ones(width) if width == 1 else np.linspace(spec.gamma_min, 1.0, width)
        return np.broadcast_to(ramp, (height, width)).copy()
    return _speckle(spec, height, width)


def make_scene(
    spec: SceneSpec,
    height: int,
    width: int,
    rig: Rig | None = None,
    f0: float | None = None,
) -> Scene:
    """Build phase and reflectivity fields.

    Without a rig the profile is the phase field itself.  With a rig the
    profile is the world height ``Z_w`` under each camera pixel; the phase
    is whatever shift of projector row that geometry produces, which needs
    the carrier ``f0``.
    """
    profile = _profile(spec, height, width)
    gamma = _reflectivity(spec, height, width)
    if rig is None:
        return Scene(profile, gamma)
    if f0 is None:
        raise InvalidSpec("geometric scenes need the carrier frequency f0")
    t, x = np.mgrid[0:height, 0:width].astype(float)
    points = backproject_camera(rig.camera, x, t, profile)
    y_p = project_projector(rig.projector, points)
    phi = 2 * np.pi * f0 * (y_p - t)
    return Scene(phi, gamma, points)


def bandwidth_bound(cfg: PatternConfig, scene: Scene, spec: SceneSpec | None = None) -> float:
    """Upper estimate of the modulated signal's angular bandwidth, rad/pixel.

    Carrier frequency plus the largest instantaneous-frequency excursion of
    ``phi`` along ``t``, plus the reflectivity band for speckle.
    """
    w = 2 * np.pi * cfg.f0
    if cfg.height > 1:
        w += float(np.max(np.abs(np.diff(scene.phi, axis=0)), initial=0.0))
    if spec is not None and spec.reflectivity == "speckle":
        w += 2 * np.pi * spec.speckle_cutoff
    return w


def nyquist_ok(ts: int, w_m: float) -> bool:
    return 2 * np.pi / ts >= 2 * w_m * (1 - 1e-12)


@dataclass(frozen=True)
class ExperimentSpec:
    pattern: PatternConfig
    scene: SceneSpec = SceneSpec()
    methods: tuple[str, ...] = ("frequency", "spline")
    rig: RigSpec | None = None
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.methods:
            raise InvalidSpec("at least one recovery method is required")
        bad = [m for m in self.methods if m not in METHOD_NAMES]
        if bad:
            raise InvalidSpec(f"unknown methods {bad}; choose from {METHOD_NAMES}")
        if not (self.noise >= 0 and math.isfinite(self.noise)):
            raise InvalidSpec("noise must be a finite non-negative standard deviation")

    def to_dict(self) -> dict:
        return {
            "pattern": asdict(self.pattern),
            "scene": asdict(self.scene),
            "methods": list(self.methods),
            "rig": None if self.rig is None else asdict(self.rig),
            "noise": self.noise,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        try:
            pattern = PatternConfig(**d["pattern"])
            scene = SceneSpec(**d.get("scene", {}))
            rig = d.get("rig")
            return cls(
                pattern=pattern,
                scene=scene,
                methods=tuple(d.get("methods", ("frequency", "spline"))),
                rig=None if rig is None else RigSpec(**rig),
                noise=float(d.get("noise", 0.0)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed experiment spec: {exc}") from None

    def config_hash(self) -> str:
        body = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(body.encode()).hexdigest()


@dataclass(eq=False)
class MethodResult:
    report: RecoveryReport
    phase_mean_abs_error: float | None = None
    phase_max_abs_error: float | None = None
    depth_rms: float | None = None
    invalid_pixels: int | None = None

    def to_dict(self, ts: int) -> dict:
        out = self.report.to_dict(ts)
        out["phase_mean_abs_error"] = self.phase_mean_abs_error
        out["phase_max_abs_error"] = self.phase_max_abs_error
        if self.depth_rms is not None:
            out["depth_rms_mm"] = self.depth_rms
            out["invalid_pixels"] = self.invalid_pixels
        return out


@dataclass(eq=False)
class ExperimentReport:
    spec: ExperimentSpec
    w_m: float
    nyquist_ok: bool
    results: dict[str, MethodResult]
    truth: DenseSignal
    samples: SampledSignal
    scene: Scene
    spectra: dict = field(default_factory=dict)

    @property
    def ts(self) -> int:
        return self.spec.pattern.ts

    def to_dict(self) -> dict:
        return {
            "T_s": self.ts,
            "w_s": 2 * math.pi / self.ts,
            "w_m": self.w_m,
            "nyquist_ok": self.nyquist_ok,
            "methods": {m: r.to_dict(self.ts) for m, r in self.results.items()},
            "provenance": {
                "seed": self.spec.seed,
                "config_hash": self.spec.config_hash(),
                "config": self.spec.to_dict(),
            },
        }


def _split_columns(s: SampledSignal, threads: int) -> list[SampledSignal]:
    if s.values.ndim == 1 or threads <= 1:
        return [s]
    chunks = np.array_split(np.arange(s.values.shape[1]), min(threads, s.values.shape[1]))
    return [SampledSignal(s.values[:, c], s.ts, s.n_dense) for c in chunks if len(c)]


def _recover_columns(s: SampledSignal, method: str, threads: int) -> DenseSignal:
    parts = _split_columns(s, threads)
    if len(parts) == 1:
        return recover(s, method)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        out = list(pool.map(lambda p: recover(p, method).values, parts))
    return DenseSignal(np.concatenate(out, axis=1))


def add_noise(s: SampledSignal, sigma: float, rng: np.random.Generator) -> SampledSignal:
    """Additive Gaussian noise on sample values, ``E|n|^2 = sigma^2``."""
    if sigma == 0:
        return s
    shape = s.values.shape
    if s.is_complex:
        n = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (sigma / math.sqrt(2))
    else:
        n = rng.standard_normal(shape) * sigma
    return SampledSignal(s.values + n, s.ts, s.n_dense)


def dense_truth(cfg: PatternConfig, scene: Scene) -> DenseSignal:
    """The modulated signal at every pixel, without the impulse train."""
    return DenseSignal(np.broadcast_to(evaluate(cfg, scene.phi, scene.gamma), scene.shape).copy())


def _spectra_snapshot(samples: SampledSignal, column: int) -> dict:
    col = samples.column(column) if samples.values.ndim == 2 else samples
    sp = spectrum_of(col)
    return {
        "column": column,
        "freqs": sp.freqs,
        "sampled": np.abs(sp.coefficients),
        "windowed": np.abs(rect_window(sp).coefficients),
    }


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentReport:
    cfg = spec.pattern
    rig = None if spec.rig is None else synthetic_rig(cfg.height, cfg.width, spec.rig)
    scene = make_scene(spec.scene, cfg.height, cfg.width, rig=rig, f0=cfg.f0)
    img = deform_pattern(generate_pattern(cfg), scene)
    samples = add_noise(extract_columns(img), spec.noise, np.random.default_rng([spec.seed, 1]))
    truth = dense_truth(cfg, scene)
    w_m = bandwidth_bound(cfg, scene, spec.scene)

    true_phase = None
    try:
        true_phase, _ = extract_phase(truth, cfg.f0, cfg.amplitude)
    except ArithmeticError:
        pass

    results = {}
    for method in spec.methods:
        recovered = _recover_columns(samples, method, threads)
        res = MethodResult(RecoveryReport.build(method, recovered, truth))
        phi, _ = extract_phase(recovered, cfg.f0, cfg.amplitude, strict=False)
        if true_phase is not None:
            ok = np.isfinite(phi)
            if ok.any():
                res.phase_mean_abs_error, res.phase_max_abs_error = recovery_error(
                    phi[ok], true_phase[ok]
                )
        if rig is not None:
            y_p = phase_to_projector_row(phi, cfg.f0)
            t, x = np.mgrid[0 : cfg.height, 0 : cfg.width].astype(float)
            points, valid = triangulate_many(rig.camera, rig.projector, x, t, y_p)
            res.invalid_pixels = int((~valid).sum())
            if valid.any():
                dz = points[..., 2][valid] - scene.depth[valid]
                res.depth_rms = math.sqrt(math.fsum(dz * dz) / dz.size)
        results[method] = res

    return ExperimentReport(
        spec=spec,
        w_m=w_m,
        nyquist_ok=nyquist_ok(cfg.ts, w_m),
        results=results,
        truth=truth,
        samples=samples,
        scene=scene,
        spectra=_spectra_snapshot(samples, cfg.width // 2),
    )


@dataclass(frozen=True)
class SweepRow:
    ts: int
    method: str
    mean_abs_error: float
    max_abs_error: float
    nyquist_ok: bool


@dataclass(eq=False)
class Sweep:
    rows: list[SweepRow]
    reports: list[ExperimentReport]
    ts_nyquist_max: float

    def errors(self, method: str) -> dict[int, float]:
        return {r.ts: r.mean_abs_error for r in self.rows if r.method == method}


def sweep_sampling_period(base: ExperimentSpec, ts_values, threads: int = 1) -> Sweep:
    """One experiment per sampling period, rows sorted by ``T_s``.

    ``ts_nyquist_max`` is the largest period satisfying ``w_s >= 2 w_m``.
    """
    ts_values = sorted(set(int(v) for v in ts_values))
    if not ts_values:
        raise InvalidSpec("sweep needs at least one sampling period")
    specs = [replace(base, pattern=replace(base.pattern, ts=ts)) for ts in ts_values]
    if threads > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_experiment, specs))
    else:
        reports = [run_experiment(s, threads) for s in specs]
    rows = [
        SweepRow(rep.ts, m, r.report.mean_abs_error, r.report.max_abs_error, rep.nyquist_ok)
        for rep in reports
        for m, r in rep.results.items()
    ]
    w_m = reports[0].w_m
    return Sweep(rows, reports, math.pi / w_m)


def default_spec() -> ExperimentSpec:
    """Flat scene, f0 = 1/54 on a 918 x 459 raster.

    918 = 2 * 17 * 27, so both T_s = 17 and T_s = 27 divide the height and
    the carrier completes 17 whole cycles.  T_s = 27 then sits exactly on
    the Nyquist boundary and T_s = 17 oversamples it.
    """
    return ExperimentSpec(PatternConfig(height=918, width=459, ts=27, f0=1 / 54))


DEFAULT_SWEEP = (17, 27)
