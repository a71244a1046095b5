"""Sampled phase patterns, scene deformation and column signal extraction.

The pattern carries a carrier ``I_0 exp(i 2 pi f0 t)`` along the vertical
axis ``t`` on rows ``t = n T_s`` only; every other row is dark.  Rasters are
indexed ``[t, x]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ColumnOutOfRange, DimensionMismatch, InvalidConfig, ValidationError

COMPLEX = "complex_quadrature"
REAL = "real_cosine"
MODES = (COMPLEX, REAL)

# f0 * height must be within this many cycles of an integer
CYCLE_TOL = 1e-3


@dataclass(frozen=True)
class PatternConfig:
    height: int
    width: int
    ts: int
    f0: float
    amplitude: float = 1.0
    mode: str = COMPLEX

    def __post_init__(self):
        for name in ("height", "width", "ts"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise InvalidConfig(f"{name} must be an integer, got {v!r}")
        if self.ts < 1:
            raise InvalidConfig("T_s must be ≥ 1")
        if self.height < 1 or self.width < 1:
            raise InvalidConfig("height and width must be positive")
        if not 0 < self.f0 < 0.5:
            raise InvalidConfig(f"f0 must satisfy 0 < f0 < 0.5 cycles/pixel, got {self.f0}")
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise InvalidConfig(f"I_0 must be positive, got {self.amplitude}")
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.height % self.ts:
            raise InvalidConfig(
                f"height ({self.height}) must be a multiple of T_s ({self.ts})"
            )
        cycles = self.f0 * self.height
        if abs(cycles - round(cycles)) > CYCLE_TOL:
            raise InvalidConfig(
                f"f0 * height = {cycles:.6g} must be an integer number of carrier cycles"
            )

    @property
    def n_samples(self) -> int:
        return self.height // self.ts

    @property
    def is_complex(self) -> bool:
        return self.mode == COMPLEX

    def sample_mask(self) -> np.ndarray:
        return np.arange(self.height) % self.ts == 0


@dataclass(frozen=True, eq=False)
class Scene:
    """Per-pixel phase variation ``phi`` (rad) and reflectivity ``gamma``.

    Geometric scenes also carry the world points each camera pixel sees.
    """

    phi: np.ndarray
    gamma: np.ndarray
    points: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if phi.shape != gamma.shape or phi.ndim != 2:
            raise DimensionMismatch("phi and gamma must be 2-D fields of equal shape")
        if not np.all(np.isfinite(phi)):
            raise ValidationError("phi must be finite")
        if not np.all(gamma > 0):
            raise ValidationError("gamma must be positive everywhere")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "gamma", gamma)

    @property
    def shape(self) -> tuple[int, int]:
        return self.phi.shape

    @property
    def depth(self) -> np.ndarray | None:
        return None if self.points is None else self.points[..., 2]

    @classmethod
    def identity(cls, height: int, width: int) -> "Scene":
        return cls(np.zeros((height, width)), np.ones((height, width)))


@dataclass(frozen=True, eq=False)
class PatternImage:
    """Pattern raster; complex for quadrature mode, real otherwise."""

    config: PatternConfig
    data: np.ndarray

    @property
    def in_phase(self) -> np.ndarray:
        return self.data.real

    @property
    def quadrature(self) -> np.ndarray:
        return self.data.imag if self.config.is_complex else np.zeros_like(self.data)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Values at instants ``n T_s``; 2-D values hold one column per axis-1 entry."""

    values: np.ndarray
    ts: int
    n_dense: int

    def __post_init__(self):
        values = np.asarray(self.values)
        object.__setattr__(self, "values", values)
        if self.ts < 1:
            raise ValidationError("T_s must be ≥ 1")
        if values.ndim not in (1, 2):
            raise ValidationError("sample values must be 1-D or 2-D")
        if len(values) * self.ts != self.n_dense:
            raise ValidationError(
                f"{len(values)} samples at T_s={self.ts} do not span n_dense={self.n_dense}"
            )

    @property
    def instants(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.ts

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def column(self, j: int) -> "SampledSignal":
        if self.values.ndim == 1:
            raise ValueError("signal has a single column")
        return SampledSignal(self.values[:, j], self.ts, self.n_dense)


def carrier_phase(cfg: PatternConfig) -> np.ndarray:
    """Designed carrier phase ``2 pi f0 t`` for every row."""
    return 2 * np.pi * cfg.f0 * np.arange(cfg.height)


def evaluate(cfg: PatternConfig, phi, gamma) -> np.ndarray:
    """Modulated signal at every pixel (no impulse train applied).

    Complex mode gives ``gamma I_0 exp(i(2 pi f0 t + phi))``; real mode its
    nonnegative cosine counterpart ``gamma I_0 (1 + cos(.)) / 2``.
    """
    arg = carrier_phase(cfg)[:, None] + phi
    if cfg.is_complex:
        return gamma * cfg.amplitude * np.exp(1j * arg)
    return gamma * cfg.amplitude * (1 + np.cos(arg)) / 2


def _render(cfg: PatternConfig, phi, gamma) -> np.ndarray:
    full = np.broadcast_to(evaluate(cfg, phi, gamma), (cfg.height, cfg.width))
    out = np.zeros_like(full)
    mask = cfg.sample_mask()
    out[mask] = full[mask]
    return out


def generate_pattern(cfg: PatternConfig) -> PatternImage:
    return PatternImage(cfg, _render(cfg, 0.0, 1.0))


def deform_pattern(img: PatternImage, scene: Scene) -> PatternImage:
    """Pattern as observed on a scene: phase shifted by ``phi``, scaled by ``gamma``.

    The designed pattern is re-evaluated from ``img.config`` rather than
    multiplied, so the real-cosine mode is handled the same way.
    """
    cfg = img.config
    if scene.shape != (cfg.height, cfg.width):
        raise DimensionMismatch(
            f"scene is {scene.shape}, pattern is {(cfg.height, cfg.width)}"
        )
    return PatternImage(cfg, _render(cfg, scene.phi, scene.gamma))


def extract_column(img: PatternImage, x: int) -> SampledSignal:
    cfg = img.config
    if not 0 <= x < cfg.width:
        raise ColumnOutOfRange(f"column {x} outside [0, {cfg.width})")
    return SampledSignal(img.data[:: cfg.ts, x].copy(), cfg.ts, cfg.height)


def extract_columns(img: PatternImage) -> SampledSignal:
    """All columns at once, values shaped ``(n_samples, width)``."""
    cfg = img.config
    return SampledSignal(img.data[:: cfg.ts].copy(), cfg.ts, cfg.height)
