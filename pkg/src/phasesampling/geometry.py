"""Camera/projector projection models, linear calibration and triangulation.

Both devices use the m34-normalised pinhole model.  The camera keeps all
three rows of its 3x4 matrix (11 free parameters).  The projector pattern
only varies along its rows, so only rows 2 and 3 of its matrix are
estimated (7 free parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionByZeroDepth, RankDeficient, SingularSystem, TooFewPoints

EPS_DEPTH = 1e-9
RANK_RTOL = 1e-10
COND_MAX = 1e12


def _as_theta(values, n: int, name: str) -> np.ndarray:
    theta = np.asarray(values, dtype=float).reshape(-1)
    if theta.shape != (n,):
        raise ValueError(f"{name} needs exactly {n} parameters, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise ValueError(f"{name} parameters must be finite")
    return theta


@dataclass(frozen=True, eq=False)
class CameraProjection:
    """World to camera mapping ``[m11..m14, m21..m24, m31..m33]``, m34 = 1."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _as_theta(self.theta, 11, "theta_c"))

    @property
    def matrix(self) -> np.ndarray:
        return np.append(self.theta, 1.0).reshape(3, 4)

    @classmethod
    def from_matrix(cls, m) -> "CameraProjection":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 4):
            raise ValueError("camera matrix must be 3x4")
        if abs(m[2, 3]) < EPS_DEPTH:
            raise ValueError("m34 is zero; matrix cannot be m34-normalised")
        return cls((m / m[2, 3]).reshape(-1)[:11])


@dataclass(frozen=True, eq=False)
class ProjectorProjection:
    """World to projector-row mapping ``[m21..m24, m31..m33]``, m34 = 1."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _as_theta(self.theta, 7, "theta_p"))

    @property
    def matrix(self) -> np.ndarray:
        """Rows 2 and 3 of the normalised projector matrix (2x4)."""
        return np.append(self.theta, 1.0).reshape(2, 4)

    @classmethod
    def from_matrix(cls, m) -> "ProjectorProjection":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 4):
            raise ValueError("projector matrix must be 3x4")
        if abs(m[2, 3]) < EPS_DEPTH:
            raise ValueError("m34 is zero; matrix cannot be m34-normalised")
        return cls((m[1:] / m[2, 3]).reshape(-1)[:7])


@dataclass
class Correspondences:
    """Calibration records: world points with their camera pixels and/or projector rows."""

    world: np.ndarray
    pixels: np.ndarray | None = None
    rows: np.ndarray | None = None
    _n: int = field(init=False, repr=False)

    def __post_init__(self):
        self.world = np.atleast_2d(np.asarray(self.world, dtype=float))
        if self.world.shape[-1] != 3:
            raise ValueError("world points must have 3 coordinates")
        self._n = len(self.world)
        if self.pixels is not None:
            self.pixels = np.atleast_2d(np.asarray(self.pixels, dtype=float))
            if self.pixels.shape != (self._n, 2):
                raise ValueError("pixels must be an (N, 2) array matching world points")
        if self.rows is not None:
            self.rows = np.asarray(self.rows, dtype=float).reshape(-1)
            if self.rows.shape != (self._n,):
                raise ValueError("projector rows must match the number of world points")

    def __len__(self) -> int:
        return self._n


def camera_design_rows(p, q) -> tuple[np.ndarray, np.ndarray]:
    """The two design rows and targets one camera correspondence contributes."""
    X, Y, Z = (float(v) for v in p)
    x, y = (float(v) for v in q)
    rows = np.array([
        [X, Y, Z, 1.0, 0.0, 0.0, 0.0, 0.0, -x * X, -x * Y, -x * Z],
        [0.0, 0.0, 0.0, 0.0, X, Y, Z, 1.0, -y * X, -y * Y, -y * Z],
    ])
    return rows, np.array([x, y])


def projector_design_row(p, y_p) -> tuple[np.ndarray, float]:
    X, Y, Z = (float(v) for v in p)
    y_p = float(y_p)
    return np.array([X, Y, Z, 1.0, -y_p * X, -y_p * Y, -y_p * Z]), y_p


def camera_design_matrix(world, pixels) -> tuple[np.ndarray, np.ndarray]:
    """Stack of :func:`camera_design_rows` for every correspondence (2N x 11)."""
    world = np.asarray(world, dtype=float)
    pixels = np.asarray(pixels, dtype=float)
    n = len(world)
    ones = np.ones((n, 1))
    zeros = np.zeros((n, 4))
    x = pixels[:, :1]
    y = pixels[:, 1:2]
    a = np.empty((2 * n, 11))
    a[0::2] = np.hstack([world, ones, zeros, -x * world])
    a[1::2] = np.hstack([zeros, world, ones, -y * world])
    b = pixels.reshape(-1)
    return a, b


def projector_design_matrix(world, rows) -> tuple[np.ndarray, np.ndarray]:
    world = np.asarray(world, dtype=float)
    y = np.asarray(rows, dtype=float).reshape(-1, 1)
    a = np.hstack([world, np.ones((len(world), 1)), -y * world])
    return a, y.reshape(-1)


def _least_squares(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] < RANK_RTOL * s[0]:
        raise RankDeficient(
            f"design matrix is rank deficient (sigma_min/sigma_max = {s[-1] / s[0]:.3g}); "
            "point configuration is degenerate"
        )
    theta, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ theta - b))
    return theta, residual


def solve_camera(c: Correspondences) -> tuple[CameraProjection, float]:
    """Least-squares camera parameters and the residual norm ``||X_c theta - Y_c||``."""
    if c.pixels is None:
        raise ValueError("camera calibration needs camera pixel coordinates")
    if len(c) < 6:
        raise TooFewPoints(f"camera calibration needs at least 6 points, got {len(c)}")
    a, b = camera_design_matrix(c.world, c.pixels)
    theta, residual = _least_squares(a, b)
    return CameraProjection(theta), residual


def solve_projector(c: Correspondences) -> tuple[ProjectorProjection, float]:
    if c.rows is None:
        raise ValueError("projector calibration needs projector row coordinates")
    if len(c) < 7:
        raise TooFewPoints(f"projector calibration needs at least 7 points, got {len(c)}")
    a, b = projector_design_matrix(c.world, c.rows)
    theta, residual = _least_squares(a, b)
    return ProjectorProjection(theta), residual


def _check_depth(w: np.ndarray) -> None:
    if np.any(np.abs(w) < EPS_DEPTH):
        raise DivisionByZeroDepth("projective depth is zero for at least one point")


def project_camera(theta: CameraProjection, points) -> np.ndarray:
    """Camera pixels ``(..., 2)`` of world points ``(..., 3)``."""
    p = np.asarray(points, dtype=float)
    m = theta.matrix
    h = p @ m[:, :3].T + m[:, 3]
    _check_depth(h[..., 2])
    return h[..., :2] / h[..., 2:3]


def project_projector(theta: ProjectorProjection, points) -> np.ndarray:
    """Projector rows of world points ``(..., 3)``; scalar input gives a 0-d array."""
    p = np.asarray(points, dtype=float)
    m = theta.matrix
    h = p @ m[:, :3].T + m[:, 3]
    _check_depth(h[..., 1])
    return h[..., 0] / h[..., 1]


def backproject_camera(theta: CameraProjection, x_c, y_c, z_w) -> np.ndarray:
    """World points at height ``z_w`` seen by camera pixels ``(x_c, y_c)``.

    Solves the two camera rows of the triangulation system for X_w and Y_w
    with Z_w fixed.
    """
    x_c, y_c, z_w = np.broadcast_arrays(
        np.asarray(x_c, float), np.asarray(y_c, float), np.asarray(z_w, float)
    )
    m = theta.matrix
    a = m[0, :3] - x_c[..., None] * m[2, :3]
    b = m[1, :3] - y_c[..., None] * m[2, :3]
    r1 = x_c - m[0, 3] - a[..., 2] * z_w
    r2 = y_c - m[1, 3] - b[..., 2] * z_w
    det = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    if np.any(np.abs(det) < EPS_DEPTH):
        raise SingularSystem("camera ray is parallel to the constant-Z plane")
    X = (r1 * b[..., 1] - r2 * a[..., 1]) / det
    Y = (a[..., 0] * r2 - b[..., 0] * r1) / det
    return np.stack([X, Y, z_w], axis=-1)


def triangulation_system(tc: CameraProjection, tp: ProjectorProjection, x_c, y_c, y_p):
    """Matrix ``H`` (..., 3, 3) and right-hand side (..., 3) for the world point.

    Rows 1-2 come from the camera; row 3 follows the projector row equation,
    ``(m2j - y_p m3j)`` with right-hand side ``y_p - m24``.
    """
    x_c, y_c, y_p = np.broadcast_arrays(
        np.asarray(x_c, float), np.asarray(y_c, float), np.asarray(y_p, float)
    )
    mc = tc.matrix
    mp = tp.matrix
    h = np.empty(x_c.shape + (3, 3))
    h[..., 0, :] = mc[0, :3] - x_c[..., None] * mc[2, :3]
    h[..., 1, :] = mc[1, :3] - y_c[..., None] * mc[2, :3]
    h[..., 2, :] = mp[0, :3] - y_p[..., None] * mp[1, :3]
    rhs = np.stack([x_c - mc[0, 3], y_c - mc[1, 3], y_p - mp[0, 3]], axis=-1)
    return h, rhs


def triangulate(tc: CameraProjection, tp: ProjectorProjection, x_c, y_c, y_p) -> np.ndarray:
    """World point ``(X_w, Y_w, Z_w)`` for one camera pixel and projector row."""
    h, rhs = triangulation_system(tc, tp, float(x_c), float(y_c), float(y_p))
    cond = np.linalg.cond(h)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise SingularSystem(f"triangulation matrix is singular (cond = {cond:.3g})")
    return np.linalg.solve(h, rhs)


def triangulate_many(tc: CameraProjection, tp: ProjectorProjection, x_c, y_c, y_p):
    """Vectorised :func:`triangulate`.

    Returns ``(points, valid)``; points whose system is singular or whose
    inputs are not finite are NaN and flagged invalid instead of raising.
    """
    h, rhs = triangulation_system(tc, tp, x_c, y_c, y_p)
    shape = rhs.shape[:-1]
    h = h.reshape(-1, 3, 3)
    rhs = rhs.reshape(-1, 3)
    points = np.full(rhs.shape, np.nan)
    valid = np.all(np.isfinite(h), axis=(1, 2)) & np.all(np.isfinite(rhs), axis=1)
    if valid.any():
        cond = np.linalg.cond(h[valid])
        ok = np.isfinite(cond) & (cond <= COND_MAX)
        idx = np.flatnonzero(valid)
        valid[idx[~ok]] = False
        if ok.any():
            good = idx[ok]
            points[good] = np.linalg.solve(h[good], rhs[good][..., None])[..., 0]
    return points.reshape(shape + (3,)), valid.reshape(shape)
