"""File formats: PGM rasters, signal CSVs, correspondences, calibration JSON, PLY.

Floats in CSV files are written with 17 significant digits so every value
round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .geometry import CameraProjection, Correspondences, ProjectorProjection
from .signal import PatternImage, SampledSignal

FLOAT_FMT = "%.17g"

# ---------------------------------------------------------------- PGM


def write_pgm(path, raster: np.ndarray, fmt: str = "P5", maxval: int = 255) -> Path:
    path = Path(path)
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ValueError("PGM raster must be 2-D")
    if raster.min(initial=0) < 0 or raster.max(initial=0) > maxval:
        raise ValueError(f"PGM values must lie in [0, {maxval}]")
    h, w = raster.shape
    header = f"{fmt}\n{w} {h}\n{maxval}\n".encode()
    if fmt == "P5":
        path.write_bytes(header + raster.astype(np.uint8).tobytes())
    elif fmt == "P2":
        lines = "\n".join(" ".join(str(int(v)) for v in row) for row in raster)
        path.write_bytes(header + lines.encode() + b"\n")
    else:
        raise ValueError(f"unsupported PGM format {fmt!r}")
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    # magic, width, height, maxval; '#' comments allowed between tokens
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError("only 8-bit PGM files are supported")
    if magic == "P5":
        pos += 1  # single whitespace byte after maxval
        return np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w).copy()
    if magic == "P2":
        return np.array(data[pos:].split(), dtype=np.uint8).reshape(h, w)
    raise ValueError(f"not a PGM file (magic {magic!r})")


def quantize_pattern(img: PatternImage) -> list[tuple[str, np.ndarray]]:
    """8-bit rasters for a pattern, with the file-name suffix of each.

    Sample rows map into [1, 255] and every other row is 0, so the lit rows
    of the exported image are exactly the sample rows.  Complex patterns
    give an in-phase and a quadrature raster, each mapped from
    ``[-I_0, I_0]``; real patterns map ``[0, I_0]``.
    """
    cfg = img.config
    mask = cfg.sample_mask()

    def encode(v, lo):
        u = (np.clip(v, lo, cfg.amplitude) - lo) / (cfg.amplitude - lo)
        out = np.zeros(v.shape, dtype=np.uint8)
        out[mask] = (1 + np.rint(u[mask] * 254)).astype(np.uint8)
        return out

    if cfg.is_complex:
        return [("_i", encode(img.in_phase, -cfg.amplitude)),
                ("_q", encode(img.quadrature, -cfg.amplitude))]
    return [("", encode(img.data, 0.0))]


def write_pattern(img: PatternImage, stem, fmt: str = "P5") -> list[Path]:
    stem = Path(stem)
    return [
        write_pgm(stem.with_name(stem.name + suffix + ".pgm"), raster, fmt)
        for suffix, raster in quantize_pattern(img)
    ]


# ---------------------------------------------------------------- signal CSV


def _read_table(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header:
            raise ValidationError(f"{path}: empty file")
        names = [h.strip() for h in header.split(",")]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            try:
                table = np.loadtxt(fh, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise ValidationError(f"{path}: {exc}") from None
    if table.size == 0:
        raise ValidationError(f"{path}: no data rows")
    if table.shape[1] != len(names):
        raise ValidationError(f"{path}: {table.shape[1]} columns but header has {len(names)}")
    return names, table


def write_signal_csv(path, values: np.ndarray, t=None, columns=None, extra: dict | None = None) -> Path:
    """Write ``t,re,im`` (1-D values) or ``x,t,re,im`` (2-D values, one x per column).

    ``extra`` appends named columns shaped like ``values``.
    """
    path = Path(path)
    values = np.asarray(values)
    if t is None:
        t = np.arange(len(values))
    t = np.asarray(t)
    extra = extra or {}
    cols = []
    if values.ndim == 1:
        names = ["t", "re", "im"]
        cols = [t, values.real, np.imag(values)]
        cols += [np.asarray(v) for v in extra.values()]
    else:
        if columns is None:
            columns = np.arange(values.shape[1])
        xx, tt = np.meshgrid(np.asarray(columns), t)
        # column-major so each x block is contiguous
        names = ["x", "t", "re", "im"]
        cols = [xx.T.ravel(), tt.T.ravel(), values.real.T.ravel(), np.imag(values).T.ravel()]
        cols += [np.asarray(v).T.ravel() for v in extra.values()]
    names += list(extra)
    data = np.column_stack(cols)
    fmt = [FLOAT_FMT] * len(names)
    for i, n in enumerate(names):
        if n in ("x", "t"):
            fmt[i] = "%d"
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(names), comments="")
    return path


def read_signal_csv(path):
    """Return ``(columns, t, values, table)``.

    ``columns`` is None for a single-column ``t,re,im`` file; otherwise
    values are shaped ``(len(t), len(columns))``.  ``table`` maps every
    header name to its raw data, reshaped the same way.
    """
    names, data = _read_table(path)
    for need in ("t", "re", "im"):
        if need not in names:
            raise ValidationError(f"{path}: missing column {need!r}")
    col = {n: data[:, i] for i, n in enumerate(names)}
    if "x" not in col:
        t = col["t"].astype(int)
        return None, t, col["re"] + 1j * col["im"], col
    xs = np.unique(col["x"].astype(int))
    ts = np.unique(col["t"].astype(int))
    if len(data) != len(xs) * len(ts):
        raise ValidationError(f"{path}: every column must list the same instants")
    order = np.lexsort((col["t"], col["x"]))
    shaped = {n: v[order].reshape(len(xs), len(ts)).T for n, v in col.items()}
    return xs, ts, shaped["re"] + 1j * shaped["im"], shaped


def sampled_from_table(t: np.ndarray, values: np.ndarray, ts: int, n_dense: int | None = None,
                       real: bool = False) -> SampledSignal:
    """Check that instants are ``0, T_s, 2 T_s, ...`` and wrap them as a signal."""
    t = np.asarray(t, dtype=int)
    expected = np.arange(len(t)) * ts
    if not np.array_equal(t, expected):
        raise ValidationError(f"sample instants are not multiples n*T_s of T_s={ts} starting at 0")
    if n_dense is None:
        n_dense = len(t) * ts
    return SampledSignal(values.real if real else values, ts, n_dense)


# ---------------------------------------------------------------- calibration


def read_correspondences(path) -> Correspondences:
    names, data = _read_table(path)
    idx = {n: i for i, n in enumerate(names)}
    for need in ("Xw", "Yw", "Zw", "xc", "yc"):
        if need not in idx:
            raise ValidationError(f"{path}: missing column {need!r}")
    world = data[:, [idx["Xw"], idx["Yw"], idx["Zw"]]]
    pixels = data[:, [idx["xc"], idx["yc"]]]
    rows = data[:, idx["yp"]] if "yp" in idx else None
    return Correspondences(world, pixels, rows)


def write_correspondences(path, c: Correspondences) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["Xw", "Yw", "Zw", "xc", "yc"] + (["yp"] if c.rows is not None else [])
        w.writerow(head)
        for i in range(len(c)):
            row = list(c.world[i]) + list(c.pixels[i])
            if c.rows is not None:
                row.append(c.rows[i])
            w.writerow([FLOAT_FMT % v for v in row])
    return path


def write_calibration(path, camera: CameraProjection, residual_c: float,
                      projector: ProjectorProjection | None = None,
                      residual_p: float | None = None) -> Path:
    body = {
        "theta_c": camera.theta.tolist(),
        "theta_p": None if projector is None else projector.theta.tolist(),
        "residual_c": residual_c,
        "residual_p": residual_p,
    }
    path = Path(path)
    path.write_text(json.dumps(body, indent=2) + "\n")
    return path


def read_calibration(path) -> tuple[CameraProjection, ProjectorProjection]:
    try:
        body = json.loads(Path(path).read_text())
        camera = CameraProjection(body["theta_c"])
        if body.get("theta_p") is None:
            raise ValidationError(f"{path}: calibration has no projector parameters")
        return camera, ProjectorProjection(body["theta_p"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: malformed calibration file ({exc})") from None


# ---------------------------------------------------------------- PLY


def write_ply(path, points: np.ndarray, valid: np.ndarray, cols=None, rows=None) -> Path:
    """ASCII PLY with one vertex per pixel and a ``valid`` flag.

    Invalid vertices are written at the origin.
    """
    path = Path(path)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    ok = np.asarray(valid, dtype=bool).reshape(-1)
    pts = np.where(ok[:, None], pts, 0.0)
    if cols is None:
        cols = np.zeros(len(pts), dtype=int)
    if rows is None:
        rows = np.arange(len(pts))
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property double x",
        "property double y",
        "property double z",
        "property int col",
        "property int row",
        "property uchar valid",
        "end_header",
    ]
    data = np.column_stack([pts, np.ravel(cols), np.ravel(rows), ok.astype(int)])
    np.savetxt(path, data, fmt=[FLOAT_FMT] * 3 + ["%d"] * 3, delimiter=" ",
               header="\n".join(header), comments="")
    return path


def read_ply(path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "ply":
        raise ValidationError(f"{path}: not a PLY file")
    n = None
    props = []
    i = 1
    while lines[i] != "end_header":
        parts = lines[i].split()
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        elif parts[0] == "property":
            props.append(parts[-1])
        i += 1
    body = [ln.split() for ln in lines[i + 1 :] if ln.strip()]
    if n is None or len(body) != n:
        raise ValidationError(f"{path}: vertex count {n} does not match {len(body)} data lines")
    arr = np.array(body, dtype=float).reshape(n, len(props))
    return {p: arr[:, j] for j, p in enumerate(props)}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
