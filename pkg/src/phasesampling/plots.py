"""SVG line charts for experiment reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so repeated runs emit identical files
matplotlib.rcParams["svg.hashsalt"] = "phasesampling"
_META = {"Date": None, "Creator": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_spectrum(snapshot: dict, path, title: str = "") -> Path:
    order = np.argsort(snapshot["freqs"])
    f = snapshot["freqs"][order]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(f, snapshot["sampled"][order], color="tab:red", lw=0.8, label="sampled")
    ax.plot(f, snapshot["windowed"][order], color="tab:blue", lw=0.8, label="windowed")
    ax.set_xlabel("frequency (cycles/pixel)")
    ax.set_ylabel("|F|")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_recovery(truth: np.ndarray, recovered: dict[str, np.ndarray], samples_t, samples_v,
                  path, title: str = "") -> Path:
    t = np.arange(len(truth))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, truth.real, color="tab:green", lw=1.2, label="ground truth")
    colors = {"frequency": "tab:red", "spline": "tab:blue", "sinc": "tab:purple"}
    for name, v in recovered.items():
        ax.plot(t, v.real, color=colors.get(name), lw=0.8, label=name)
    ax.plot(samples_t, samples_v.real, "k.", ms=3, label="samples")
    ax.set_xlabel("t (pixels)")
    ax.set_ylabel("Re f(t)")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_sweep(ts: list[int], errors: dict[str, list[float]], ts_nyquist: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for name, e in errors.items():
        ax.semilogy(ts, np.maximum(e, 1e-17), "o-", label=name)
    ax.axvline(ts_nyquist, color="gray", ls="--", lw=0.8, label="Nyquist limit")
    ax.set_xlabel("T_s (pixels)")
    ax.set_ylabel("mean abs error")
    ax.legend()
    return _save(fig, path)
