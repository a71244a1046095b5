"""Phase sampling profilometry.

A row-sampled complex carrier is projected onto a scene; each camera
column is a sampled signal whose dense phase is recovered by ideal
low-pass filtering and triangulated against the projector row it encodes.
"""

from __future__ import annotations

from .errors import PSPError
from .geometry import (
    CameraProjection,
    Correspondences,
    ProjectorProjection,
    project_camera,
    project_projector,
    solve_camera,
    solve_projector,
    triangulate,
    triangulate_many,
)
from .recovery import (
    DenseSignal,
    extract_phase,
    phase_to_projector_row,
    reconstruct_sinc,
    recover_frequency,
    recover_spline,
    recovery_error,
)
from .signal import PatternConfig, Scene, deform_pattern, extract_column, generate_pattern
from .simkit import ExperimentSpec, SceneSpec, run_experiment, sweep_sampling_period

__version__ = "0.1.0"

__all__ = [
    "PSPError",
    "CameraProjection",
    "ProjectorProjection",
    "Correspondences",
    "solve_camera",
    "solve_projector",
    "project_camera",
    "project_projector",
    "triangulate",
    "triangulate_many",
    "PatternConfig",
    "Scene",
    "generate_pattern",
    "deform_pattern",
    "extract_column",
    "DenseSignal",
    "recover_frequency",
    "reconstruct_sinc",
    "recover_spline",
    "extract_phase",
    "phase_to_projector_row",
    "recovery_error",
    "ExperimentSpec",
    "SceneSpec",
    "run_experiment",
    "sweep_sampling_period",
]
