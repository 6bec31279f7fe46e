"""Recovery of rigid 3-D structure and motion from multi-frame 2-D projections."""

from .config import Tolerances, default_tolerances
from .dof import (
    DofVerdict,
    FeatureCount,
    Regime,
    dof_orthographic,
    dof_perspective_calibrated,
    dof_uncalibrated,
    dof_verdict,
    verdict_table,
)
from .geometry import (
    CameraPose,
    Ray,
    RigidMotion,
    Rotation,
    apply_motion,
    best_fit_motion,
    best_fit_rotation,
    project,
    project_orthographic,
    project_perspective,
    ray_through,
    triangulate_midpoint,
)

__version__ = "0.1.0"

__all__ = [
    "CameraPose",
    "DofVerdict",
    "FeatureCount",
    "Ray",
    "Regime",
    "RigidMotion",
    "Rotation",
    "Tolerances",
    "apply_motion",
    "best_fit_motion",
    "best_fit_rotation",
    "default_tolerances",
    "dof_orthographic",
    "dof_perspective_calibrated",
    "dof_uncalibrated",
    "dof_verdict",
    "project",
    "project_orthographic",
    "project_perspective",
    "ray_through",
    "triangulate_midpoint",
    "verdict_table",
]
