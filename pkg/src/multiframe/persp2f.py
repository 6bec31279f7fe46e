"""Two-frame calibrated-perspective structure and motion.

Image coordinates live on a plane one unit in front of the focal point, so
a scene point at depth Z with bearing m = (x, y, 1) sits at Z*m in camera
coordinates.  Writing the motion between the two camera frames as
p2 = A p1 + t, the per-point depths can be eliminated, leaving one
bilinear constraint per correspondence:

    (x2, y2, 1) . E . (x1, y1, 1)^T = 0,   E = [t]_x A.

Nine or more correspondences determine E linearly up to scale; the
composite is then factored into rotation/translation-direction candidates
and the per-point depth systems pick the unique candidate with all depths
positive (chirality).  Global scale is unrecoverable: the gauge fixes the
distinguished point at unit distance from the first focal point.

Both frames are first re-expressed (a pure rotation about each focal
point) so the distinguished point lies on the optical axis; the recorded
rotations invert the recalculation afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TOL, Tolerances
from .dof import Regime
from .errors import (
    AmbiguityError,
    InputError,
    NotEssentialError,
    RankDeficientError,
)
from .geometry import Rotation

NINE_POINT_MESSAGE = (
    "nine correspondences are required to solve the composite matrix linearly "
    "(pass allow_eight=True to accept the 8-point generic minimum)"
)


def bearing(image_point) -> np.ndarray:
    u, v = float(image_point[0]), float(image_point[1])
    return np.array([u, v, 1.0])


@dataclass(frozen=True, eq=False)
class NormalizedPair:
    """Correspondences after rotating the distinguished point onto the axis."""

    labels: list[str]
    points1: dict[str, np.ndarray]
    points2: dict[str, np.ndarray]
    rot1: Rotation
    rot2: Rotation
    distinguished: str

    def original_points(self, frame: int) -> dict[str, np.ndarray]:
        """Invert the recorded recalculation (round-trip check)."""
        rot = (self.rot1 if frame == 1 else self.rot2).inverse()
        pts = self.points1 if frame == 1 else self.points2
        out = {}
        for lab, uv in pts.items():
            m = rot.apply(bearing(uv))
            out[lab] = np.array([m[0] / m[2], m[1] / m[2]])
        return out


def _axis_rotation(b: np.ndarray) -> Rotation:
    """Rotation taking the unit bearing ``b`` onto the optical axis."""
    b = b / np.linalg.norm(b)
    e3 = np.array([0.0, 0.0, 1.0])
    axis = np.cross(b, e3)
    s = np.linalg.norm(axis)
    c = float(b @ e3)
    if s < 1e-15:
        return Rotation.identity()
    return Rotation.from_axis_angle(axis / s, float(np.arctan2(s, c)))


def normalize_distinguished(
    points1: dict[str, np.ndarray],
    points2: dict[str, np.ndarray],
    distinguished: str,
) -> NormalizedPair:
    """Rotate both image frames so the distinguished point maps to (0, 0)."""
    if distinguished not in points1 or distinguished not in points2:
        raise InputError(f"distinguished label {distinguished!r} missing from a frame")
    rot1 = _axis_rotation(bearing(points1[distinguished]))
    rot2 = _axis_rotation(bearing(points2[distinguished]))
    out1, out2 = {}, {}
    for lab in points1:
        for rot, pts, out in ((rot1, points1, out1), (rot2, points2, out2)):
            m = rot.apply(bearing(pts[lab]))
            if m[2] <= 1e-12:
                raise InputError(f"label {lab!r} leaves the field of view when recalculated")
            out[lab] = np.array([m[0] / m[2], m[1] / m[2]])
    out1[distinguished] = np.zeros(2)
    out2[distinguished] = np.zeros(2)
    return NormalizedPair(sorted(points1), out1, out2, rot1, rot2, distinguished)


def elimination_constraint(e: np.ndarray, m1, m2) -> float:
    """Depth-free bilinear constraint residual for one correspondence."""
    return float(bearing(m2) @ np.asarray(e, dtype=float) @ bearing(m1))


def solve_composite(
    corr1: list[np.ndarray],
    corr2: list[np.ndarray],
    *,
    allow_eight: bool = False,
) -> tuple[np.ndarray, float, float]:
    """Minimum-norm unit-norm solution of the stacked bilinear system.

    Returns (E with unit Frobenius norm, smallest singular value of the
    stacked system, inconsistency ratio s_min/s_max).  Rank below 8 raises
    :class:`RankDeficientError`.
    """
    n = len(corr1)
    if n != len(corr2):
        raise InputError("correspondence lists differ in length")
    minimum = 8 if allow_eight else 9
    if n < minimum:
        raise InputError(NINE_POINT_MESSAGE)
    rows = np.empty((n, 9))
    for i, (p1, p2) in enumerate(zip(corr1, corr2)):
        rows[i] = np.outer(bearing(p2), bearing(p1)).reshape(-1)
    _, s, vt = np.linalg.svd(rows)
    if s[7] <= 1e-10 * s[0]:
        raise RankDeficientError("correspondence system has rank below 8")
    e = vt[-1].reshape(3, 3)
    e /= np.linalg.norm(e)
    s_min = float(s[8]) if n >= 9 else 0.0
    return e, s_min, float(s_min / s[0]) if s[0] > 0 else 0.0


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def decompose(
    e: np.ndarray, *, structure_tol: float | None = None, tol: Tolerances = TOL
) -> list[tuple[Rotation, np.ndarray]]:
    """Rotation/translation-direction candidates of a composite matrix.

    Factors E ~ [t]_x A; the four candidates (two rotations x two baseline
    signs) are returned in a deterministic order.  A violated
    essential-structure invariant raises :class:`NotEssentialError`.
    """
    e = np.asarray(e, dtype=float)
    if structure_tol is None:
        structure_tol = tol.essential_structure
    u, s, vt = np.linalg.svd(e)
    if s[0] <= 0:
        raise NotEssentialError("composite matrix is zero")
    if (s[0] - s[1]) / s[0] > structure_tol or s[2] / s[0] > structure_tol:
        raise NotEssentialError(
            f"singular values {s} break the essential structure "
            f"(tolerance {structure_tol:.2e}); correspondences are inconsistent"
        )
    if np.linalg.det(u) < 0:
        u = -u
    if np.linalg.det(vt) < 0:
        vt = -vt
    w = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = u[:, 2]
    candidates = []
    for rot_mat in (u @ w @ vt, u @ w.T @ vt):
        rot = Rotation(rot_mat)
        for sign in (1.0, -1.0):
            candidates.append((rot, sign * t))
    return candidates


@dataclass(frozen=True, eq=False)
class DepthVote:
    """Per-candidate chirality outcome."""

    depths: np.ndarray  # (n, 2), nan where excluded
    excluded: list[int]
    accepted: bool


def recover_depths(
    rotation: Rotation,
    translation: np.ndarray,
    corr1: list[np.ndarray],
    corr2: list[np.ndarray],
    *,
    tol: Tolerances = TOL,
) -> DepthVote:
    """Solve the per-point 3-equation depth system by linear elimination.

    Z1 * (A m1) - Z2 * m2 = -t per point; points whose system is singular
    (on the baseline) are excluded from the vote.  The candidate is
    accepted iff every included point has Z1 > 0 and Z2 > 0.
    """
    n = len(corr1)
    depths = np.full((n, 2), np.nan)
    excluded = []
    accepted = True
    a = rotation.matrix
    for i, (p1, p2) in enumerate(zip(corr1, corr2)):
        m1 = a @ bearing(p1)
        m2 = bearing(p2)
        mat = np.column_stack([m1, -m2])
        sv = np.linalg.svd(mat, compute_uv=False)
        if sv[1] <= tol.depth_singular * sv[0]:
            excluded.append(i)
            continue
        z, *_ = np.linalg.lstsq(mat, -translation, rcond=None)
        depths[i] = z
        if z[0] <= 0 or z[1] <= 0:
            accepted = False
    if len(excluded) == n:
        accepted = False
    return DepthVote(depths, excluded, accepted)


@dataclass(frozen=True, eq=False)
class MotionEstimate:
    """Recovered two-frame motion and structure (frame-1 camera coordinates)."""

    rotation: Rotation
    translation: np.ndarray | None  # unit direction, None when degenerate
    translation_scaled: np.ndarray | None  # gauge: distinguished depth = 1
    depths: dict[str, tuple[float, float]]
    points3d: dict[str, np.ndarray]
    distinguished: str
    baseline_degenerate: bool = False
    excluded_labels: list[str] = field(default_factory=list)
    candidates_tried: int = 0
    survivors: int = 1
    max_constraint_residual: float = 0.0


def _pure_rotation_fit(
    points1: dict[str, np.ndarray], points2: dict[str, np.ndarray]
) -> tuple[Rotation, float]:
    """Best bearing-aligning rotation and its worst angular residual."""
    labels = sorted(points1)
    b1 = np.array([bearing(points1[l]) for l in labels])
    b2 = np.array([bearing(points2[l]) for l in labels])
    b1 /= np.linalg.norm(b1, axis=1, keepdims=True)
    b2 /= np.linalg.norm(b2, axis=1, keepdims=True)
    h = b1.T @ b2
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = Rotation(vt.T @ np.diag([1.0, 1.0, d]) @ u.T)
    aligned = b1 @ rot.matrix.T
    dots = np.clip(np.sum(aligned * b2, axis=1), -1.0, 1.0)
    return rot, float(np.max(np.arccos(dots)))


def two_frame_reconstruct(
    dataset,
    *,
    distinguished: str | None = None,
    allow_eight: bool = False,
    tol: Tolerances = TOL,
) -> MotionEstimate:
    """Full pipeline: normalize, solve, decompose, vote, denormalize."""
    if dataset.regime is not Regime.PERSPECTIVE_CALIBRATED:
        raise InputError("two-frame reconstruction needs a calibrated-perspective dataset")
    if dataset.n_frames != 2:
        raise InputError("two-frame reconstruction needs exactly 2 frames")
    labels = dataset.labels
    minimum = 8 if allow_eight else 9
    if len(labels) < minimum:
        raise InputError(NINE_POINT_MESSAGE)
    if distinguished is None:
        distinguished = labels[0]
    pts1 = dataset.frames[0].points
    pts2 = dataset.frames[1].points

    # zero-baseline scripts reduce to a pure rotation of the bearings; depths
    # are unrecoverable there, so report the rotation and flag the baseline
    rot_fit, resid = _pure_rotation_fit(pts1, pts2)
    if resid < 1e-7:
        return MotionEstimate(
            rotation=rot_fit,
            translation=None,
            translation_scaled=None,
            depths={},
            points3d={},
            distinguished=distinguished,
            baseline_degenerate=True,
            candidates_tried=0,
            survivors=0,
        )

    norm = normalize_distinguished(pts1, pts2, distinguished)
    corr1 = [norm.points1[l] for l in labels]
    corr2 = [norm.points2[l] for l in labels]
    e, s_min, inconsistency = solve_composite(corr1, corr2, allow_eight=allow_eight)
    structure_tol = max(tol.essential_structure, 100.0 * inconsistency)
    candidates = decompose(e, structure_tol=structure_tol, tol=tol)
    votes = [recover_depths(a, t, corr1, corr2, tol=tol) for a, t in candidates]
    winners = [i for i, v in enumerate(votes) if v.accepted]
    if len(winners) != 1:
        raise AmbiguityError(
            f"chirality vote left {len(winners)} of {len(candidates)} candidates"
        )
    a_norm, t_norm = candidates[winners[0]]
    vote = votes[winners[0]]

    d_idx = labels.index(distinguished)
    z_dist = vote.depths[d_idx, 0]
    if not np.isfinite(z_dist) or z_dist <= 0:
        raise AmbiguityError("distinguished point depth is unrecoverable")
    scale = 1.0 / z_dist
    depths = {}
    points3d = {}
    excluded_labels = []
    worst = 0.0
    for i, lab in enumerate(labels):
        if i in vote.excluded:
            excluded_labels.append(lab)
            continue
        z1, z2 = vote.depths[i] * scale
        depths[lab] = (float(z1), float(z2))
        p_norm = z1 * bearing(norm.points1[lab])
        points3d[lab] = norm.rot1.inverse().apply(p_norm)
        m1 = bearing(norm.points1[lab])
        m2 = bearing(norm.points2[lab])
        worst = max(
            worst,
            abs(float(m2 @ e @ m1)) / (np.linalg.norm(m1) * np.linalg.norm(m2)),
        )

    rotation = norm.rot2.inverse().compose(Rotation(a_norm.matrix)).compose(norm.rot1)
    t_orig = norm.rot2.inverse().apply(t_norm)
    return MotionEstimate(
        rotation=rotation,
        translation=t_orig,
        translation_scaled=t_orig * scale,
        depths=depths,
        points3d=points3d,
        distinguished=distinguished,
        excluded_labels=excluded_labels,
        candidates_tried=len(candidates),
        survivors=1,
        max_constraint_residual=worst,
    )


def relative_truth_motion(dataset) -> tuple[Rotation, np.ndarray]:
    """Ground-truth frame-1 to frame-2 camera motion (rotation, translation)."""
    t = dataset.truth
    if t is None or t.motions is None:
        raise InputError("dataset carries no object-motion truth")
    m1, m2 = t.motions[0], t.motions[1]
    rel = m2.compose(m1.inverse())
    return rel.rotation, rel.translation
