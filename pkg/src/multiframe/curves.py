"""Lifting non-traceable curve points to 3-D once poses are known.

A curve interior point D' in image 1 has no correspondence of its own.
Its viewing ray, projected into image 2, must cross the second image of
the curve; the crossing D'' is the missing correspondence (monotone
arc-length continuity resolves multiple crossings).  Triangulating the two
viewing rays then lifts the point.  Under orthographic projection the
focal points sit at infinity and all transfer lines are parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TOL, Tolerances
from .errors import DegenerateGeometry, InputError
from .geometry import CameraPose, Ray, project, ray_through, triangulate_midpoint


@dataclass(frozen=True, eq=False)
class ImageCurve:
    """Ordered image samples of one smooth curve."""

    samples: np.ndarray  # (n, 2)
    endpoint_labels: tuple[str, str] | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] < 2:
            raise InputError("curve needs >= 2 image samples")
        if np.any(np.linalg.norm(np.diff(s, axis=0), axis=1) == 0.0):
            raise InputError("consecutive curve samples must be distinct")
        object.__setattr__(self, "samples", s)

    @property
    def arc_positions(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.samples, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def reversed(self) -> "ImageCurve":
        labels = None
        if self.endpoint_labels is not None:
            labels = (self.endpoint_labels[1], self.endpoint_labels[0])
        return ImageCurve(self.samples[::-1].copy(), labels)


@dataclass(frozen=True, eq=False)
class Line2D:
    point: np.ndarray
    direction: np.ndarray  # unit


@dataclass(frozen=True, eq=False)
class TransferHit:
    point: np.ndarray
    arc_pos: float
    segment: int
    tangent: bool


class TransferGap(DegenerateGeometry):
    """The transfer line misses the second curve (occlusion or coarse sampling)."""


@dataclass(frozen=True, eq=False)
class SpaceCurve:
    """Lifted 3-D samples with per-sample triangulation gaps."""

    points: np.ndarray  # (m, 3)
    gaps: np.ndarray  # (m,)
    source_indices: list[int]
    matches2: np.ndarray  # (m, 2) matched image-2 points
    holes: list[int] = field(default_factory=list)
    flagged: list[int] = field(default_factory=list)


def epipolar_line(d1, pose1: CameraPose, pose2: CameraPose, *, tol: Tolerances = TOL) -> Line2D:
    """Image in frame 2 of the viewing ray of ``d1`` in frame 1."""
    ray = ray_through(np.asarray(d1, dtype=float), pose1)
    if pose2.is_orthographic:
        p_a = project(ray.point_at(0.0), pose2)
        p_b = project(ray.point_at(1.0), pose2)
        d = p_b - p_a
        n = np.linalg.norm(d)
        if n < tol.ray_parallel:
            raise DegenerateGeometry(
                "viewing ray projects to a single point in the second frame"
            )
        return Line2D(p_a, d / n)
    f2 = pose2.focal
    # whole-line degeneracy: second focal point on the viewing ray
    w = f2 - ray.origin
    if np.linalg.norm(w - (w @ ray.direction) * ray.direction) < tol.ray_parallel * max(
        1.0, np.linalg.norm(w)
    ):
        raise DegenerateGeometry("second focal point lies on the viewing ray")
    n2 = pose2.normal
    if float((pose2.origin - f2) @ n2) < 0:
        n2 = -n2
    alpha = float((ray.origin - f2) @ n2)
    beta = float(ray.direction @ n2)
    span = max(1.0, abs(alpha), np.linalg.norm(ray.origin - f2))
    if abs(beta) < 1e-14:
        if alpha <= 0:
            raise DegenerateGeometry("viewing ray lies behind the second camera")
        t_a, t_b = 0.0, span
    else:
        t_star = -alpha / beta
        step = span if beta > 0 else -span
        t_a, t_b = t_star + 0.25 * step, t_star + 1.25 * step
    p_a = project(ray.point_at(t_a), pose2)
    p_b = project(ray.point_at(t_b), pose2)
    d = p_b - p_a
    n = np.linalg.norm(d)
    if n < 1e-14:
        raise DegenerateGeometry("transfer line collapses to a point")
    return Line2D(p_a, d / n)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def transfer_point(
    line: Line2D,
    curve2: ImageCurve,
    prev_pos: float,
    *,
    scale: float,
    tol: Tolerances = TOL,
) -> TransferHit:
    """Intersect the transfer line with the polyline, monotone in arc length.

    Candidates earlier than ``prev_pos`` are rejected; among the rest the
    nearest one wins.  Near-tangency (line within ``tol.tangency`` angular
    of a segment it touches) marks the hit ill-conditioned.  No admissible
    intersection raises :class:`TransferGap`.
    """
    band = tol.transfer_band * scale
    samples = curve2.samples
    arc = curve2.arc_positions
    hits: list[TransferHit] = []
    for j in range(len(samples) - 1):
        q0, q1 = samples[j], samples[j + 1]
        seg = q1 - q0
        seg_len = float(np.linalg.norm(seg))
        denom = _cross2(seg, line.direction)
        sin_angle = abs(denom) / seg_len
        if sin_angle < tol.tangency:
            # parallel: a hit only if the segment rides on the line
            d0 = abs(_cross2(line.direction, q0 - line.point))
            if d0 <= band:
                hits.append(TransferHit(q0.copy(), float(arc[j]), j, True))
            continue
        w = _cross2(line.point - q0, line.direction) / denom
        if -band / seg_len <= w <= 1.0 + band / seg_len:
            wc = min(max(w, 0.0), 1.0)
            hits.append(
                TransferHit(
                    q0 + wc * seg,
                    float(arc[j] + wc * seg_len),
                    j,
                    sin_angle < 1e3 * tol.tangency,
                )
            )
    if not hits:
        raise TransferGap("transfer line misses the projected curve")
    # dedupe vertex double-hits from adjacent segments
    hits.sort(key=lambda h: h.arc_pos)
    uniq = [hits[0]]
    for h in hits[1:]:
        if h.arc_pos - uniq[-1].arc_pos > band:
            uniq.append(h)
        elif h.tangent and not uniq[-1].tangent:
            pass  # keep the better-conditioned duplicate
    admissible = [h for h in uniq if h.arc_pos >= prev_pos - band]
    if not admissible:
        raise TransferGap("every crossing precedes the previous match")
    return min(admissible, key=lambda h: h.arc_pos - prev_pos)


def lift_curve(
    curve1: ImageCurve,
    curve2: ImageCurve,
    pose1: CameraPose,
    pose2: CameraPose,
    *,
    tol: Tolerances = TOL,
) -> SpaceCurve:
    """Sweep curve 1's samples, transfer each into image 2, triangulate.

    The sweep direction follows the matched endpoint labels: curve 2 is
    reversed when its labels run the other way.  Samples whose transfer
    fails are recorded as holes; near-tangent transfers are flagged and
    excluded rather than interpolated.
    """
    if (
        curve1.endpoint_labels is not None
        and curve2.endpoint_labels is not None
        and curve1.endpoint_labels == tuple(reversed(curve2.endpoint_labels))
    ):
        curve2 = curve2.reversed()
    scale = max(
        float(np.max(np.abs(curve1.samples))), float(np.max(np.abs(curve2.samples))), 1e-12
    )
    points = []
    gaps = []
    matches = []
    kept = []
    holes: list[int] = []
    flagged: list[int] = []
    prev = 0.0
    for i, d1 in enumerate(curve1.samples):
        try:
            line = epipolar_line(d1, pose1, pose2, tol=tol)
            hit = transfer_point(line, curve2, prev, scale=scale, tol=tol)
        except TransferGap:
            holes.append(i)
            continue
        except DegenerateGeometry:
            flagged.append(i)
            continue
        prev = hit.arc_pos
        if hit.tangent:
            flagged.append(i)
            continue
        r1 = ray_through(d1, pose1)
        r2 = ray_through(hit.point, pose2)
        try:
            p, gap = triangulate_midpoint(r1, r2, tol=tol)
        except DegenerateGeometry:
            flagged.append(i)
            continue
        points.append(p)
        gaps.append(gap)
        matches.append(hit.point)
        kept.append(i)
    return SpaceCurve(
        np.array(points).reshape(-1, 3),
        np.array(gaps),
        kept,
        np.array(matches).reshape(-1, 2),
        holes,
        flagged,
    )


def curves_from_dataset(dataset, frame_a: int = 0, frame_b: int = 1):
    """Paired image curves of two frames, keyed by curve id."""
    fa, fb = dataset.frames[frame_a], dataset.frames[frame_b]
    by_id = {c["id"]: c for c in fb.curves}
    out = {}
    for c in fa.curves:
        if c["id"] not in by_id:
            continue
        ends_a = tuple(c["endpoints"]) if c.get("endpoints") else None
        cb = by_id[c["id"]]
        ends_b = tuple(cb["endpoints"]) if cb.get("endpoints") else None
        out[c["id"]] = (
            ImageCurve(c["samples"], ends_a),
            ImageCurve(cb["samples"], ends_b),
        )
    return out
