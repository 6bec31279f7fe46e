"""Dataset (de)serialization: one UTF-8 JSON document per dataset.

Numbers are written as decimals with 17 significant digits, which
round-trips IEEE doubles exactly; key order is fixed, so identical
datasets serialize to identical bytes.  Reading accepts any JSON layout
of the documented schema.

Top-level keys: ``regime``, ``frames`` (each with ``id``, ``points``,
``curves``, optional ``epipoles``), optional ``truth`` (``points3d`` plus
``motions`` with row-major rotations, or ``poses``; optional ``curves3d``)
and optional ``noise`` metadata.
"""

from __future__ import annotations

import json

import numpy as np

from .dof import Regime
from .errors import ParseError
from .geometry import CameraPose, RigidMotion, Rotation
from .scene import FrameObs, MultiframeDataset, NoiseSpec, TruthBlock


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise ParseError("non-finite number cannot be serialized")
    out = format(float(x), ".17g")
    # JSON requires a leading digit arrangement that float() already gives
    return out


def _fmt_vec(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in np.asarray(v, dtype=float).ravel()) + "]"


def _fmt_mat_rows(m) -> str:
    return _fmt_vec(np.asarray(m, dtype=float).reshape(-1))


def _fmt_samples(samples) -> str:
    return "[" + ", ".join(_fmt_vec(row) for row in np.asarray(samples, dtype=float)) + "]"


def write_dataset(dataset: MultiframeDataset) -> bytes:
    """Serialize losslessly with stable field ordering."""
    out: list[str] = []
    out.append("{")
    out.append(f'  "regime": {json.dumps(dataset.regime.value)},')
    out.append('  "frames": [')
    for fi, f in enumerate(dataset.frames):
        out.append("    {")
        out.append(f'      "id": {int(f.id)},')
        pts = ", ".join(
            f"{json.dumps(lab)}: {_fmt_vec(f.points[lab])}" for lab in sorted(f.points)
        )
        comma = "," if (f.curves or f.epipoles) else ""
        out.append(f'      "points": {{{pts}}}{comma}')
        if f.curves:
            rows = []
            for c in f.curves:
                ends = (
                    f', "endpoints": {json.dumps(list(c["endpoints"]))}'
                    if c.get("endpoints")
                    else ""
                )
                rows.append(
                    f'{{"id": {json.dumps(c["id"])}, "samples": {_fmt_samples(c["samples"])}{ends}}}'
                )
            comma = "," if f.epipoles else ""
            out.append(f'      "curves": [{", ".join(rows)}]{comma}')
        if f.epipoles:
            epi = ", ".join(
                f'"{j}": {_fmt_vec(f.epipoles[j])}' for j in sorted(f.epipoles)
            )
            out.append(f'      "epipoles": {{{epi}}}')
        out.append("    }" + ("," if fi < len(dataset.frames) - 1 else ""))
    tail = "," if (dataset.truth is not None or dataset.noise is not None) else ""
    out.append("  ]" + tail)
    if dataset.truth is not None:
        t = dataset.truth
        out.append('  "truth": {')
        pts = ", ".join(
            f"{json.dumps(lab)}: {_fmt_vec(t.points3d[lab])}" for lab in sorted(t.points3d)
        )
        more = t.motions is not None or t.poses is not None or t.curves3d
        out.append(f'    "points3d": {{{pts}}}{"," if more else ""}')
        if t.motions is not None:
            rows = [
                f'{{"rotation": {_fmt_mat_rows(m.rotation.matrix)}, '
                f'"translation": {_fmt_vec(m.translation)}}}'
                for m in t.motions
            ]
            out.append(f'    "motions": [{", ".join(rows)}]' + ("," if t.curves3d else ""))
        if t.poses is not None:
            rows = []
            for p in t.poses:
                focal = "null" if p.focal is None else _fmt_vec(p.focal)
                rows.append(
                    f'{{"origin": {_fmt_vec(p.origin)}, "basis_u": {_fmt_vec(p.basis_u)}, '
                    f'"basis_v": {_fmt_vec(p.basis_v)}, "focal": {focal}}}'
                )
            out.append(f'    "poses": [{", ".join(rows)}]' + ("," if t.curves3d else ""))
        if t.curves3d:
            rows = [
                f'{{"id": {json.dumps(c["id"])}, "samples": {_fmt_samples(c["samples"])}}}'
                for c in t.curves3d
            ]
            out.append(f'    "curves3d": [{", ".join(rows)}]')
        out.append("  }" + ("," if dataset.noise is not None else ""))
    if dataset.noise is not None:
        out.append(
            f'  "noise": {{"sigma": {_fmt(dataset.noise.sigma)}, '
            f'"seed": {int(dataset.noise.seed)}}}'
        )
    out.append("}")
    return ("\n".join(out) + "\n").encode("utf-8")


def read_dataset(data: bytes | str) -> MultiframeDataset:
    """Parse a serialized dataset; malformed input raises :class:`ParseError`."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    try:
        regime = Regime(doc["regime"])
    except KeyError:
        raise ParseError("missing top-level key 'regime'")
    except ValueError:
        raise ParseError(f"unknown regime tag {doc.get('regime')!r}")
    raw_frames = doc.get("frames")
    if not isinstance(raw_frames, list) or not raw_frames:
        raise ParseError("'frames' must be a non-empty array")
    frames = []
    for k, rf in enumerate(raw_frames):
        where = f"frames[{k}]"
        if not isinstance(rf, dict) or "id" not in rf or "points" not in rf:
            raise ParseError(f"{where}: each frame needs 'id' and 'points'")
        pts = {}
        for lab, uv in rf["points"].items():
            arr = _parse_vec(uv, 2, f"{where}.points[{lab!r}]")
            pts[lab] = arr
        curves = []
        for ci, rc in enumerate(rf.get("curves", []) or []):
            cw = f"{where}.curves[{ci}]"
            if not isinstance(rc, dict) or "id" not in rc or "samples" not in rc:
                raise ParseError(f"{cw}: each curve needs 'id' and 'samples'")
            samples = np.array(
                [_parse_vec(s, 2, f"{cw}.samples[{si}]") for si, s in enumerate(rc["samples"])]
            )
            entry = {"id": rc["id"], "samples": samples}
            if rc.get("endpoints"):
                entry["endpoints"] = list(rc["endpoints"])
            curves.append(entry)
        epipoles = None
        if rf.get("epipoles"):
            epipoles = {}
            for j, uv in rf["epipoles"].items():
                try:
                    jj = int(j)
                except ValueError:
                    raise ParseError(f"{where}.epipoles: frame id {j!r} is not an integer")
                epipoles[jj] = _parse_vec(uv, 2, f"{where}.epipoles[{j}]")
        frames.append(FrameObs(int(rf["id"]), pts, curves, epipoles))
    truth = None
    if "truth" in doc and doc["truth"] is not None:
        truth = _parse_truth(doc["truth"])
    noise = None
    if "noise" in doc and doc["noise"] is not None:
        n = doc["noise"]
        noise = NoiseSpec(float(n["sigma"]), int(n.get("seed", 0)))
    return MultiframeDataset(regime, frames, truth, noise)


def _parse_vec(v, dim: int, where: str) -> np.ndarray:
    if not isinstance(v, (list, tuple)) or len(v) != dim:
        raise ParseError(f"{where}: expected a {dim}-vector")
    try:
        arr = np.array([float(x) for x in v])
    except (TypeError, ValueError):
        raise ParseError(f"{where}: non-numeric entry")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{where}: non-finite entry")
    return arr


def _parse_truth(raw) -> TruthBlock:
    if not isinstance(raw, dict) or "points3d" not in raw:
        raise ParseError("'truth' must be an object with 'points3d'")
    pts = {
        lab: _parse_vec(p, 3, f"truth.points3d[{lab!r}]") for lab, p in raw["points3d"].items()
    }
    motions = None
    if raw.get("motions") is not None:
        motions = []
        for i, rm in enumerate(raw["motions"]):
            mat = np.array([float(x) for x in rm["rotation"]], dtype=float)
            if mat.size != 9:
                raise ParseError(f"truth.motions[{i}]: rotation must have 9 entries")
            motions.append(
                RigidMotion(
                    Rotation(mat.reshape(3, 3)),
                    _parse_vec(rm["translation"], 3, f"truth.motions[{i}].translation"),
                )
            )
    poses = None
    if raw.get("poses") is not None:
        poses = []
        for i, rp in enumerate(raw["poses"]):
            where = f"truth.poses[{i}]"
            focal = None
            if rp.get("focal") is not None:
                focal = _parse_vec(rp["focal"], 3, f"{where}.focal")
            poses.append(
                CameraPose(
                    _parse_vec(rp["origin"], 3, f"{where}.origin"),
                    _parse_vec(rp["basis_u"], 3, f"{where}.basis_u"),
                    _parse_vec(rp["basis_v"], 3, f"{where}.basis_v"),
                    focal,
                )
            )
    curves3d = None
    if raw.get("curves3d"):
        curves3d = []
        for ci, rc in enumerate(raw["curves3d"]):
            samples = np.array(
                [
                    _parse_vec(s, 3, f"truth.curves3d[{ci}].samples[{si}]")
                    for si, s in enumerate(rc["samples"])
                ]
            )
            curves3d.append({"id": rc["id"], "samples": samples})
    return TruthBlock(pts, motions, poses, curves3d)
