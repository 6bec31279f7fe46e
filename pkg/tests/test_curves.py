import numpy as np
import pytest

from multiframe.curves import (
    ImageCurve,
    TransferGap,
    curves_from_dataset,
    epipolar_line,
    lift_curve,
    transfer_point,
)
from multiframe.dof import Regime
from multiframe.errors import DegenerateGeometry
from multiframe.geometry import CameraPose, project, vec2, vec3
from multiframe.scene import (
    MotionScript,
    random_arc_scene,
    random_motion_script,
    render,
    truth_poses,
)


def arc_dataset(seed, n_samples=100):
    scene = random_arc_scene(seed, n_samples=n_samples)
    script = random_motion_script(seed + 1, 2, Regime.PERSPECTIVE_CALIBRATED, scene)
    ds = render(scene, script, Regime.PERSPECTIVE_CALIBRATED)
    return ds, scene


def scene_diameter(scene):
    pts = np.array(list(scene.points.values()))
    return float(np.max(np.linalg.norm(pts[:, None] - pts[None, :], axis=2)))


class TestEpipolarLine:
    def test_line_passes_through_corresponding_image(self):
        ds, scene = arc_dataset(1, n_samples=30)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        for lab in ds.labels:
            img1 = ds.frames[0].points[lab]
            img2 = ds.frames[1].points[lab]
            line = epipolar_line(img1, p1, p2)
            off = img2 - line.point
            dist = abs(off[0] * line.direction[1] - off[1] * line.direction[0])
            assert dist < 1e-10

    def test_orthographic_lines_parallel(self):
        pose1 = CameraPose.canonical_orthographic()
        pose2 = CameraPose(
            vec3(0, 0, 0),
            vec3(np.cos(0.4), 0, -np.sin(0.4)),
            vec3(0, 1, 0),
            None,
        )
        lines = [
            epipolar_line(vec2(u, v), pose1, pose2)
            for u, v in [(-1.2, 0.3), (0.5, -0.7), (2.0, 1.0)]
        ]
        for a, b in zip(lines, lines[1:]):
            sin = abs(a.direction[0] * b.direction[1] - a.direction[1] * b.direction[0])
            assert sin < 1e-12

    def test_two_point_construction_oracle(self):
        # line coefficients vs joining the projections of two ray points
        ds, _ = arc_dataset(2, n_samples=10)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        from multiframe.geometry import ray_through

        img1 = ds.frames[0].points[ds.labels[0]]
        line = epipolar_line(img1, p1, p2)
        ray = ray_through(img1, p1)
        for t in (1.5, 2.5, 4.0):
            q = project(ray.point_at(t), p2)
            off = q - line.point
            dist = abs(off[0] * line.direction[1] - off[1] * line.direction[0])
            assert dist < 1e-9

    def test_focal_on_ray_degenerate(self):
        pose1 = CameraPose.canonical_perspective()
        # second camera focal sits on the viewing ray of (0,0)
        pose2 = CameraPose(
            vec3(0, 0, 2.5), vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1.5)
        )
        with pytest.raises(DegenerateGeometry):
            epipolar_line(vec2(0, 0), pose1, pose2)


class TestTransferPoint:
    def make_line(self, point, direction):
        from multiframe.curves import Line2D

        d = np.asarray(direction, dtype=float)
        return Line2D(np.asarray(point, dtype=float), d / np.linalg.norm(d))

    def test_crossing_selected(self):
        curve = ImageCurve(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]]))
        line = self.make_line([0.5, -1.0], [0.0, 1.0])
        hit = transfer_point(line, curve, 0.0, scale=2.0)
        assert np.allclose(hit.point, [0.5, 0.0])
        assert not hit.tangent

    def test_monotone_rule_skips_earlier_crossing(self):
        # S-shaped polyline crossed twice by a vertical line
        curve = ImageCurve(
            np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        )
        line = self.make_line([0.5, -1.0], [0.0, 1.0])
        first = transfer_point(line, curve, 0.0, scale=2.0)
        assert np.allclose(first.point, [0.5, 0.0])
        later = transfer_point(line, curve, 1.5, scale=2.0)
        assert np.allclose(later.point, [0.5, 1.0])

    def test_no_crossing_is_a_gap(self):
        curve = ImageCurve(np.array([[0.0, 0.0], [1.0, 0.0]]))
        line = self.make_line([2.0, 1.0], [0.0, 1.0])
        with pytest.raises(TransferGap):
            transfer_point(line, curve, 0.0, scale=2.0)

    def test_endpoint_near_miss_within_band(self):
        curve = ImageCurve(np.array([[0.0, 0.0], [1.0, 0.0]]))
        line = self.make_line([1.0 + 5e-7, -1.0], [0.0, 1.0])
        hit = transfer_point(line, curve, 0.0, scale=1.0)
        assert np.allclose(hit.point, [1.0, 0.0], atol=1e-6)

    def test_generator_sweep_matches_truth(self):
        # consecutive sweep: every transfer lands on the matching vertex
        ds, _ = arc_dataset(3, n_samples=60)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        c1 = ds.frames[0].curves[0]["samples"]
        c2 = ImageCurve(ds.frames[1].curves[0]["samples"])
        prev = 0.0
        for k in range(len(c1)):
            line = epipolar_line(c1[k], p1, p2)
            hit = transfer_point(line, c2, prev, scale=5.0)
            assert np.linalg.norm(hit.point - c2.samples[k]) < 1e-8
            prev = hit.arc_pos


class TestLiftCurve:
    def test_arc_lifts_to_truth(self):
        ds, scene = arc_dataset(4, n_samples=100)
        diam = scene_diameter(scene)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        pairs = curves_from_dataset(ds)
        c1, c2 = pairs["arc"]
        lifted = lift_curve(c1, c2, p1, p2)
        assert lifted.holes == []
        truth = scene.curves[0].samples
        assert len(lifted.source_indices) >= 98
        errs = [
            np.linalg.norm(p - truth[i])
            for p, i in zip(lifted.points, lifted.source_indices)
        ]
        assert max(errs) < 1e-6 * diam
        assert np.all(lifted.gaps < 1e-9)

    def test_reprojection_of_lifted_points(self):
        ds, scene = arc_dataset(5, n_samples=50)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        pairs = curves_from_dataset(ds)
        c1, c2 = pairs["arc"]
        lifted = lift_curve(c1, c2, p1, p2)
        scale = max(np.max(np.abs(c1.samples)), np.max(np.abs(c2.samples)))
        for p, i, m2 in zip(lifted.points, lifted.source_indices, lifted.matches2):
            assert np.linalg.norm(project(p, p1) - c1.samples[i]) < 1e-8 * scale
            assert np.linalg.norm(project(p, p2) - m2) < 1e-8 * scale

    def test_monotone_match_positions(self):
        ds, _ = arc_dataset(6, n_samples=80)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        c1, c2 = curves_from_dataset(ds)["arc"]
        lifted = lift_curve(c1, c2, p1, p2)
        arc = c2.arc_positions
        pos = []
        for m in lifted.matches2:
            d = np.linalg.norm(c2.samples - m[None, :], axis=1)
            pos.append(arc[int(np.argmin(d))])
        assert all(b >= a - 1e-9 for a, b in zip(pos, pos[1:]))

    def test_reversed_second_curve_handled(self):
        ds, scene = arc_dataset(7, n_samples=40)
        diam = scene_diameter(scene)
        p1, p2 = truth_poses(ds, 0), truth_poses(ds, 1)
        c1, c2 = curves_from_dataset(ds)["arc"]
        flipped = c2.reversed()
        lifted = lift_curve(c1, flipped, p1, p2)
        truth = scene.curves[0].samples
        errs = [
            np.linalg.norm(p - truth[i])
            for p, i in zip(lifted.points, lifted.source_indices)
        ]
        assert max(errs) < 1e-6 * diam

    def test_planar_curve_constant_depth_under_orthography(self):
        # planar curve parallel to both image planes: all depths equal
        t = np.linspace(0, np.pi / 2, 40)
        samples = np.stack([np.cos(t), np.sin(t), np.full_like(t, 1.3)], axis=1)
        pose1 = CameraPose.canonical_orthographic()
        pose2 = CameraPose(
            vec3(0, 0, 0), vec3(1, 0, 0), vec3(0, 1, 0), None
        )  # same plane: depths along +z
        img1 = ImageCurve(np.array([project(p, pose1) for p in samples]))
        img2 = ImageCurve(np.array([project(p, pose2) for p in samples]))
        # views must differ for triangulation: tilt the second camera
        c, s = np.cos(0.5), np.sin(0.5)
        pose2 = CameraPose(vec3(0, 0, 0), vec3(c, 0, -s), vec3(0, 1, 0), None)
        img2 = ImageCurve(np.array([project(p, pose2) for p in samples]))
        lifted = lift_curve(img1, img2, pose1, pose2)
        depths = lifted.points[:, 2]
        assert np.max(np.abs(depths - depths[0])) < 1e-9

    def test_epipolar_plane_segment_flagged(self):
        # a straight run along an epipolar plane rides the transfer line
        pose1 = CameraPose.canonical_perspective()
        pose2 = CameraPose(
            vec3(1.5, 0, 1.0),
            vec3(np.cos(-0.45), 0, -np.sin(-0.45)),
            vec3(0, 1, 0),
            vec3(1.5, 0, 0) - vec3(np.sin(0.45), 0, np.cos(0.45)) * 0 + vec3(0, 0, 0),
        )
        pose2 = CameraPose(vec3(1.5, 0, 1.0), vec3(1, 0, 0), vec3(0, 1, 0), vec3(1.5, 0, 0))
        # baseline is along +x: points with constant (y, z) share an epipolar plane
        run = np.stack(
            [np.linspace(-0.3, 0.3, 20), np.full(20, 0.2), np.full(20, 3.0)], axis=1
        )
        hook = np.stack(
            [np.full(10, 0.3), np.linspace(0.25, 0.7, 10), np.full(10, 3.0)], axis=1
        )
        samples = np.concatenate([run, hook])
        img1 = ImageCurve(np.array([project(p, pose1) for p in samples]))
        img2 = ImageCurve(np.array([project(p, pose2) for p in samples]))
        lifted = lift_curve(img1, img2, pose1, pose2)
        assert len(lifted.flagged) > 0
        for i in lifted.source_indices:
            assert i not in lifted.flagged

    def test_orthographic_limit_matches_orthographic_path(self):
        # far-focal perspective converges to the orthographic result
        ds, scene = arc_dataset(8, n_samples=60)
        diam = scene_diameter(scene)
        samples = scene.curves[0].samples
        pose_o1 = CameraPose.canonical_orthographic()
        c, s = np.cos(0.6), np.sin(0.6)
        pose_o2 = CameraPose(vec3(0, 0, 0), vec3(c, 0, -s), vec3(0, 1, 0), None)
        f = 1e6 * diam
        pose_p1 = CameraPose(
            pose_o1.origin, pose_o1.basis_u, pose_o1.basis_v, pose_o1.origin - f * pose_o1.normal
        )
        pose_p2 = CameraPose(
            pose_o2.origin, pose_o2.basis_u, pose_o2.basis_v, pose_o2.origin - f * pose_o2.normal
        )
        img_o1 = ImageCurve(np.array([project(p, pose_o1) for p in samples]))
        img_o2 = ImageCurve(np.array([project(p, pose_o2) for p in samples]))
        img_p1 = ImageCurve(np.array([project(p, pose_p1) for p in samples]))
        img_p2 = ImageCurve(np.array([project(p, pose_p2) for p in samples]))
        lift_o = lift_curve(img_o1, img_o2, pose_o1, pose_o2)
        lift_p = lift_curve(img_p1, img_p2, pose_p1, pose_p2)
        common = sorted(set(lift_o.source_indices) & set(lift_p.source_indices))
        o_by_idx = dict(zip(lift_o.source_indices, lift_o.points))
        p_by_idx = dict(zip(lift_p.source_indices, lift_p.points))
        assert len(common) >= 55
        for i in common:
            assert np.linalg.norm(o_by_idx[i] - p_by_idx[i]) < 1e-4 * diam
