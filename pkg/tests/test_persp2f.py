import numpy as np
import pytest

from multiframe.dof import Regime
from multiframe.errors import AmbiguityError, InputError, NotEssentialError, RankDeficientError
from multiframe.geometry import Rotation, vec3
from multiframe.persp2f import (
    DepthVote,
    bearing,
    decompose,
    elimination_constraint,
    normalize_distinguished,
    recover_depths,
    relative_truth_motion,
    solve_composite,
    two_frame_reconstruct,
)
from multiframe.scene import (
    MotionScript,
    NoiseSpec,
    add_noise,
    random_cloud_scene,
    random_motion_script,
    render,
)
from multiframe.geometry import RigidMotion


def make_scene(seed, n_points=10):
    scene = random_cloud_scene(seed, n_points=n_points, center=(0, 0, 3))
    script = random_motion_script(seed + 1, 2, Regime.PERSPECTIVE_CALIBRATED, scene)
    ds = render(scene, script, Regime.PERSPECTIVE_CALIBRATED)
    return ds


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0.0]])


def truth_composite(ds):
    rot, trans = relative_truth_motion(ds)
    e = skew(trans) @ rot.matrix
    return e / np.linalg.norm(e)


def angle_between(u, v):
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return np.arccos(np.clip(u @ v, -1, 1))


class TestNormalize:
    def test_distinguished_maps_to_origin(self):
        ds = make_scene(1)
        lab = ds.labels[3]
        norm = normalize_distinguished(ds.frames[0].points, ds.frames[1].points, lab)
        assert np.allclose(norm.points1[lab], 0.0, atol=1e-12)
        assert np.allclose(norm.points2[lab], 0.0, atol=1e-12)

    def test_already_centered_gives_identity(self):
        pts1 = {"a": np.zeros(2), "b": np.array([0.3, 0.1])}
        pts2 = {"a": np.zeros(2), "b": np.array([0.2, -0.1])}
        norm = normalize_distinguished(pts1, pts2, "a")
        assert np.allclose(norm.rot1.matrix, np.eye(3))
        assert np.allclose(norm.rot2.matrix, np.eye(3))

    def test_roundtrip_restores_originals(self):
        ds = make_scene(2)
        lab = ds.labels[0]
        norm = normalize_distinguished(ds.frames[0].points, ds.frames[1].points, lab)
        back1 = norm.original_points(1)
        back2 = norm.original_points(2)
        for l in ds.labels:
            assert np.allclose(back1[l], ds.frames[0].points[l], atol=1e-12)
            assert np.allclose(back2[l], ds.frames[1].points[l], atol=1e-12)

    def test_missing_label_rejected(self):
        with pytest.raises(InputError):
            normalize_distinguished({"a": np.zeros(2)}, {"a": np.zeros(2)}, "zz")


class TestEliminationConstraint:
    def test_truth_composite_annihilates_correspondences(self):
        ds = make_scene(3)
        e = truth_composite(ds)
        for lab in ds.labels:
            r = elimination_constraint(e, ds.frames[0].points[lab], ds.frames[1].points[lab])
            assert abs(r) < 1e-10

    def test_zero_matrix_vanishes_everywhere(self):
        assert elimination_constraint(np.zeros((3, 3)), [0.3, 1.0], [-2.0, 0.5]) == 0.0

    def test_bilinearity(self):
        rng = np.random.default_rng(4)
        e = rng.normal(size=(3, 3))
        m1, m2 = rng.normal(size=2), rng.normal(size=2)
        base = elimination_constraint(e, m1, m2)
        assert np.isclose(elimination_constraint(3 * e, m1, m2), 3 * base)
        # scaling an argument's homogeneous bearing scales the output
        assert np.isclose(
            float(3.0 * bearing(m2) @ e @ bearing(m1)), 3 * base
        )


class TestSolveComposite:
    def test_recovers_truth_up_to_sign(self):
        ds = make_scene(5)
        labels = ds.labels
        c1 = [ds.frames[0].points[l] for l in labels[:9]]
        c2 = [ds.frames[1].points[l] for l in labels[:9]]
        e, s_min, _ = solve_composite(c1, c2)
        e_true = truth_composite(ds)
        if np.sum(e * e_true) < 0:
            e = -e
        assert np.linalg.norm(e - e_true) < 1e-8
        assert s_min < 1e-10

    def test_identical_points_rank_error(self):
        p = [np.array([0.1, 0.2])] * 9
        with pytest.raises(RankDeficientError):
            solve_composite(p, p)

    def test_eight_points_need_override(self):
        ds = make_scene(6)
        labels = ds.labels[:8]
        c1 = [ds.frames[0].points[l] for l in labels]
        c2 = [ds.frames[1].points[l] for l in labels]
        with pytest.raises(InputError, match="ine"):
            solve_composite(c1, c2)
        e, _, _ = solve_composite(c1, c2, allow_eight=True)
        e_true = truth_composite(ds)
        if np.sum(e * e_true) < 0:
            e = -e
        assert np.linalg.norm(e - e_true) < 1e-7

    def test_noisy_points_keep_small_residuals(self):
        ds = make_scene(7, n_points=20)
        noisy = add_noise(ds, NoiseSpec(1e-4, seed=8))
        labels = noisy.labels
        c1 = [noisy.frames[0].points[l] for l in labels]
        c2 = [noisy.frames[1].points[l] for l in labels]
        e, _, _ = solve_composite(c1, c2)
        for p1, p2 in zip(c1, c2):
            assert abs(elimination_constraint(e, p1, p2)) < 1e-3


class TestDecompose:
    def test_candidates_contain_truth_and_twin(self):
        rng = np.random.default_rng(9)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        rot = Rotation.from_axis_angle(axis, 0.8)
        t = rng.normal(size=3)
        t /= np.linalg.norm(t)
        e = skew(t) @ rot.matrix
        cands = decompose(e / np.linalg.norm(e))
        assert len(cands) == 4
        rot_hit = min(c[0].angle_to(rot) for c in cands)
        t_hit = min(
            min(np.linalg.norm(c[1] - t), np.linalg.norm(c[1] + t)) for c in cands
        )
        assert rot_hit < 1e-9
        assert t_hit < 1e-9

    def test_pure_translation_keeps_identity(self):
        t = np.array([0.0, 0.0, 1.0])
        e = skew(t)
        cands = decompose(e / np.linalg.norm(e))
        assert min(c[0].angle_to(Rotation.identity()) for c in cands) < 1e-9

    def test_sign_of_scale_irrelevant(self):
        rng = np.random.default_rng(10)
        rot = Rotation.from_axis_angle(np.array([0, 1.0, 0]), 0.4)
        t = np.array([1.0, 0.2, 0.1])
        t /= np.linalg.norm(t)
        e = skew(t) @ rot.matrix
        e /= np.linalg.norm(e)
        a = decompose(e)
        b = decompose(-e)
        for (ra, ta), (rb, tb) in zip(a, b):
            assert ra.angle_to(rb) < 1e-12
            assert np.allclose(ta, tb)

    def test_structure_violation_rejected(self):
        with pytest.raises(NotEssentialError):
            decompose(np.diag([1.0, 0.5, 0.0]))


class TestRecoverDepths:
    def test_unique_survivor_with_true_depths(self):
        ds = make_scene(11)
        labels = ds.labels
        norm = normalize_distinguished(
            ds.frames[0].points, ds.frames[1].points, labels[0]
        )
        c1 = [norm.points1[l] for l in labels]
        c2 = [norm.points2[l] for l in labels]
        e, _, _ = solve_composite(c1, c2)
        votes = [recover_depths(a, t, c1, c2) for a, t in decompose(e)]
        assert sum(v.accepted for v in votes) == 1

    def test_reversed_baseline_rejected(self):
        ds = make_scene(12)
        labels = ds.labels
        norm = normalize_distinguished(
            ds.frames[0].points, ds.frames[1].points, labels[0]
        )
        c1 = [norm.points1[l] for l in labels]
        c2 = [norm.points2[l] for l in labels]
        e, _, _ = solve_composite(c1, c2)
        cands = decompose(e)
        votes = [recover_depths(a, t, c1, c2) for a, t in cands]
        winner = next(i for i, v in enumerate(votes) if v.accepted)
        a_win, t_win = cands[winner]
        mirror = recover_depths(a_win, -t_win, c1, c2)
        assert not mirror.accepted
        valid = ~np.isnan(mirror.depths[:, 0])
        assert np.all(mirror.depths[valid] < 0)

    def test_baseline_point_excluded(self):
        # a correspondence sitting on the epipole makes its system singular
        rot = Rotation.identity()
        t = np.array([0.0, 0.0, 1.0])  # baseline along the optical axis
        c1 = [np.zeros(2), np.array([0.3, 0.2])]
        c2 = [np.zeros(2), np.array([0.5, 0.4])]
        vote = recover_depths(rot, t, c1, c2)
        assert 0 in vote.excluded


class TestTwoFrameReconstruct:
    def test_recovers_motion_and_structure(self):
        for seed in (21, 22, 23, 24, 25):
            ds = make_scene(seed)
            est = two_frame_reconstruct(ds)
            rot_true, t_true = relative_truth_motion(ds)
            assert est.rotation.angle_to(rot_true) < 1e-6
            assert angle_between(est.translation, t_true) < 1e-6
            assert est.survivors == 1 and not est.baseline_degenerate
            assert all(z1 > 0 and z2 > 0 for z1, z2 in est.depths.values())
            # structure matches truth after the distinguished-depth gauge
            d = est.distinguished
            true_pts = {
                lab: ds.truth.points3d[lab] for lab in ds.labels
            }  # frame 1 = identity motion, camera coords = scene coords
            gauge = np.linalg.norm(true_pts[d])
            for lab in ds.labels:
                err = np.linalg.norm(est.points3d[lab] - true_pts[lab] / gauge)
                assert err < 1e-6

    def test_identity_motion_flags_degenerate_baseline(self):
        scene = random_cloud_scene(31, n_points=10, center=(0, 0, 3))
        script = MotionScript(motions=[RigidMotion.identity()] * 2)
        ds = render(scene, script, Regime.PERSPECTIVE_CALIBRATED)
        est = two_frame_reconstruct(ds)
        assert est.baseline_degenerate
        assert est.rotation.angle_to(Rotation.identity()) < 1e-8
        assert est.translation is None

    def test_pure_rotation_flags_degenerate_baseline(self):
        scene = random_cloud_scene(32, n_points=10, center=(0, 0, 3))
        centroid = np.mean(list(scene.points.values()), axis=0)
        rot = Rotation.from_axis_angle(vec3(0, 1, 0), 0.15)
        # rotate the object about the focal point: no baseline, bearings rotate
        script = MotionScript(
            motions=[RigidMotion.identity(), RigidMotion(rot, np.zeros(3))]
        )
        ds = render(scene, script, Regime.PERSPECTIVE_CALIBRATED)
        est = two_frame_reconstruct(ds)
        assert est.baseline_degenerate
        assert est.rotation.angle_to(rot) < 1e-8

    def test_eight_points_rejected_without_override(self):
        ds = make_scene(33, n_points=8)
        with pytest.raises(InputError, match="[Nn]ine"):
            two_frame_reconstruct(ds)
        est = two_frame_reconstruct(ds, allow_eight=True)
        rot_true, t_true = relative_truth_motion(ds)
        assert est.rotation.angle_to(rot_true) < 1e-6

    def test_regime_mismatch_rejected(self):
        from multiframe.scene import random_triangle_scene

        scene = random_triangle_scene(34)
        script = random_motion_script(35, 2, Regime.ORTHOGRAPHIC, scene)
        ds = render(scene, script, Regime.ORTHOGRAPHIC)
        with pytest.raises(InputError, match="calibrated"):
            two_frame_reconstruct(ds)

    def test_scale_gauge_invariance(self):
        # uniformly rescaling the scene leaves the gauged structure unchanged
        seed = 41
        scene = random_cloud_scene(seed, n_points=10, center=(0, 0, 3))
        script = random_motion_script(seed + 1, 2, Regime.PERSPECTIVE_CALIBRATED, scene)
        ds1 = render(scene, script, Regime.PERSPECTIVE_CALIBRATED)
        from multiframe.scene import SceneSpec

        scaled = SceneSpec({k: 2.5 * v for k, v in scene.points.items()}, seed=seed)
        script2 = MotionScript(
            motions=[
                RigidMotion(m.rotation, 2.5 * m.translation) for m in script.motions
            ]
        )
        ds2 = render(scaled, script2, Regime.PERSPECTIVE_CALIBRATED)
        est1 = two_frame_reconstruct(ds1)
        est2 = two_frame_reconstruct(ds2)
        for lab in ds1.labels:
            assert np.linalg.norm(est1.points3d[lab] - est2.points3d[lab]) < 1e-8

    def test_constraint_residual_invariant_bound(self):
        ds = make_scene(42)
        est = two_frame_reconstruct(ds)
        assert est.max_constraint_residual < 1e-6
