import numpy as np
import pytest

from tochkit import handmodel as hm
from tochkit.errors import ModelMismatch
from tochkit.geometry import SurfacePoint

from rotations import random_rotation


@pytest.fixture(scope="module")
def model():
    return hm.make_synthetic_hand()


@pytest.fixture(scope="module")
def zero_frame(model):
    return hm.HandFrame(np.zeros((model.num_joints, 3)), np.zeros(3),
                        np.zeros(model.num_shape_coeffs))


def random_frame(model, rng, pose_scale=0.4, trans_scale=0.05, shape_scale=0.2):
    return hm.HandFrame(
        rng.normal(scale=pose_scale, size=(model.num_joints, 3)),
        rng.normal(scale=trans_scale, size=3),
        rng.normal(scale=shape_scale, size=model.num_shape_coeffs))


def axis_angle_from_matrix(r):
    angle = np.arccos(np.clip((np.trace(r) - 1) / 2, -1, 1))
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return angle * axis / np.linalg.norm(axis)


# ---------------------------------------------------------------------------
# skin

class TestSkin:
    def test_identity_pose_exact(self, model, zero_frame):
        assert np.array_equal(hm.skin_vertices(model, zero_frame),
                              model.template_vertices)

    def test_pure_translation(self, model):
        frame = hm.HandFrame(np.zeros((model.num_joints, 3)),
                             np.array([0.1, 0.0, 0.0]),
                             np.zeros(model.num_shape_coeffs))
        assert np.allclose(hm.skin_vertices(model, frame),
                           model.template_vertices + [0.1, 0.0, 0.0], atol=0)

    def test_root_rotation_analytic(self, model):
        # root rest position is the origin, so a root rotation is a plain
        # rotation of the whole template
        pose = np.zeros((model.num_joints, 3))
        pose[0] = [0.0, 0.0, np.pi / 2]
        frame = hm.HandFrame(pose, np.zeros(3), np.zeros(model.num_shape_coeffs))
        rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(hm.skin_vertices(model, frame),
                           model.template_vertices @ rz.T, atol=1e-12)

    def test_dimension_mismatch(self, model):
        bad = hm.HandFrame(np.zeros((model.num_joints + 1, 3)), np.zeros(3),
                           np.zeros(model.num_shape_coeffs))
        with pytest.raises(ModelMismatch):
            hm.skin(model, bad)

    def test_global_rigid_equivariance(self, model):
        rng = np.random.default_rng(17)
        for _ in range(10):
            frame = random_frame(model, rng)
            r0 = random_rotation(rng)
            t0 = rng.normal(scale=0.1, size=3)
            composed_root = axis_angle_from_matrix(r0 @ hm.rodrigues(frame.pose[0]))
            pose = frame.pose.copy()
            pose[0] = composed_root
            moved = hm.HandFrame(pose, r0 @ frame.trans + t0, frame.shape)
            direct = hm.skin_vertices(model, frame) @ r0.T + t0
            assert np.abs(hm.skin_vertices(model, moved) - direct).max() < 1e-9


# ---------------------------------------------------------------------------
# skin_point

class TestSkinPoint:
    def test_vertex_identity_pose(self, model, zero_frame):
        f = 10
        sp = SurfacePoint.from_barycentric(model.template_mesh(), f, [0, 1, 0])
        assert np.allclose(hm.skin_point(model, zero_frame, sp),
                           model.template_vertices[model.faces[f][1]], atol=0)

    def test_centroid_is_mean(self, model):
        rng = np.random.default_rng(3)
        frame = random_frame(model, rng)
        f = 99
        sp = SurfacePoint.from_barycentric(model.template_mesh(), f,
                                           [1 / 3, 1 / 3, 1 / 3])
        verts = hm.skin_vertices(model, frame)[model.faces[f]]
        assert np.allclose(hm.skin_point(model, frame, sp),
                           verts.mean(axis=0), atol=1e-12)

    def test_vertex_coincident_matches_skin(self, model):
        rng = np.random.default_rng(5)
        for _ in range(20):
            frame = random_frame(model, rng)
            f = int(rng.integers(model.faces.shape[0]))
            corner = int(rng.integers(3))
            bary = np.zeros(3)
            bary[corner] = 1.0
            sp = SurfacePoint.from_barycentric(model.template_mesh(), f, bary)
            expected = hm.skin_vertices(model, frame)[model.faces[f][corner]]
            assert np.abs(hm.skin_point(model, frame, sp) - expected).max() <= 1e-12

    def test_longhand_lbs_oracle(self, model):
        # independent per-vertex LBS computed with explicit 4x4 world
        # transforms, then barycentrically combined
        rng = np.random.default_rng(7)
        for _ in range(10):
            frame = random_frame(model, rng)
            f = int(rng.integers(model.faces.shape[0]))
            bary = rng.dirichlet([1.0, 1.0, 1.0])
            sp = SurfacePoint.from_barycentric(model.template_mesh(), f, bary)

            # world transforms from scratch
            j = model.num_joints
            world = [None] * j
            rest = model.joint_rest_positions
            for m in range(j):
                local = np.eye(4)
                local[:3, :3] = hm.rodrigues(frame.pose[m])
                p = model.parents[m]
                off = rest[m] - (rest[p] if p >= 0 else 0.0)
                local[:3, 3] = off
                world[m] = local if p < 0 else world[p] @ local
            rel = []
            for m in range(j):
                undo = np.eye(4)
                undo[:3, 3] = -rest[m]
                rel.append(world[m] @ undo)

            shaped = model.template_vertices + model.shape_basis @ frame.shape
            expected = np.zeros(3)
            for corner, w in zip(model.faces[f], bary):
                hv = np.append(shaped[corner], 1.0)
                skinned = sum(model.skinning_weights[corner, m] * (rel[m] @ hv)
                              for m in range(j))[:3] + frame.trans
                expected += w * skinned
            assert np.abs(hm.skin_point(model, frame, sp) - expected).max() < 1e-9

    def test_bad_face_index(self, model, zero_frame):
        sp = SurfacePoint(face_index=10 ** 6, barycentric=np.array([1.0, 0, 0]),
                          position=np.zeros(3))
        with pytest.raises(Exception):
            hm.skin_point(model, zero_frame, sp)


# ---------------------------------------------------------------------------
# regress_joints

class TestRegressJoints:
    def test_one_hot_selects_vertices(self, model):
        reg = np.zeros((4, model.num_vertices))
        for i, v in enumerate([0, 5, 11, 40]):
            reg[i, v] = 1.0
        picked = reg @ model.template_vertices
        assert np.array_equal(picked,
                              model.template_vertices[[0, 5, 11, 40]])

    def test_rest_pose_regresses_rest_joints(self, model):
        joints = hm.regress_joints(model, model.template_vertices)
        assert np.abs(joints - model.joint_rest_positions).max() < 1e-6

    def test_translation_equivariance(self, model):
        rng = np.random.default_rng(2)
        v = model.template_vertices
        t = rng.normal(size=3)
        assert np.allclose(hm.regress_joints(model, v + t),
                           hm.regress_joints(model, v) + t, atol=1e-9)

    def test_shape_mismatch(self, model):
        with pytest.raises(ModelMismatch):
            hm.regress_joints(model, np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# synthetic hand

class TestSyntheticHand:
    def test_default_config(self, model):
        assert model.num_joints == 16
        assert model.template_mesh().is_closed()

    def test_zero_fingers_single_blob(self):
        blob = hm.make_synthetic_hand(hm.SyntheticHandConfig(fingers=0))
        assert blob.num_joints == 1
        assert blob.template_mesh().is_closed()

    def test_scale_blendshape(self, model):
        s = 0.07
        frame = hm.HandFrame(np.zeros((model.num_joints, 3)), np.zeros(3),
                             np.array([s, 0.0]))
        assert np.allclose(hm.skin_vertices(model, frame),
                           (1 + s) * model.template_vertices, atol=1e-12)


# ---------------------------------------------------------------------------
# mirroring

class TestMirror:
    def test_involution(self, model):
        mesh = model.template_mesh()
        twice = hm.mirror_hand(hm.mirror_hand(mesh))
        assert np.array_equal(twice.vertices, mesh.vertices)
        assert np.array_equal(twice.faces, mesh.faces)

    def test_volume_preserved(self, model):
        mesh = model.template_mesh()
        assert abs(hm.mirror_hand(mesh).volume() - mesh.volume()) < 1e-9

    def test_commutes_with_skinning(self, model):
        rng = np.random.default_rng(9)
        frame = random_frame(model, rng)
        lhs = hm.mirror_hand(hm.skin(model, frame)).vertices
        rhs = hm.skin_vertices(hm.mirror_hand(model), hm.mirror_hand(frame))
        assert np.abs(lhs - rhs).max() < 1e-12


# ---------------------------------------------------------------------------
# model I/O

class TestModelIO:
    def test_round_trip(self, tmp_path, model):
        path = tmp_path / "hand.json"
        hm.save_hand_model(model, path)
        back = hm.load_hand_model(path)
        assert np.array_equal(back.template_vertices, model.template_vertices)
        assert np.array_equal(back.skinning_weights, model.skinning_weights)
        assert np.array_equal(back.parents, model.parents)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 99}')
        with pytest.raises(ModelMismatch):
            hm.load_hand_model(path)

    def test_dimension_validation(self, tmp_path, model):
        import json
        path = tmp_path / "hand.json"
        hm.save_hand_model(model, path)
        doc = json.loads(path.read_text())
        doc["skinning_weights"] = doc["skinning_weights"][:-1]
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelMismatch):
            hm.load_hand_model(path)


# ---------------------------------------------------------------------------
# analytic jacobians vs finite differences

def test_skin_point_jacobians_match_fd(model):
    rng = np.random.default_rng(1234)
    mesh = model.template_mesh()
    step = 1e-6
    worst = 0.0
    for _ in range(100):
        frame = random_frame(model, rng)
        f = int(rng.integers(model.faces.shape[0]))
        sp = SurfacePoint.from_barycentric(mesh, f, rng.dirichlet([1.0] * 3))
        handles = hm.HandleSet.from_surface_points(model, [sp])
        g = hm.joint_transforms(model, frame.pose)
        ops = hm.pose_derivative_ops(model, frame.pose, g)
        pos, dpose, dshape = handles.positions_and_jacobians(
            g, ops, frame.shape, frame.trans)
        assert np.abs(pos[0] - hm.skin_point(model, frame, sp)).max() < 1e-9

        def value(pose, trans, shape):
            return hm.skin_point(model, hm.HandFrame(pose, trans, shape), sp)

        for m in range(model.num_joints):
            for a in range(3):
                hi = frame.pose.copy(); hi[m, a] += step
                lo = frame.pose.copy(); lo[m, a] -= step
                fd = (value(hi, frame.trans, frame.shape)
                      - value(lo, frame.trans, frame.shape)) / (2 * step)
                scale = max(np.linalg.norm(fd), 1e-6)
                worst = max(worst, np.linalg.norm(fd - dpose[0, m, a]) / scale)
        for b in range(model.num_shape_coeffs):
            hi = frame.shape.copy(); hi[b] += step
            lo = frame.shape.copy(); lo[b] -= step
            fd = (value(frame.pose, frame.trans, hi)
                  - value(frame.pose, frame.trans, lo)) / (2 * step)
            scale = max(np.linalg.norm(fd), 1e-6)
            worst = max(worst, np.linalg.norm(fd - dshape[0, :, b]) / scale)
        for c in range(3):
            hi = frame.trans.copy(); hi[c] += step
            lo = frame.trans.copy(); lo[c] -= step
            fd = (value(frame.pose, hi, frame.shape)
                  - value(frame.pose, lo, frame.shape)) / (2 * step)
            e = np.zeros(3); e[c] = 1.0
            worst = max(worst, np.linalg.norm(fd - e))
    assert worst < 1e-4
