"""Parametric linear-blend-skinned hand: forward skinning, joint regression,
analytic pose/shape derivatives, model file I/O and a procedural synthetic
hand used throughout the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSurfacePoint, ModelMismatch
from .geometry import SurfacePoint, TriMesh

WEIGHT_ROW_TOL = 1e-6


# ---------------------------------------------------------------------------
# rotations

def rodrigues(v: np.ndarray) -> np.ndarray:
    """Axis-angle (3,) to rotation matrix.  Exact identity at v = 0."""
    v = np.asarray(v, dtype=np.float64)
    angle = np.linalg.norm(v)
    if angle < 1e-12:
        return np.eye(3)
    axis = v / angle
    k = _skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def _skew(v) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def rodrigues_jacobian(v: np.ndarray) -> np.ndarray:
    """d R / d v_a for each axis-angle component, shape (3, 3, 3).

    Closed form of Gallego & Yezzi; reduces to the generator matrices at
    v = 0.
    """
    v = np.asarray(v, dtype=np.float64)
    angle2 = float(v @ v)
    r = rodrigues(v)
    out = np.empty((3, 3, 3))
    if angle2 < 1e-16:
        for a in range(3):
            e = np.zeros(3)
            e[a] = 1.0
            out[a] = _skew(e)
        return out
    for a in range(3):
        e = np.zeros(3)
        e[a] = 1.0
        w = v[a] * v + np.cross(v, (np.eye(3) - r) @ e)
        out[a] = _skew(w / angle2) @ r
    return out


def canonicalize_axis_angle(pose: np.ndarray) -> np.ndarray:
    """Wrap each per-joint rotation so its angle lies in [0, pi]."""
    pose = np.array(pose, dtype=np.float64)
    flat = pose.reshape(-1, 3)
    angles = np.linalg.norm(flat, axis=1)
    for i, ang in enumerate(angles):
        if ang > np.pi:
            wrapped = np.mod(ang + np.pi, 2.0 * np.pi) - np.pi
            flat[i] *= wrapped / ang
    return flat.reshape(pose.shape)


# ---------------------------------------------------------------------------
# model and frames

@dataclass(frozen=True)
class HandModel:
    """LBS template with skinning weights, kinematic tree, shape blendshapes
    and a convex joint regressor."""

    template_vertices: np.ndarray  # (K, 3)
    faces: np.ndarray  # (F, 3)
    skinning_weights: np.ndarray  # (K, J), rows convex
    parents: np.ndarray  # (J,), parents[0] == -1
    joint_rest_positions: np.ndarray  # (J, 3)
    shape_basis: np.ndarray  # (K, 3, B)
    joint_regressor: np.ndarray  # (J_out, K), rows convex

    def __post_init__(self):
        tv = np.asarray(self.template_vertices, dtype=np.float64)
        w = np.asarray(self.skinning_weights, dtype=np.float64)
        parents = np.asarray(self.parents, dtype=np.int64)
        rest = np.asarray(self.joint_rest_positions, dtype=np.float64)
        basis = np.asarray(self.shape_basis, dtype=np.float64)
        reg = np.asarray(self.joint_regressor, dtype=np.float64)
        k, j = w.shape
        if tv.shape != (k, 3):
            raise ModelMismatch("template/weight vertex count mismatch")
        if parents.shape != (j,) or rest.shape != (j, 3):
            raise ModelMismatch("kinematic tree dimensions inconsistent")
        if basis.ndim != 3 or basis.shape[:2] != (k, 3):
            raise ModelMismatch("shape basis must be (K, 3, B)")
        if reg.ndim != 2 or reg.shape[1] != k:
            raise ModelMismatch("joint regressor must be (J_out, K)")
        if (w < -WEIGHT_ROW_TOL).any() or \
                np.abs(w.sum(axis=1) - 1.0).max() > WEIGHT_ROW_TOL:
            raise ModelMismatch("skinning weight rows must be convex")
        if (reg < -WEIGHT_ROW_TOL).any() or \
                np.abs(reg.sum(axis=1) - 1.0).max() > WEIGHT_ROW_TOL:
            raise ModelMismatch("regressor rows must be convex")
        if parents[0] != -1 or (parents[1:] >= np.arange(1, j)).any() or \
                (parents[1:] < 0).any():
            raise ModelMismatch("parents must form a single-rooted acyclic "
                                "tree in topological order")
        for name, arr in [("template_vertices", tv), ("skinning_weights", w),
                          ("parents", parents), ("joint_rest_positions", rest),
                          ("shape_basis", basis), ("joint_regressor", reg),
                          ("faces", np.asarray(self.faces, dtype=np.int64))]:
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def num_joints(self) -> int:
        return self.parents.shape[0]

    @property
    def num_shape_coeffs(self) -> int:
        return self.shape_basis.shape[2]

    @property
    def num_output_joints(self) -> int:
        return self.joint_regressor.shape[0]

    def template_mesh(self) -> TriMesh:
        return TriMesh(self.template_vertices, self.faces)

    def children(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_joints)]
        for j, p in enumerate(self.parents):
            if p >= 0:
                out[p].append(j)
        return out


@dataclass(frozen=True)
class HandFrame:
    """Per-frame pose (axis-angle per joint, joint 0 is the global root),
    translation and shape coefficients."""

    pose: np.ndarray  # (J, 3)
    trans: np.ndarray  # (3,)
    shape: np.ndarray  # (B,)

    def __post_init__(self):
        pose = canonicalize_axis_angle(np.asarray(self.pose, dtype=np.float64))
        trans = np.asarray(self.trans, dtype=np.float64).reshape(3)
        shape = np.asarray(self.shape, dtype=np.float64).reshape(-1)
        if not (np.isfinite(pose).all() and np.isfinite(trans).all()
                and np.isfinite(shape).all()):
            raise ModelMismatch("non-finite hand frame parameters")
        object.__setattr__(self, "pose", pose)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "shape", shape)


@dataclass(frozen=True)
class HandSequence:
    """T frames sharing one shape vector."""

    frames: tuple[HandFrame, ...]
    fps: float = 30.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise ModelMismatch("sequence needs at least one frame")
        beta = frames[0].shape
        for f in frames[1:]:
            if f.shape.shape != beta.shape or not np.array_equal(f.shape, beta):
                raise ModelMismatch("all frames must share one shape vector")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> np.ndarray:
        return self.frames[0].shape


# ---------------------------------------------------------------------------
# forward kinematics and skinning

def shaped_template(model: HandModel, shape: np.ndarray) -> np.ndarray:
    if shape.shape[0] != model.num_shape_coeffs:
        raise ModelMismatch("shape coefficient count mismatch")
    if not shape.any():
        return model.template_vertices
    return model.template_vertices + model.shape_basis @ shape


def joint_transforms(model: HandModel, pose: np.ndarray) -> np.ndarray:
    """Rest-relative joint transforms, shape (J, 4, 4).

    Each joint rotates about its rest position; transforms compose along the
    kinematic chain, so the zero pose yields exact identities.
    """
    if pose.shape != (model.num_joints, 3):
        raise ModelMismatch("pose must be (J, 3)")
    j = model.num_joints
    g = np.empty((j, 4, 4))
    for m in range(j):
        local = np.eye(4)
        r = rodrigues(pose[m])
        rest = model.joint_rest_positions[m]
        local[:3, :3] = r
        local[:3, 3] = rest - r @ rest
        p = model.parents[m]
        g[m] = local if p < 0 else g[p] @ local
    return g


def _blend_apply(weights: np.ndarray, g: np.ndarray, shaped: np.ndarray,
                 trans: np.ndarray) -> np.ndarray:
    """Apply per-vertex convex blends of joint transforms.

    Blends the displacement transforms (G_j - I) so the zero pose reproduces
    the template bit-exactly, independent of floating-point weight row sums.
    """
    d = g[:, :3, :].copy()
    d[:, :, :3] -= np.eye(3)
    a = np.einsum("kj,jab->kab", weights, d)
    disp = np.einsum("kab,kb->ka", a[:, :, :3], shaped) + a[:, :, 3]
    return shaped + disp + trans


def skin(model: HandModel, frame: HandFrame) -> TriMesh:
    """Pose the template: blended rest-relative joint transforms applied to
    the shaped template, plus the frame translation."""
    return TriMesh(skin_vertices(model, frame), model.faces)


def skin_vertices(model: HandModel, frame: HandFrame) -> np.ndarray:
    """Posed vertex array without constructing a mesh."""
    shaped = shaped_template(model, frame.shape)
    g = joint_transforms(model, frame.pose)
    return _blend_apply(model.skinning_weights, g, shaped, frame.trans)


def skin_point(model: HandModel, frame: HandFrame, sp: SurfacePoint) -> np.ndarray:
    """Barycentric combination of the three skinned vertices of ``sp``'s face."""
    if sp.face_index < 0 or sp.face_index >= model.faces.shape[0]:
        raise InvalidSurfacePoint(f"face index {sp.face_index} out of range")
    vid = model.faces[sp.face_index]
    shaped = shaped_template(model, frame.shape)[vid]
    g = joint_transforms(model, frame.pose)
    verts = _blend_apply(model.skinning_weights[vid], g, shaped, frame.trans)
    return sp.barycentric @ verts


def regress_joints(model: HandModel, posed_vertices: np.ndarray) -> np.ndarray:
    posed_vertices = np.asarray(posed_vertices, dtype=np.float64)
    if posed_vertices.shape != (model.num_vertices, 3):
        raise ModelMismatch("vertex count does not match the regressor")
    return model.joint_regressor @ posed_vertices


def joints_of(model: HandModel, frame: HandFrame) -> np.ndarray:
    return regress_joints(model, skin_vertices(model, frame))


# ---------------------------------------------------------------------------
# analytic derivatives

def pose_derivative_ops(model: HandModel, pose: np.ndarray,
                        g: np.ndarray) -> np.ndarray:
    """Left-multiplier matrices for pose derivatives, shape (J, 3, 4, 4).

    For any point carried by joint j (or its descendants), the derivative of
    its rest-relative transform w.r.t. pose component (m, a) is
    ``ops[m, a] @ g[j]`` when m is an ancestor-or-self of j, else zero.
    """
    j = model.num_joints
    ops = np.empty((j, 3, 4, 4))
    for m in range(j):
        rest = model.joint_rest_positions[m]
        r = rodrigues(pose[m])
        dr = rodrigues_jacobian(pose[m])
        p = model.parents[m]
        gp = np.eye(4) if p < 0 else g[p]
        gp_inv = np.eye(4)
        gp_inv[:3, :3] = gp[:3, :3].T
        gp_inv[:3, 3] = -gp[:3, :3].T @ gp[:3, 3]
        # with M = T(rest) R T(-rest), dM/da . M^-1 has rotation dR_a R^T
        # and translation -(dR_a R^T) rest
        for a in range(3):
            da = np.zeros((4, 4))
            rot = dr[a] @ r.T
            da[:3, :3] = rot
            da[:3, 3] = -rot @ rest
            ops[m, a] = gp @ da @ gp_inv
    return ops


class HandleSet:
    """Convex combinations of mesh vertices (correspondence points or
    regressed joints) with analytic pose/shape/translation Jacobians.

    Precomputes, per handle h and joint j, the blended homogeneous rest
    coordinate and the blended shape-basis block, so per-iteration cost is a
    couple of small einsums.
    """

    def __init__(self, model: HandModel, u0: np.ndarray, s: np.ndarray):
        self.model = model
        self.u0 = u0  # (H, J, 4)
        self.s = s  # (H, J, 3, B)
        self._children = model.children()
        # reverse topological order for subtree accumulation
        self._order = list(range(model.num_joints))[::-1]

    @staticmethod
    def from_surface_points(model: HandModel, sps: list[SurfacePoint]) -> "HandleSet":
        h = len(sps)
        jn = model.num_joints
        b = model.num_shape_coeffs
        u0 = np.zeros((h, jn, 4))
        s = np.zeros((h, jn, 3, b))
        for i, sp in enumerate(sps):
            if sp.face_index < 0 or sp.face_index >= model.faces.shape[0]:
                raise InvalidSurfacePoint(f"face index {sp.face_index}")
            vid = model.faces[sp.face_index]
            for corner, w in zip(vid, sp.barycentric):
                wj = w * model.skinning_weights[corner]
                u0[i, :, :3] += wj[:, None] * model.template_vertices[corner]
                u0[i, :, 3] += wj
                s[i] += wj[:, None, None] * model.shape_basis[corner]
        return HandleSet(model, u0, s)

    @staticmethod
    def from_regressor(model: HandModel) -> "HandleSet":
        # u0[h, j] = sum_v reg[h, v] w[v, j] [v; 1]
        reg = model.joint_regressor
        w = model.skinning_weights
        rw = np.einsum("hv,vj->hvj", reg, w)
        u0 = np.concatenate([
            np.einsum("hvj,va->hja", rw, model.template_vertices),
            rw.sum(axis=1)[:, :, None]], axis=2)
        s = np.einsum("hvj,vab->hjab", rw, model.shape_basis)
        return HandleSet(model, u0, s)

    def _u4(self, beta: np.ndarray) -> np.ndarray:
        if not beta.any():
            return self.u0
        u4 = self.u0.copy()
        u4[:, :, :3] += self.s @ beta
        return u4

    def positions(self, g: np.ndarray, beta: np.ndarray,
                  trans: np.ndarray) -> np.ndarray:
        u4 = self._u4(beta)
        return np.einsum("jab,hjb->ha", g[:, :3, :], u4) + trans

    def positions_and_jacobians(self, g: np.ndarray, ops: np.ndarray,
                                beta: np.ndarray, trans: np.ndarray):
        """Returns (pos (H, 3), dpose (H, J, 3, 3), dshape (H, 3, B)).

        dpose[h, m, a] is the derivative of handle h w.r.t. pose component
        (m, a); the translation Jacobian is the identity.
        """
        u4 = self._u4(beta)
        per_joint = np.einsum("jab,hjb->hja", g, u4)  # (H, J, 4)
        pos = per_joint[:, :, :3].sum(axis=1) + trans
        # subtree sums: contribution of each joint's full subtree
        p = per_joint.copy()
        for m in self._order:
            for c in self._children[m]:
                p[:, m] += p[:, c]
        dpose = np.einsum("maxy,hmy->hmax", ops[:, :, :3, :], p)
        dshape = np.einsum("jab,hjbc->hac", g[:, :3, :3], self.s)
        return pos, dpose, dshape


# ---------------------------------------------------------------------------
# mirroring

_MIRROR = np.array([-1.0, 1.0, 1.0])


def mirror_mesh(mesh: TriMesh) -> TriMesh:
    """Reflect across the x = 0 plane; winding reversed to keep normals
    outward."""
    return TriMesh(mesh.vertices * _MIRROR, mesh.faces[:, ::-1])


def mirror_frame(frame: HandFrame) -> HandFrame:
    pose = frame.pose * np.array([1.0, -1.0, -1.0])
    return HandFrame(pose=pose, trans=frame.trans * _MIRROR, shape=frame.shape)


def mirror_model(model: HandModel) -> HandModel:
    return HandModel(
        template_vertices=model.template_vertices * _MIRROR,
        faces=model.faces[:, ::-1],
        skinning_weights=model.skinning_weights,
        parents=model.parents,
        joint_rest_positions=model.joint_rest_positions * _MIRROR,
        shape_basis=model.shape_basis * _MIRROR[None, :, None],
        joint_regressor=model.joint_regressor,
    )


def mirror_hand(obj):
    """Mirror a mesh, frame, sequence or model across x = 0."""
    if isinstance(obj, TriMesh):
        return mirror_mesh(obj)
    if isinstance(obj, HandFrame):
        return mirror_frame(obj)
    if isinstance(obj, HandSequence):
        return HandSequence(tuple(mirror_frame(f) for f in obj.frames),
                            fps=obj.fps)
    if isinstance(obj, HandModel):
        return mirror_model(obj)
    raise TypeError(f"cannot mirror {type(obj).__name__}")


# ---------------------------------------------------------------------------
# model file I/O

MODEL_FORMAT_VERSION = 1


def save_hand_model(model: HandModel, path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "template_vertices": model.template_vertices.tolist(),
        "faces": model.faces.tolist(),
        "skinning_weights": model.skinning_weights.tolist(),
        "parents": model.parents.tolist(),
        "joint_rest_positions": model.joint_rest_positions.tolist(),
        "shape_basis": model.shape_basis.tolist(),
        "joint_regressor": model.joint_regressor.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_hand_model(path) -> HandModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelMismatch(f"unsupported hand model version: {doc.get('version')}")
    try:
        return HandModel(
            template_vertices=np.array(doc["template_vertices"], dtype=np.float64),
            faces=np.array(doc["faces"], dtype=np.int64),
            skinning_weights=np.array(doc["skinning_weights"], dtype=np.float64),
            parents=np.array(doc["parents"], dtype=np.int64),
            joint_rest_positions=np.array(doc["joint_rest_positions"],
                                          dtype=np.float64),
            shape_basis=np.array(doc["shape_basis"], dtype=np.float64),
            joint_regressor=np.array(doc["joint_regressor"], dtype=np.float64),
        )
    except KeyError as exc:
        raise ModelMismatch(f"hand model file missing field {exc}") from exc


# ---------------------------------------------------------------------------
# synthetic hand

@dataclass(frozen=True)
class SyntheticHandConfig:
    fingers: int = 5
    segments: int = 3
    segment_length: float = 0.028
    finger_radius: float = 0.0055
    finger_taper: float = 0.85  # per-segment radius multiplier
    palm_length: float = 0.075
    palm_radius: float = 0.032
    finger_spread: float = 0.026  # half-width of the finger base row
    n_around: int = 8
    n_cap: int = 2
    weight_sigma: float = 0.012


def _orthonormal_frame(axis: np.ndarray):
    a = axis / np.linalg.norm(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(a, helper)
    u /= np.linalg.norm(u)
    v = np.cross(a, u)
    return a, u, v


def _capsule(p0, p1, r0, r1, n_around, n_cap):
    """Closed capsule mesh from p0 to p1 with end radii r0/r1.

    Includes a full vertex ring exactly in the plane of p0 (ring index
    returned) so joint regressors can average it back to p0.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    a, u, v = _orthonormal_frame(p1 - p0)
    phis = 2.0 * np.pi * np.arange(n_around) / n_around
    ring_dirs = np.outer(np.cos(phis), u) + np.outer(np.sin(phis), v)

    verts = [p0 - r0 * a]
    rings = []  # start index of each full ring
    # base cap: pole -> equator at the p0 plane
    for i in range(1, n_cap + 1):
        alpha = 0.5 * np.pi * i / n_cap
        center = p0 - r0 * np.cos(alpha) * a
        rings.append(len(verts))
        verts.extend(center + r0 * np.sin(alpha) * ring_dirs)
    base_ring = rings[-1]  # exactly in the p0 plane
    # tip cap: equator at the p1 plane -> pole
    for i in range(n_cap, 0, -1):
        alpha = 0.5 * np.pi * i / n_cap
        center = p1 + r1 * np.cos(alpha) * a
        rings.append(len(verts))
        verts.extend(center + r1 * np.sin(alpha) * ring_dirs)
    verts.append(p1 + r1 * a)
    tip_pole = len(verts) - 1

    faces = []
    for k in range(n_around):
        nk = (k + 1) % n_around
        faces.append([0, rings[0] + nk, rings[0] + k])
    for r0i, r1i in zip(rings[:-1], rings[1:]):
        for k in range(n_around):
            nk = (k + 1) % n_around
            faces.append([r0i + k, r0i + nk, r1i + k])
            faces.append([r0i + nk, r1i + nk, r1i + k])
    last = rings[-1]
    for k in range(n_around):
        nk = (k + 1) % n_around
        faces.append([last + k, last + nk, tip_pole])
    return np.array(verts), np.array(faces), base_ring


def _point_segment_distance(points, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else 0.0
    proj = a + np.outer(t, ab) if denom > 0 else np.broadcast_to(a, points.shape)
    return np.linalg.norm(points - proj, axis=1)


def make_synthetic_hand(config: SyntheticHandConfig | None = None) -> HandModel:
    """Watertight capsule hand: one palm capsule plus a capsule per finger
    segment.  J = 1 + fingers * segments; B = 2 blendshapes (global scale
    about the wrist, finger lengthening)."""
    cfg = config or SyntheticHandConfig()
    n_joints = 1 + cfg.fingers * cfg.segments

    # joint layout: wrist at the origin, palm along +y, fingers fan out in x
    rest = np.zeros((n_joints, 3))
    parents = np.full(n_joints, -1, dtype=np.int64)
    finger_base_y = cfg.palm_length + cfg.finger_radius
    if cfg.fingers > 1:
        xs = np.linspace(-cfg.finger_spread, cfg.finger_spread, cfg.fingers)
    else:
        xs = np.zeros(max(cfg.fingers, 1))
    jid = 1
    bone_ends = [np.array([0.0, cfg.palm_length, 0.0])]  # per joint
    for f in range(cfg.fingers):
        for s in range(cfg.segments):
            rest[jid] = [xs[f], finger_base_y + s * cfg.segment_length, 0.0]
            parents[jid] = 0 if s == 0 else jid - 1
            bone_ends.append(rest[jid] + np.array([0.0, cfg.segment_length, 0.0]))
            jid += 1

    all_verts: list[np.ndarray] = []
    all_faces: list[np.ndarray] = []
    ring_of_joint: dict[int, tuple[int, int]] = {}  # joint -> (start, count)

    def add_component(verts, faces, joint=None, base_ring=None):
        offset = sum(v.shape[0] for v in all_verts)
        if joint is not None:
            ring_of_joint[joint] = (offset + base_ring, cfg.n_around)
        all_verts.append(verts)
        all_faces.append(faces + offset)

    pv, pf, pring = _capsule(np.zeros(3), np.array([0.0, cfg.palm_length, 0.0]),
                             cfg.palm_radius, cfg.palm_radius,
                             2 * cfg.n_around, cfg.n_cap + 1)
    add_component(pv, pf, joint=0, base_ring=pring)
    # palm base ring has 2 * n_around vertices
    ring_of_joint[0] = (ring_of_joint[0][0], 2 * cfg.n_around)

    jid = 1
    for f in range(cfg.fingers):
        r = cfg.finger_radius
        for s in range(cfg.segments):
            r_next = r * cfg.finger_taper
            cv, cf, cring = _capsule(rest[jid], bone_ends[jid], r, r_next,
                                     cfg.n_around, cfg.n_cap)
            add_component(cv, cf, joint=jid, base_ring=cring)
            r = r_next
            jid += 1

    vertices = np.concatenate(all_verts)
    faces = np.concatenate(all_faces)

    # distance-based skinning weights over bone segments
    k = vertices.shape[0]
    d = np.empty((k, n_joints))
    for j in range(n_joints):
        d[:, j] = _point_segment_distance(vertices, rest[j], bone_ends[j])
    w = np.exp(-(d / cfg.weight_sigma) ** 2)
    w /= w.sum(axis=1, keepdims=True)
    # make each row float-sum to exactly 1 so the zero pose is bit-exact
    for _ in range(4):
        resid = 1.0 - w.sum(axis=1)
        if not resid.any():
            break
        w[np.arange(k), w.argmax(axis=1)] += resid

    # regressor: uniform average of the vertex ring at each joint plane
    reg = np.zeros((n_joints, k))
    for j, (start, count) in ring_of_joint.items():
        reg[j, start:start + count] = 1.0 / count

    # blendshapes: global scale about the wrist; finger lengthening
    basis = np.zeros((k, 3, 2))
    basis[:, :, 0] = vertices
    stretch = np.maximum(vertices[:, 1] - finger_base_y, 0.0)
    basis[:, 1, 1] = stretch

    return HandModel(
        template_vertices=vertices,
        faces=faces,
        skinning_weights=w,
        parents=parents,
        joint_rest_positions=rest,
        shape_basis=basis,
        joint_regressor=reg,
    )
