"""Hand sequence recovery from correspondence fields: two-stage first-order
minimization of the correspondence loss plus shape/pose/acceleration
regularizers, with fully analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInitialization
from .geometry import Bvh, SurfacePoint, TriMesh
from .handmodel import HandFrame, HandModel, HandSequence, HandleSet, \
    joint_transforms, pose_derivative_ops
from .tochfield import DecodedCloud, TochFrame, TochSequence, decode_field


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.  Weights follow the loss
    w1|beta|^2 + w2 sum|theta|^2 + w3 sum|dtheta|^2 + w4 smooth-norm(accel);
    defaults keep regularizer magnitudes well below the correspondence term
    on desk-scale problems."""

    w1: float = 1e-3
    w2: float = 1e-5
    w3: float = 1e-2
    w4: float = 1e-3
    stage1_iters: int = 60
    stage2_iters: int = 150
    step_init: float = 1.0
    step_grow: float = 1.5
    step_shrink: float = 0.5
    step_max: float = 1.0
    max_backtracks: int = 30
    curv_eps: float = 1e-8
    smooth_eps: float = 1e-6
    tol: float = 0.0  # relative loss decrease below which a stage stops

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise InvalidInitialization("regularizer weights must be >= 0")
        if self.stage1_iters < 0 or self.stage2_iters < 0:
            raise InvalidInitialization("iteration counts must be >= 0")


@dataclass(frozen=True)
class StageReport:
    iterations: int
    initial_loss: float
    final_loss: float
    history: tuple


@dataclass(frozen=True)
class FitReport:
    """Loss bookkeeping for both stages plus final per-frame residuals."""

    stage1: StageReport
    stage2: StageReport
    corr: float
    reg_terms: dict
    per_frame_residual_rms: np.ndarray = field(default=None)


def project_canonical(model: HandModel, canonical: np.ndarray,
                      template_bvh: Bvh | None = None) -> list[SurfacePoint]:
    """Proj_Y: nearest template-surface point for each decoded canonical
    coordinate (computed once per fit; correspondences stay fixed)."""
    if template_bvh is None:
        template_bvh = Bvh(TriMesh(model.template_vertices, model.faces))
    return [template_bvh.closest_point(y) for y in canonical]


# ---------------------------------------------------------------------------
# correspondence loss

def corr_loss(model: HandModel, frame: HandFrame, toch_frame: TochFrame,
              decoded: DecodedCloud | None = None,
              surface_points: list[SurfacePoint] | None = None,
              handles: HandleSet | None = None):
    """Sum of squared distances between decoded target positions and the
    posed projections of their canonical coordinates.

    Returns (loss, grads) with grads keyed 'beta', 'pose', 'trans'.  An
    empty correspondence set yields zero loss and gradients.
    """
    if decoded is None:
        decoded = decode_field(toch_frame)
    zero = {"beta": np.zeros(model.num_shape_coeffs),
            "pose": np.zeros((model.num_joints, 3)),
            "trans": np.zeros(3)}
    if decoded.positions.shape[0] == 0:
        return 0.0, zero
    if handles is None:
        if surface_points is None:
            surface_points = project_canonical(model, decoded.canonical)
        handles = HandleSet.from_surface_points(model, surface_points)
    g = joint_transforms(model, frame.pose)
    ops = pose_derivative_ops(model, frame.pose, g)
    pos, dpose, dshape = handles.positions_and_jacobians(
        g, ops, frame.shape, frame.trans)
    r = pos - decoded.positions
    loss = float(np.einsum("ha,ha->", r, r))
    grads = {
        "beta": 2.0 * np.einsum("ha,hab->b", r, dshape),
        "pose": 2.0 * np.einsum("ha,hmab->mb", r, np.swapaxes(dpose, 2, 3)),
        "trans": 2.0 * r.sum(axis=0),
    }
    return loss, grads


def _corr_loss_only(handles: HandleSet, g, beta, trans, targets):
    r = handles.positions(g, beta, trans) - targets
    return float(np.einsum("ha,ha->", r, r))


# ---------------------------------------------------------------------------
# regularizers

def reg_loss(model: HandModel, seq: HandSequence, cfg: FitConfig,
             joint_handles: HandleSet | None = None):
    """Shape, pose-magnitude, pose-velocity and joint-acceleration
    regularizers over the whole sequence.

    The acceleration term uses frame-index second differences of the
    regressed joints; it appears only for T >= 3, with boundary frames
    contributing the smooth-norm floor (their acceleration is defined as
    zero).  Returns (loss, grads) with grads 'beta', 'pose' (T, J, 3),
    'trans' (T, 3).
    """
    t = len(seq)
    jn = model.num_joints
    beta = seq.shape
    poses = np.stack([f.pose for f in seq.frames])

    loss = cfg.w1 * float(beta @ beta)
    g_beta = 2.0 * cfg.w1 * beta
    g_pose = 2.0 * cfg.w2 * poses
    g_trans = np.zeros((t, 3))
    loss += cfg.w2 * float(np.einsum("tjk,tjk->", poses, poses))

    if t >= 2:
        vel = poses[1:] - poses[:-1]
        loss += cfg.w3 * float(np.einsum("tjk,tjk->", vel, vel))
        g_pose[1:] += 2.0 * cfg.w3 * vel
        g_pose[:-1] -= 2.0 * cfg.w3 * vel

    if t >= 3 and cfg.w4 > 0.0:
        if joint_handles is None:
            joint_handles = HandleSet.from_regressor(model)
        pos = np.empty((t, jn, 3))
        dpose = np.empty((t, jn, jn, 3, 3))
        dshape = np.empty((t, jn, 3, model.num_shape_coeffs))
        for i, f in enumerate(seq.frames):
            g = joint_transforms(model, f.pose)
            ops = pose_derivative_ops(model, f.pose, g)
            pos[i], dpose[i], dshape[i] = joint_handles.positions_and_jacobians(
                g, ops, beta, f.trans)
        acc = pos[2:] - 2.0 * pos[1:-1] + pos[:-2]  # (T-2, J, 3)
        s = np.sqrt(np.einsum("tka,tka->tk", acc, acc) + cfg.smooth_eps ** 2)
        loss += cfg.w4 * (float(s.sum()) + 2.0 * jn * cfg.smooth_eps)
        u = cfg.w4 * acc / s[:, :, None]  # dL/d(acc)
        # dL/d(pos): +u at i-1 and i+1, -2u at i
        dpos = np.zeros_like(pos)
        dpos[2:] += u
        dpos[:-2] += u
        dpos[1:-1] -= 2.0 * u
        for i in range(t):
            g_beta += np.einsum("ka,kab->b", dpos[i], dshape[i])
            g_pose[i] += np.einsum("ka,kmab->mb", dpos[i],
                                   np.swapaxes(dpose[i], 2, 3))
            g_trans[i] += dpos[i].sum(axis=0)

    return loss, {"beta": g_beta, "pose": g_pose, "trans": g_trans}


def _reg_loss_only(model, beta, poses, trans, cfg, joint_handles):
    t = poses.shape[0]
    jn = model.num_joints
    loss = cfg.w1 * float(beta @ beta)
    loss += cfg.w2 * float(np.einsum("tjk,tjk->", poses, poses))
    if t >= 2:
        vel = poses[1:] - poses[:-1]
        loss += cfg.w3 * float(np.einsum("tjk,tjk->", vel, vel))
    if t >= 3 and cfg.w4 > 0.0:
        pos = np.empty((t, jn, 3))
        for i in range(t):
            g = joint_transforms(model, poses[i])
            pos[i] = joint_handles.positions(g, beta, trans[i])
        acc = pos[2:] - 2.0 * pos[1:-1] + pos[:-2]
        s = np.sqrt(np.einsum("tka,tka->tk", acc, acc) + cfg.smooth_eps ** 2)
        loss += cfg.w4 * (float(s.sum()) + 2.0 * jn * cfg.smooth_eps)
    return loss


# ---------------------------------------------------------------------------
# sequence fitting

class _Problem:
    """Packed-parameter view of the total loss over a sequence."""

    def __init__(self, model: HandModel, toch_seq: TochSequence,
                 init: HandSequence, cfg: FitConfig):
        self.model = model
        self.cfg = cfg
        self.t = len(init)
        self.jn = model.num_joints
        self.b = model.num_shape_coeffs
        self.fps = init.fps
        bvh = Bvh(TriMesh(model.template_vertices, model.faces))
        self.decoded = [decode_field(f) for f in toch_seq.frames]
        self.handles = []
        for dec in self.decoded:
            if dec.positions.shape[0] == 0:
                self.handles.append(None)
            else:
                sps = project_canonical(model, dec.canonical, bvh)
                self.handles.append(HandleSet.from_surface_points(model, sps))
        self.joint_handles = HandleSet.from_regressor(model)

    def pack(self, seq: HandSequence) -> np.ndarray:
        return np.concatenate(
            [seq.shape]
            + [f.pose.ravel() for f in seq.frames]
            + [f.trans for f in seq.frames])

    def unpack(self, x: np.ndarray):
        b, t, jn = self.b, self.t, self.jn
        beta = x[:b]
        poses = x[b:b + t * jn * 3].reshape(t, jn, 3)
        trans = x[b + t * jn * 3:].reshape(t, 3)
        return beta, poses, trans

    def to_sequence(self, x: np.ndarray) -> HandSequence:
        beta, poses, trans = self.unpack(x)
        frames = tuple(HandFrame(pose=poses[i], trans=trans[i], shape=beta)
                       for i in range(self.t))
        return HandSequence(frames=frames, fps=self.fps)

    def mask(self, stage: int) -> np.ndarray:
        m = np.zeros(self.b + self.t * self.jn * 3 + self.t * 3)
        b, t, jn = self.b, self.t, self.jn
        if stage == 1:
            pose = m[b:b + t * jn * 3].reshape(t, jn, 3)
            pose[:, 0, :] = 1.0  # root orientation
            m[b + t * jn * 3:] = 1.0  # translations
        else:
            m[:] = 1.0
        return m

    def loss(self, x: np.ndarray) -> float:
        beta, poses, trans = self.unpack(x)
        total = _reg_loss_only(self.model, beta, poses, trans, self.cfg,
                               self.joint_handles)
        for i in range(self.t):
            if self.handles[i] is None:
                continue
            g = joint_transforms(self.model, poses[i])
            total += _corr_loss_only(self.handles[i], g, beta, trans[i],
                                     self.decoded[i].positions)
        return total

    def loss_and_grad(self, x: np.ndarray):
        seq = self.to_sequence(x)
        total, reg = reg_loss(self.model, seq, self.cfg, self.joint_handles)
        g_beta = reg["beta"].copy()
        g_pose = reg["pose"].copy()
        g_trans = reg["trans"].copy()
        corr_total = 0.0
        per_frame = np.zeros(self.t)
        # diagonal Gauss-Newton curvature for per-parameter step scaling
        cfg = self.cfg
        c_beta = np.full(self.b, 2.0 * cfg.w1)
        c_pose = np.full((self.t, self.jn, 3), 2.0 * cfg.w2)
        c_trans = np.zeros((self.t, 3))
        if self.t >= 2 and cfg.w3 > 0.0:
            c_pose += 4.0 * cfg.w3
            c_pose[0] -= 2.0 * cfg.w3
            c_pose[-1] -= 2.0 * cfg.w3
        for i, f in enumerate(seq.frames):
            if self.handles[i] is None:
                continue
            g = joint_transforms(self.model, f.pose)
            ops = pose_derivative_ops(self.model, f.pose, g)
            pos, dpose, dshape = self.handles[i].positions_and_jacobians(
                g, ops, f.shape, f.trans)
            r = pos - self.decoded[i].positions
            li = float(np.einsum("ha,ha->", r, r))
            corr_total += li
            nc = self.decoded[i].positions.shape[0]
            per_frame[i] = np.sqrt(li / nc)
            g_beta += 2.0 * np.einsum("ha,hab->b", r, dshape)
            g_pose[i] += 2.0 * np.einsum("hx,hmax->ma", r, dpose)
            g_trans[i] += 2.0 * r.sum(axis=0)
            c_beta += 2.0 * np.einsum("hab,hab->b", dshape, dshape)
            c_pose[i] += 2.0 * np.einsum("hmax,hmax->ma", dpose, dpose)
            c_trans[i] += 2.0 * nc
        grad = np.concatenate([g_beta, g_pose.ravel(), g_trans.ravel()])
        curv = np.concatenate([c_beta, c_pose.ravel(), c_trans.ravel()])
        return total + corr_total, grad, curv, corr_total, per_frame


def _descend(problem: _Problem, x: np.ndarray, mask: np.ndarray,
             iters: int, cfg: FitConfig):
    loss, grad, curv, _, _ = problem.loss_and_grad(x)
    if not np.isfinite(loss):
        raise InvalidInitialization("non-finite loss at initialization")
    history = [loss]
    lr = cfg.step_init
    used = 0
    for _ in range(iters):
        g = grad * mask
        floor = cfg.curv_eps * max(float(curv.max()), 1.0)
        direction = g / (curv + floor)
        step = lr
        accepted = False
        for bt in range(cfg.max_backtracks):
            x2 = x - step * direction
            l2 = problem.loss(x2)
            if np.isfinite(l2) and l2 <= loss:
                accepted = True
                break
            step *= cfg.step_shrink
        if not accepted:
            break
        used += 1
        lr = min(step * cfg.step_grow, cfg.step_max)
        drop = loss - l2
        x = x2
        loss, grad, curv, _, _ = problem.loss_and_grad(x)
        history.append(loss)
        if cfg.tol > 0.0 and drop < cfg.tol * max(abs(loss), 1e-30):
            break
    return x, StageReport(iterations=used, initial_loss=history[0],
                          final_loss=history[-1], history=tuple(history))


def fit_sequence(model: HandModel, toch_seq: TochSequence,
                 init: HandSequence, cfg: FitConfig | None = None):
    """Two-stage recovery: root orientation and translation first, then all
    shape, pose and translation parameters jointly.  Deterministic; accepted
    steps never increase the loss.  Returns (HandSequence, FitReport)."""
    cfg = cfg or FitConfig()
    if len(toch_seq) != len(init):
        raise InvalidInitialization(
            f"field frames ({len(toch_seq)}) != init frames ({len(init)})")
    problem = _Problem(model, toch_seq, init, cfg)
    x = problem.pack(init)
    x, rep1 = _descend(problem, x, problem.mask(1), cfg.stage1_iters, cfg)
    x, rep2 = _descend(problem, x, problem.mask(2), cfg.stage2_iters, cfg)
    out = problem.to_sequence(x)
    _, _, _, corr_total, per_frame = problem.loss_and_grad(x)
    _, reg = reg_loss(model, out, cfg, problem.joint_handles)
    reg_terms = _reg_breakdown(model, out, cfg, problem.joint_handles)
    report = FitReport(stage1=rep1, stage2=rep2, corr=corr_total,
                       reg_terms=reg_terms,
                       per_frame_residual_rms=per_frame)
    return out, report


def _reg_breakdown(model, seq, cfg, joint_handles) -> dict:
    beta = seq.shape
    poses = np.stack([f.pose for f in seq.frames])
    trans = np.stack([f.trans for f in seq.frames])
    out = {"shape": cfg.w1 * float(beta @ beta),
           "pose": cfg.w2 * float(np.einsum("tjk,tjk->", poses, poses))}
    out["velocity"] = cfg.w3 * float(np.einsum(
        "tjk,tjk->", poses[1:] - poses[:-1], poses[1:] - poses[:-1])) \
        if len(seq) >= 2 else 0.0
    only = _reg_loss_only(model, beta, poses, trans, cfg, joint_handles)
    out["acceleration"] = only - out["shape"] - out["pose"] - out["velocity"]
    return out
