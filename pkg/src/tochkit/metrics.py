"""Interaction-quality metrics: joint/vertex position error, solid
intersection volume and contact-map IoU."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import PointSetMismatch, ShapeMismatch
from .geometry import Bvh, TriMesh, apply_rigid, procrustes_align, voxel_centers
from .tochfield import DEFAULT_TAU, TochFrame, contact_map

DEFAULT_VOXEL_EDGE = 0.005  # meters


@dataclass(frozen=True)
class MetricReport:
    """Aggregate metric values with per-frame breakdowns.

    Position errors are millimeters, intersection volume cubic centimeters,
    contact IoU percent.
    """

    mpjpe: float
    mpvpe: float
    iv: float
    ciou: float
    procrustes: bool = False
    per_frame: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mpjpe_mm": self.mpjpe,
            "mpvpe_mm": self.mpvpe,
            "iv_cm3": self.iv,
            "ciou_percent": self.ciou,
            "procrustes": self.procrustes,
            "per_frame": {k: list(map(float, v))
                          for k, v in self.per_frame.items()},
        }


def _as_point_stack(items) -> np.ndarray:
    """(T, N, 3) array from an array or a list of meshes/arrays."""
    if isinstance(items, np.ndarray):
        arr = items
    else:
        rows = [m.vertices if isinstance(m, TriMesh) else np.asarray(m)
                for m in items]
        arr = np.stack(rows)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeMismatch(f"expected (T, N, 3) points, got {arr.shape}")
    return arr


def _position_error(pred, gt, procrustes: bool):
    pred = _as_point_stack(pred)
    gt = _as_point_stack(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatch(
            f"prediction {pred.shape} does not match groundtruth {gt.shape}")
    per_frame = np.empty(pred.shape[0])
    for i in range(pred.shape[0]):
        p = pred[i]
        if procrustes:
            r, t = procrustes_align(p, gt[i])
            p = apply_rigid(p, r, t)
        per_frame[i] = np.linalg.norm(p - gt[i], axis=1).mean()
    return 1000.0 * per_frame.mean(), 1000.0 * per_frame


def mpjpe(pred_joints, gt_joints, procrustes: bool = False) -> float:
    """Mean per-joint position error in millimeters over all frames."""
    return _position_error(pred_joints, gt_joints, procrustes)[0]


def mpvpe(pred_meshes, gt_meshes, procrustes: bool = False) -> float:
    """Mean per-vertex position error in millimeters; accepts meshes or
    (T, N, 3) vertex arrays."""
    return _position_error(pred_meshes, gt_meshes, procrustes)[0]


def mpjpe_per_frame(pred_joints, gt_joints, procrustes: bool = False):
    return _position_error(pred_joints, gt_joints, procrustes)[1]


def mpvpe_per_frame(pred_meshes, gt_meshes, procrustes: bool = False):
    return _position_error(pred_meshes, gt_meshes, procrustes)[1]


def intersection_volume(hand: TriMesh, object_bvh: Bvh,
                        voxel_edge: float = DEFAULT_VOXEL_EDGE,
                        hand_bvh: Bvh | None = None) -> float:
    """Solid intersection volume in cubic centimeters.

    Voxel centers over the AABB overlap region that fall inside both
    meshes; disjoint bounding boxes short-circuit to zero.
    """
    for mesh, what in ((hand, "hand"), (object_bvh.mesh, "object")):
        if not mesh.is_closed():
            warnings.warn(f"intersection volume with an open {what} mesh",
                          stacklevel=2)
    lo_h, hi_h = hand.aabb()
    lo_o, hi_o = object_bvh.mesh.aabb()
    lo = np.maximum(lo_h, lo_o)
    hi = np.minimum(hi_h, hi_o)
    if (lo >= hi).any():
        return 0.0
    dims = np.maximum(np.ceil((hi - lo) / voxel_edge).astype(int), 1)
    centers = voxel_centers(lo, voxel_edge, dims)
    if hand_bvh is None:
        hand_bvh = Bvh(hand)
    both = hand_bvh.contains(centers) & object_bvh.contains(centers)
    return float(both.sum()) * (100.0 * voxel_edge) ** 3


def contact_iou(pred_field: TochFrame, gt_field: TochFrame,
                tau: float = DEFAULT_TAU) -> float:
    """IoU of thresholded contact maps, in percent.

    Both maps empty counts as perfect agreement (100)."""
    if pred_field.n != gt_field.n or not np.array_equal(
            pred_field.point_set.points, gt_field.point_set.points):
        raise PointSetMismatch("contact IoU needs one shared point set")
    a = contact_map(pred_field, tau)
    b = contact_map(gt_field, tau)
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 100.0
    return 100.0 * int(np.logical_and(a, b).sum()) / union
