"""Object-centric correspondence fields: extraction from hand/object mesh
pairs, decoding back to partial hand point clouds, contact maps and the
binary field file format.

Per object sample point the field stores a correspondence flag ``c``, a
signed distance ``d`` along the point's surface normal, and the canonical
template coordinate ``y`` of the corresponding hand surface point.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEpsilon, InvalidMesh, PointSetMismatch
from .geometry import Bvh, ObjectPointSet, TriMesh, sample_surface

DEFAULT_EPS = 1e-4  # offset for the self-occlusion re-cast, meters
DEFAULT_TAU = 0.002  # contact threshold on |d|, meters
DEFAULT_N_POINTS = 2000


@dataclass(frozen=True)
class TochFrame:
    """Field values for one frame over a fixed object point set.

    Entries with ``c == 0`` carry the null values d = 0, y = (0, 0, 0) and
    must be masked by consumers.
    """

    c: np.ndarray  # (N,) uint8 in {0, 1}
    d: np.ndarray  # (N,) float64, signed meters
    y: np.ndarray  # (N, 3) float64 canonical coordinates
    point_set: ObjectPointSet

    def __post_init__(self):
        n = self.point_set.n
        if self.c.shape != (n,) or self.d.shape != (n,) or self.y.shape != (n, 3):
            raise PointSetMismatch("field arrays inconsistent with point set")

    @property
    def n(self) -> int:
        return self.point_set.n


@dataclass(frozen=True)
class TochSequence:
    """T frames sharing one object point set."""

    frames: tuple[TochFrame, ...]
    point_set: ObjectPointSet

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 1:
            raise PointSetMismatch("sequence needs at least one frame")
        for f in frames:
            if f.point_set is not self.point_set and \
                    not np.array_equal(f.point_set.points, self.point_set.points):
                raise PointSetMismatch("all frames must share one point set")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class DecodedCloud:
    """Partial hand point cloud decoded from one field frame."""

    positions: np.ndarray  # (M, 3) target positions o + d n
    canonical: np.ndarray  # (M, 3) template coordinates
    indices: np.ndarray  # (M,) indices into the point set


# ---------------------------------------------------------------------------
# extraction

def extract_field(hand: TriMesh, object_bvh: Bvh, points: ObjectPointSet,
                  eps: float = DEFAULT_EPS,
                  template_vertices: np.ndarray | None = None,
                  hand_bvh: Bvh | None = None) -> TochFrame:
    """Correspondence search by casting rays from object points along their
    (signed) normals against the hand mesh.

    The sign flips to the inward normal for points inside the hand.  A hit
    only counts when the object does not occlude it: a second ray offset by
    ``eps`` must not strike the object first.  ``template_vertices`` maps
    hit faces to canonical coordinates; defaults to the hand's own vertices.

    Hand and object must be expressed in the same (object-local) coordinate
    frame; a mismatch is undetectable here.
    """
    if eps <= 0:
        raise InvalidEpsilon("eps must be positive")
    if hand_bvh is None:
        hand_bvh = Bvh(hand)
    if template_vertices is None:
        template_vertices = hand.vertices
    template_vertices = np.asarray(template_vertices, dtype=np.float64)
    if template_vertices.shape != hand.vertices.shape:
        raise InvalidMesh("template vertex count differs from the hand mesh")

    n = points.n
    c = np.zeros(n, dtype=np.uint8)
    d = np.zeros(n)
    y = np.zeros((n, 3))

    inside = hand_bvh.contains(points.points)
    signs = np.where(inside, -1.0, 1.0)
    for i in range(n):
        o = points.points[i]
        direction = signs[i] * points.normals[i]
        hit = hand_bvh.intersect_ray(o, direction)
        if hit is None:
            continue
        sp1, t1 = hit
        occ = object_bvh.intersect_ray(o + eps * direction, direction)
        if occ is not None and t1 >= eps + occ[1]:
            continue  # the object itself is hit first
        c[i] = 1
        d[i] = signs[i] * t1
        y[i] = sp1.barycentric @ template_vertices[hand.faces[sp1.face_index]]
    return TochFrame(c=c, d=d, y=y, point_set=points)


def extract_sequence(hands, object_mesh: TriMesh, n_points: int = DEFAULT_N_POINTS,
                     seed: int = 0, eps: float = DEFAULT_EPS,
                     template_vertices: np.ndarray | None = None,
                     threads: int = 1,
                     point_set: ObjectPointSet | None = None) -> TochSequence:
    """Extract fields for a list of per-frame hand meshes over one shared
    object point set (sampled once)."""
    hands = list(hands)
    if not hands:
        raise InvalidMesh("need at least one hand mesh")
    if point_set is None:
        point_set = sample_surface(object_mesh, n_points, seed)
    object_bvh = Bvh(object_mesh)

    def one(mesh: TriMesh) -> TochFrame:
        return extract_field(mesh, object_bvh, point_set, eps=eps,
                             template_vertices=template_vertices)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            frames = tuple(pool.map(one, hands))
    else:
        frames = tuple(one(m) for m in hands)
    return TochSequence(frames=frames, point_set=point_set)


# ---------------------------------------------------------------------------
# decoding and contact

def decode_field(frame: TochFrame) -> DecodedCloud:
    """Target positions o + d n with canonical coordinates for every
    correspondence; non-correspondences are omitted."""
    idx = np.flatnonzero(frame.c == 1)
    ps = frame.point_set
    pos = ps.points[idx] + frame.d[idx, None] * ps.normals[idx]
    return DecodedCloud(positions=pos, canonical=frame.y[idx].copy(), indices=idx)


def contact_map(frame: TochFrame, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Boolean contact per object point: correspondence within |d| <= tau."""
    if tau <= 0:
        raise InvalidEpsilon("tau must be positive")
    return (frame.c == 1) & (np.abs(frame.d) <= tau)


# ---------------------------------------------------------------------------
# binary field file

MAGIC = b"TOCH"
FORMAT_VERSION = 1
_RECORD = np.dtype([("c", "u1"), ("d", "<f4"), ("y", "<f4", (3,))])
_POINT = np.dtype([("p", "<f4", (3,)), ("n", "<f4", (3,))])


def write_toch(seq: TochSequence, path) -> None:
    t = len(seq)
    n = seq.point_set.n
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIIQ", FORMAT_VERSION, t, n,
                             seq.point_set.seed & 0xFFFFFFFFFFFFFFFF))
        rec = np.empty(t * n, dtype=_RECORD)
        for i, frame in enumerate(seq.frames):
            rec["c"][i * n:(i + 1) * n] = frame.c
            rec["d"][i * n:(i + 1) * n] = frame.d.astype(np.float32)
            rec["y"][i * n:(i + 1) * n] = frame.y.astype(np.float32)
        fh.write(rec.tobytes())
        pts = np.empty(n, dtype=_POINT)
        pts["p"] = seq.point_set.points.astype(np.float32)
        pts["n"] = seq.point_set.normals.astype(np.float32)
        fh.write(pts.tobytes())


def read_toch(path) -> TochSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise InvalidMesh(f"{path}: not a field file (bad magic)")
        version, t, n, seed = struct.unpack("<IIIQ", fh.read(20))
        if version != FORMAT_VERSION:
            raise InvalidMesh(f"{path}: unsupported field version {version}")
        rec = np.frombuffer(fh.read(t * n * _RECORD.itemsize), dtype=_RECORD)
        pts = np.frombuffer(fh.read(n * _POINT.itemsize), dtype=_POINT)
        if rec.shape[0] != t * n or pts.shape[0] != n:
            raise InvalidMesh(f"{path}: truncated field file")
    point_set = ObjectPointSet(points=pts["p"].astype(np.float64),
                               normals=pts["n"].astype(np.float64),
                               face_indices=np.full(n, -1, dtype=np.int64),
                               seed=int(seed), n=int(n))
    frames = []
    for i in range(t):
        sl = rec[i * n:(i + 1) * n]
        frames.append(TochFrame(c=sl["c"].copy(),
                                d=sl["d"].astype(np.float64),
                                y=sl["y"].astype(np.float64),
                                point_set=point_set))
    return TochSequence(frames=tuple(frames), point_set=point_set)
