"""Triangle meshes and spatial queries: sampling, ray casting, insideness,
closest points, solid voxelization and rigid alignment.

All positions are in meters.  Meshes are immutable after construction and all
queries are read-only, so they can be shared freely across threads.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateConfiguration,
    GridTooSmall,
    InvalidDirection,
    InvalidMesh,
)

# Faces flatter than this area are rejected as degenerate.
MIN_FACE_AREA = 1e-12
# Rays hitting a face at a grazing angle (|dir . n| below this) are misses.
GRAZING_EPS = 1e-9
# Slack on barycentric bounds so shared-edge hits register on both faces;
# equal-t ties are broken by lowest face index.
BARY_EPS = 1e-10


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle surface with per-face unit normals."""

    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64
    face_normals: np.ndarray = field(init=False, repr=False)
    face_areas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidMesh(f"vertices must be (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise InvalidMesh(f"faces must be (F, 3), got {f.shape}")
        if f.shape[0] == 0 or v.shape[0] == 0:
            raise InvalidMesh("empty mesh")
        if f.min() < 0 or f.max() >= v.shape[0]:
            raise InvalidMesh("face index out of range")
        if not np.isfinite(v).all():
            raise InvalidMesh("non-finite vertex coordinates")
        tri = v[f]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        areas = 0.5 * norms
        if (areas <= MIN_FACE_AREA).any():
            raise InvalidMesh("degenerate face (area <= 1e-12 m^2)")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "face_normals", cross / norms[:, None])
        object.__setattr__(self, "face_areas", areas)
        v.setflags(write=False)
        f.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def triangles(self) -> np.ndarray:
        """(F, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def is_closed(self) -> bool:
        """True iff every undirected edge is used by exactly two faces with
        opposite orientation."""
        f = self.faces
        edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        directed = {}
        for a, b in edges:
            directed[(int(a), int(b))] = directed.get((int(a), int(b)), 0) + 1
        for (a, b), n in directed.items():
            if n != 1 or directed.get((b, a), 0) != 1:
                return False
        return True

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "TriMesh":
        """Rigidly transformed copy (same faces)."""
        r = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        return TriMesh(self.vertices @ r.T + t, self.faces)

    def volume(self) -> float:
        """Signed volume via the divergence theorem (meaningful for closed
        meshes with outward normals)."""
        tri = self.triangles()
        return float(np.einsum("ij,ij->i", tri[:, 0],
                               np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


@dataclass(frozen=True)
class SurfacePoint:
    """Point on a mesh face, stored as barycentric coordinates."""

    face_index: int
    barycentric: np.ndarray  # (3,) b >= 0, sums to 1
    position: np.ndarray  # (3,)

    @staticmethod
    def from_barycentric(mesh: TriMesh, face_index: int, bary) -> "SurfacePoint":
        bary = np.asarray(bary, dtype=np.float64)
        pos = bary @ mesh.vertices[mesh.faces[face_index]]
        return SurfacePoint(int(face_index), bary, pos)


@dataclass(frozen=True)
class ObjectPointSet:
    """Fixed set of surface samples with their face normals.

    Regeneration from the same (mesh, n, seed) is bit-identical.
    """

    points: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3) unit, copied from faces
    face_indices: np.ndarray  # (N,)
    seed: int
    n: int


def sample_surface(mesh: TriMesh, n: int, seed: int) -> ObjectPointSet:
    """Area-weighted uniform surface samples, deterministic in ``seed``.

    Uses the counter-based Philox generator so the stream is reproducible
    independent of sampling order.
    """
    if n < 1:
        raise InvalidMesh("need at least one sample")
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = gen.random((n, 3))
    cum = np.cumsum(mesh.face_areas)
    fidx = np.searchsorted(cum, u[:, 0] * cum[-1], side="right")
    fidx = np.minimum(fidx, mesh.num_faces - 1)
    # sqrt warp gives uniform barycentric samples
    s = np.sqrt(u[:, 1])
    b0 = 1.0 - s
    b1 = s * (1.0 - u[:, 2])
    b2 = s * u[:, 2]
    tri = mesh.vertices[mesh.faces[fidx]]
    pts = b0[:, None] * tri[:, 0] + b1[:, None] * tri[:, 1] + b2[:, None] * tri[:, 2]
    return ObjectPointSet(points=pts, normals=mesh.face_normals[fidx].copy(),
                          face_indices=fidx.astype(np.int64), seed=int(seed), n=int(n))


# ---------------------------------------------------------------------------
# Ray-triangle intersection (Moller-Trumbore, vectorized over triangles)

def _ray_triangles(origin, direction, tri, normals):
    """Intersect one ray with many triangles.

    Returns (t, u, v, hit_mask) arrays.  Grazing incidence counts as a miss;
    barycentric bounds carry a small slack so edge hits are shared.
    """
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    p = np.cross(direction[None, :], e2)
    det = np.einsum("ij,ij->i", e1, p)
    grazing = np.abs(normals @ direction) < GRAZING_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = origin[None, :] - tri[:, 0]
        u = np.einsum("ij,ij->i", tvec, p) * inv
        q = np.cross(tvec, e1)
        v = (q @ direction) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
        hit = (~grazing) & (det != 0.0) \
            & (u >= -BARY_EPS) & (v >= -BARY_EPS) & (u + v <= 1.0 + BARY_EPS) \
            & (t >= 0.0) & np.isfinite(t)
    return t, u, v, hit


def _best_hit(t, u, v, hit, face_ids):
    """Pick nearest hit; equal-t ties go to the lowest face index."""
    if not hit.any():
        return None
    idx = np.flatnonzero(hit)
    tt = t[idx]
    order = np.lexsort((face_ids[idx], tt))
    k = idx[order[0]]
    return int(face_ids[k]), float(t[k]), (float(u[k]), float(v[k]))


# ---------------------------------------------------------------------------
# BVH

class Bvh:
    """Axis-aligned bounding-box tree over the faces of one mesh.

    Immutable after construction; queries return results identical to a
    brute-force scan over all faces.
    """

    LEAF_SIZE = 4

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        tri = mesh.triangles()
        self._tri = tri
        lo = tri.min(axis=1)
        hi = tri.max(axis=1)
        centroids = tri.mean(axis=1)

        node_min, node_max = [], []
        node_left, node_right = [], []
        node_start, node_count = [], []
        order = np.arange(mesh.num_faces)

        def build(idx):
            node = len(node_min)
            node_min.append(lo[idx].min(axis=0))
            node_max.append(hi[idx].max(axis=0))
            node_left.append(-1)
            node_right.append(-1)
            node_start.append(-1)
            node_count.append(0)
            if idx.size <= self.LEAF_SIZE:
                node_start[node] = len(leaf_faces)
                node_count[node] = idx.size
                leaf_faces.extend(idx.tolist())
                return node
            c = centroids[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            split = np.argsort(c[:, axis], kind="stable")
            half = idx.size // 2
            left = idx[split[:half]]
            right = idx[split[half:]]
            node_left[node] = build(left)
            node_right[node] = build(right)
            return node

        leaf_faces: list[int] = []
        import sys
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 10000))
        try:
            build(order)
        finally:
            sys.setrecursionlimit(old)

        self._nmin = np.array(node_min)
        self._nmax = np.array(node_max)
        self._left = np.array(node_left, dtype=np.int64)
        self._right = np.array(node_right, dtype=np.int64)
        self._start = np.array(node_start, dtype=np.int64)
        self._count = np.array(node_count, dtype=np.int64)
        self._leaf_faces = np.array(leaf_faces, dtype=np.int64)
        self._closed = mesh.is_closed()
        self._warned_open = False

    @property
    def is_closed(self) -> bool:
        return self._closed

    def _warn_if_open(self, what: str):
        if not self._closed and not self._warned_open:
            warnings.warn(f"{what} on an open mesh: winding-number result is "
                          "best-effort", stacklevel=3)
            self._warned_open = True

    # -- ray casting --------------------------------------------------------

    def _ray_node(self, origin, inv_dir, node) -> float:
        """Entry distance of the ray into node's AABB, or +inf if missed."""
        t0 = (self._nmin[node] - origin) * inv_dir
        t1 = (self._nmax[node] - origin) * inv_dir
        tmin = np.minimum(t0, t1).max()
        tmax = np.maximum(t0, t1).min()
        if tmax < max(tmin, 0.0):
            return np.inf
        return max(tmin, 0.0)

    def intersect_ray(self, origin, direction):
        """Nearest intersection as ``(SurfacePoint, t)`` or ``None``.

        ``direction`` must be unit length.
        """
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise InvalidDirection("ray direction must be unit length")
        with np.errstate(divide="ignore"):
            inv_dir = 1.0 / direction

        best = None  # (t, face, (u, v))
        stack = [0]
        while stack:
            node = stack.pop()
            tn = self._ray_node(origin, inv_dir, node)
            if not np.isfinite(tn):
                continue
            if best is not None and tn > best[0]:
                continue
            if self._count[node] > 0:
                fids = self._leaf_faces[self._start[node]:
                                        self._start[node] + self._count[node]]
                t, u, v, hit = _ray_triangles(origin, direction,
                                              self._tri[fids],
                                              self.mesh.face_normals[fids])
                cand = _best_hit(t, u, v, hit, fids)
                if cand is not None:
                    f, tc, (uu, vv) = cand
                    if best is None or tc < best[0] or (tc == best[0] and f < best[1]):
                        best = (tc, f, (uu, vv))
            else:
                stack.append(int(self._left[node]))
                stack.append(int(self._right[node]))
        if best is None:
            return None
        t, f, (u, v) = best
        bary = np.array([1.0 - u - v, u, v])
        bary = np.clip(bary, 0.0, 1.0)
        bary = bary / bary.sum()
        sp = SurfacePoint.from_barycentric(self.mesh, f, bary)
        return sp, t

    # -- insideness ---------------------------------------------------------

    def winding_numbers(self, points: np.ndarray) -> np.ndarray:
        """Generalized winding numbers of many query points."""
        return winding_numbers(self.mesh, points)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean insideness for (N, 3) query points (winding > 0.5)."""
        self._warn_if_open("insideness test")
        return self.winding_numbers(points) > 0.5

    # -- closest point ------------------------------------------------------

    def _aabb_dist2(self, p, node) -> float:
        d = np.maximum(np.maximum(self._nmin[node] - p, 0.0),
                       p - self._nmax[node])
        return float(d @ d)

    def closest_point(self, p) -> SurfacePoint:
        """Globally nearest surface point.  Ties break by lowest face index,
        then lexicographically smallest barycentric coordinates."""
        p = np.asarray(p, dtype=np.float64)
        heap = [(self._aabb_dist2(p, 0), 0)]
        best_d2 = np.inf
        best = None  # (d2, face, bary)
        while heap:
            d2, node = heapq.heappop(heap)
            if d2 > best_d2 + 1e-18:
                break
            if self._count[node] > 0:
                fids = self._leaf_faces[self._start[node]:
                                        self._start[node] + self._count[node]]
                cp, bary = closest_point_on_triangles(p, self._tri[fids])
                dd = np.einsum("ij,ij->i", cp - p, cp - p)
                for k in np.argsort(dd, kind="stable"):
                    cand = (dd[k], int(fids[k]), bary[k])
                    if _closer(cand, (best_d2, -1 if best is None else best[1],
                                      None if best is None else best[2])):
                        best = cand
                        best_d2 = dd[k]
            else:
                for child in (int(self._left[node]), int(self._right[node])):
                    cd2 = self._aabb_dist2(p, child)
                    if cd2 <= best_d2 + 1e-18:
                        heapq.heappush(heap, (cd2, child))
        d2, f, bary = best
        return SurfacePoint.from_barycentric(self.mesh, f, bary)


def _closer(cand, best):
    """Distance, then face index, then lexicographic barycentric order.

    A tolerance on the squared distance keeps the tie-break deterministic in
    the presence of round-off between equivalent representations.
    """
    d2, f, bary = cand
    bd2, bf, bbary = best
    if bbary is None:
        return d2 < np.inf
    if d2 < bd2 - 1e-18:
        return True
    if d2 > bd2 + 1e-18:
        return False
    if f != bf:
        return f < bf
    return tuple(bary) < tuple(bbary)


def winding_numbers(mesh: TriMesh, points) -> np.ndarray:
    """Generalized winding number of each query point (Van Oosterom solid
    angles summed over faces, divided by 4 pi)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(points.shape[0])
    tri = mesh.triangles()
    # chunk queries so the (Q, F) intermediates stay small
    chunk = max(1, int(4e6 / max(tri.shape[0], 1)))
    for s in range(0, points.shape[0], chunk):
        q = points[s:s + chunk]
        a = tri[None, :, 0] - q[:, None]
        b = tri[None, :, 1] - q[:, None]
        c = tri[None, :, 2] - q[:, None]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        num = np.einsum("qfi,qfi->qf", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("qfi,qfi->qf", a, b) * lc
               + np.einsum("qfi,qfi->qf", b, c) * la
               + np.einsum("qfi,qfi->qf", c, a) * lb)
        omega = 2.0 * np.arctan2(num, den)
        out[s:s + chunk] = omega.sum(axis=1) / (4.0 * np.pi)
    return out


def closest_point_on_triangles(p: np.ndarray, tri: np.ndarray):
    """Closest point on each of many triangles to one query point.

    Returns (positions (F, 3), barycentric (F, 3)).  Region-based projection
    onto the triangle (Ericson, Real-Time Collision Detection).
    """
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = p[None, :] - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p[None, :] - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p[None, :] - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    n = tri.shape[0]
    bary = np.zeros((n, 3))
    done = np.zeros(n, dtype=bool)

    def settle(mask, b0, b1, b2):
        m = mask & ~done
        bary[m, 0] = b0 if np.isscalar(b0) else b0[m]
        bary[m, 1] = b1 if np.isscalar(b1) else b1[m]
        bary[m, 2] = b2 if np.isscalar(b2) else b2[m]
        done[m] = True

    settle((d1 <= 0) & (d2 <= 0), 1.0, 0.0, 0.0)  # vertex a
    settle((d3 >= 0) & (d4 <= d3), 0.0, 1.0, 0.0)  # vertex b
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
    settle((vc <= 0) & (d1 >= 0) & (d3 <= 0), 1.0 - v_ab, v_ab, 0.0)  # edge ab
    settle((d6 >= 0) & (d5 <= d6), 0.0, 0.0, 1.0)  # vertex c
    vb = d5 * d2 - d1 * d6
    with np.errstate(divide="ignore", invalid="ignore"):
        w_ac = d2 / (d2 - d6)
    settle((vb <= 0) & (d2 >= 0) & (d6 <= 0), 1.0 - w_ac, 0.0, w_ac)  # edge ac
    va = d3 * d6 - d5 * d4
    with np.errstate(divide="ignore", invalid="ignore"):
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    settle((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
           0.0, 1.0 - w_bc, w_bc)  # edge bc
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
    settle(np.ones(n, dtype=bool), 1.0 - v - w, v, w)  # interior

    pos = bary[:, 0:1] * a + bary[:, 1:2] * b + bary[:, 2:3] * c
    return pos, bary


# ---------------------------------------------------------------------------
# Module-level operation wrappers

def ray_mesh_intersect(bvh: Bvh, origin, direction):
    """Nearest ray-mesh intersection, or ``None``."""
    return bvh.intersect_ray(origin, direction)


def point_in_mesh(bvh: Bvh, p) -> bool:
    """True iff the generalized winding number of ``p`` exceeds 0.5."""
    return bool(bvh.contains(np.atleast_2d(np.asarray(p, dtype=np.float64)))[0])


def closest_point_on_mesh(bvh: Bvh, p) -> SurfacePoint:
    return bvh.closest_point(p)


@dataclass(frozen=True)
class OccupancyGrid:
    """Regular voxel grid of insideness flags (in-memory only)."""

    origin: np.ndarray  # (3,) corner of voxel (0,0,0)
    voxel_edge: float
    occupied: np.ndarray  # (nx, ny, nz) bool

    def volume(self) -> float:
        """Occupied volume in cubic meters."""
        return float(self.occupied.sum()) * self.voxel_edge ** 3


def voxel_centers(grid_origin, voxel_edge, dims) -> np.ndarray:
    gx, gy, gz = dims
    idx = np.stack(np.meshgrid(np.arange(gx), np.arange(gy), np.arange(gz),
                               indexing="ij"), axis=-1).reshape(-1, 3)
    return np.asarray(grid_origin, dtype=np.float64) + (idx + 0.5) * voxel_edge


def voxelize_solid(bvh: Bvh, voxel_edge: float, grid_origin, dims) -> OccupancyGrid:
    """Occupancy grid where a voxel is set iff its center is inside the mesh."""
    if voxel_edge <= 0:
        raise GridTooSmall("voxel_edge must be positive")
    grid_origin = np.asarray(grid_origin, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    lo, hi = bvh.mesh.aabb()
    ghi = grid_origin + voxel_edge * np.asarray(dims)
    if (lo < grid_origin).any() or (hi > ghi).any():
        raise GridTooSmall("grid does not cover the mesh bounding box")
    centers = voxel_centers(grid_origin, voxel_edge, dims)
    inside = bvh.contains(centers).reshape(dims)
    return OccupancyGrid(origin=grid_origin, voxel_edge=float(voxel_edge),
                         occupied=inside)


def procrustes_align(source, target):
    """Rigid (rotation + translation, no scale) least-squares alignment of
    ``source`` onto ``target``.  Returns (rotation (3, 3), translation (3,)).
    """
    src = np.asarray(source, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise DegenerateConfiguration("point lists must both be (N, 3)")
    if src.shape[0] < 3:
        raise DegenerateConfiguration("need at least 3 points")
    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    cov = (tgt - mu_t).T @ (src - mu_s)
    u, s, vt = np.linalg.svd(cov)
    scale = s[0] if s[0] > 0 else 1.0
    if np.sum(s > 1e-12 * scale) < 2:
        raise DegenerateConfiguration("rank-deficient point configuration")
    d = np.sign(np.linalg.det(u @ vt))
    r = u @ np.diag([1.0, 1.0, d]) @ vt
    t = mu_t - r @ mu_s
    return r, t


def apply_rigid(points, rotation, translation) -> np.ndarray:
    return np.asarray(points) @ np.asarray(rotation).T + np.asarray(translation)


# ---------------------------------------------------------------------------
# OBJ I/O (ASCII, triangles only)

def load_obj(path) -> TriMesh:
    """Parse an ASCII OBJ with ``v``/``f`` records.  ``f`` entries may carry
    ``/...`` suffixes, which are ignored.  Non-triangle faces are rejected."""
    vertices = []
    faces = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise InvalidMesh(f"{path}:{lineno}: malformed vertex")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise InvalidMesh(f"{path}:{lineno}: only triangles supported")
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    if not vertices or not faces:
        raise InvalidMesh(f"{path}: no geometry found")
    return TriMesh(np.array(vertices), np.array(faces))


def save_obj(mesh: TriMesh, path) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# ---------------------------------------------------------------------------
# Primitive constructors (shared by tests, demo data and the training corpus)

def make_box(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0),
             subdivisions: int = 1) -> TriMesh:
    """Axis-aligned closed box, each side an n x n quad grid split into
    triangles with outward normals."""
    center = np.asarray(center, dtype=np.float64)
    half = np.asarray(size, dtype=np.float64) / 2.0
    n = int(subdivisions)
    verts: list[np.ndarray] = []
    faces: list[list[int]] = []

    def add_side(axis, sign):
        base = len(verts)
        uaxis, vaxis = [a for a in range(3) if a != axis]
        us = np.linspace(-1.0, 1.0, n + 1)
        for i in range(n + 1):
            for j in range(n + 1):
                p = np.zeros(3)
                p[axis] = sign
                p[uaxis] = us[i]
                p[vaxis] = us[j]
                verts.append(center + half * p)
        for i in range(n):
            for j in range(n):
                a = base + i * (n + 1) + j
                b = a + 1
                c = a + (n + 1)
                d = c + 1
                faces.extend([[a, c, d], [a, d, b]])

    for axis in range(3):
        for sign in (-1.0, 1.0):
            add_side(axis, sign)
    varr = np.array(verts)
    farr = np.array(faces)
    # weld duplicated edge/corner vertices so the box is a closed 2-manifold
    keys = np.round((varr - center) / (half * 2.0 / n), 6)
    _, first, remap = np.unique(keys, axis=0, return_index=True,
                                return_inverse=True)
    mesh = TriMesh(varr[first], remap[farr])
    # orientation bookkeeping above is easy to get subtly wrong per-side;
    # fix winding by checking each face normal against the outward direction
    tri = mesh.triangles()
    centers = tri.mean(axis=1)
    out = centers - center
    flip = np.einsum("ij,ij->i", mesh.face_normals, out) < 0
    f = mesh.faces.copy()
    f[flip] = f[flip][:, ::-1]
    return TriMesh(mesh.vertices, f)


def make_uv_sphere(center=(0.0, 0.0, 0.0), radius=0.5, n_theta=8,
                   n_phi=12) -> TriMesh:
    """Closed UV sphere with outward normals."""
    center = np.asarray(center, dtype=np.float64)
    verts = [center + np.array([0.0, 0.0, radius])]
    for i in range(1, n_theta):
        th = np.pi * i / n_theta
        for j in range(n_phi):
            ph = 2 * np.pi * j / n_phi
            verts.append(center + radius * np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))
    verts.append(center + np.array([0.0, 0.0, -radius]))
    bottom = len(verts) - 1
    faces = []
    for j in range(n_phi):
        faces.append([0, 1 + j, 1 + (j + 1) % n_phi])
    for i in range(n_theta - 2):
        r0 = 1 + i * n_phi
        r1 = r0 + n_phi
        for j in range(n_phi):
            a, b = r0 + j, r0 + (j + 1) % n_phi
            c, d = r1 + j, r1 + (j + 1) % n_phi
            faces.append([a, c, b])
            faces.append([b, c, d])
    r0 = 1 + (n_theta - 2) * n_phi
    for j in range(n_phi):
        faces.append([r0 + j, bottom, r0 + (j + 1) % n_phi])
    return TriMesh(np.array(verts), np.array(faces))
