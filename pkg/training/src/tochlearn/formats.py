"""Readers and writers for the cross-package file contracts: the binary
field file, the weight container, and the sequence bundle JSON.

These are deliberately independent implementations; the byte layouts are
the interface to the inference package, not its code.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

FIELD_MAGIC = b"TOCH"
FIELD_VERSION = 1
WEIGHT_FORMAT_VERSION = 1

_RECORD = np.dtype([("c", "u1"), ("d", "<f4"), ("y", "<f4", (3,))])
_POINT = np.dtype([("p", "<f4", (3,)), ("n", "<f4", (3,))])


@dataclass(frozen=True)
class FieldSequence:
    """Per-frame field arrays over one shared object point set.

    c: (T, N) uint8, d: (T, N) float32, y: (T, N, 3) float32,
    points/normals: (N, 3) float32.
    """

    c: np.ndarray
    d: np.ndarray
    y: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    seed: int

    def __post_init__(self):
        t, n = self.c.shape
        if self.d.shape != (t, n) or self.y.shape != (t, n, 3):
            raise FormatError("field array shapes disagree")
        if self.points.shape != (n, 3) or self.normals.shape != (n, 3):
            raise FormatError("point set shape disagrees with fields")

    @property
    def num_frames(self) -> int:
        return self.c.shape[0]

    @property
    def num_points(self) -> int:
        return self.c.shape[1]

    def same_point_set(self, other: "FieldSequence") -> bool:
        return (self.seed == other.seed
                and np.array_equal(self.points, other.points)
                and np.array_equal(self.normals, other.normals))


def read_toch(path) -> FieldSequence:
    with open(path, "rb") as fh:
        if fh.read(4) != FIELD_MAGIC:
            raise FormatError(f"{path}: bad magic")
        version, t, n, seed = struct.unpack("<IIIQ", fh.read(20))
        if version != FIELD_VERSION:
            raise FormatError(f"{path}: unsupported field version {version}")
        rec = np.frombuffer(fh.read(t * n * _RECORD.itemsize), dtype=_RECORD)
        pts = np.frombuffer(fh.read(n * _POINT.itemsize), dtype=_POINT)
    if rec.shape[0] != t * n or pts.shape[0] != n:
        raise FormatError(f"{path}: truncated field file")
    return FieldSequence(c=rec["c"].reshape(t, n).copy(),
                         d=rec["d"].reshape(t, n).copy(),
                         y=rec["y"].reshape(t, n, 3).copy(),
                         points=pts["p"].copy(), normals=pts["n"].copy(),
                         seed=int(seed))


def write_toch(fields: FieldSequence, path) -> None:
    t, n = fields.c.shape
    rec = np.empty(t * n, dtype=_RECORD)
    rec["c"] = fields.c.reshape(-1)
    rec["d"] = fields.d.reshape(-1).astype(np.float32)
    rec["y"] = fields.y.reshape(t * n, 3).astype(np.float32)
    pts = np.empty(n, dtype=_POINT)
    pts["p"] = fields.points.astype(np.float32)
    pts["n"] = fields.normals.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<IIIQ", FIELD_VERSION, t, n,
                             fields.seed & 0xFFFFFFFFFFFFFFFF))
        fh.write(rec.tobytes())
        fh.write(pts.tobytes())


def mirror_fields(fields: FieldSequence) -> FieldSequence:
    """Left-handed variant: reflect the scene about the x = 0 plane.

    Contact flags and signed distances are reflection-invariant; object
    points, normals and the canonical coordinate (which then lives on the
    mirrored template) flip their x component.
    """
    flip = np.array([-1.0, 1.0, 1.0], dtype=np.float32)
    return FieldSequence(c=fields.c.copy(), d=fields.d.copy(),
                         y=fields.y * flip, points=fields.points * flip,
                         normals=fields.normals * flip, seed=fields.seed)


# ---------------------------------------------------------------------------
# weight container: JSON manifest plus adjacent raw little-endian f32 blob

def save_weights(tensors: dict, hyperparameters: dict, manifest_path) -> None:
    manifest_path = Path(manifest_path)
    blob_name = manifest_path.stem + ".bin"
    entries = []
    chunks = []
    offset = 0
    for name in sorted(tensors):
        t = np.ascontiguousarray(tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(t.shape),
                        "offset": offset})
        chunks.append(t.tobytes())
        offset += t.nbytes
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "hyperparameters": hyperparameters,
        "blob": blob_name,
        "blob_bytes": offset,
        "tensors": entries,
    }
    with open(manifest_path, "w") as fh:
        json.dump(doc, fh, indent=1)
    (manifest_path.parent / blob_name).write_bytes(b"".join(chunks))


def load_weights(manifest_path) -> tuple[dict, dict]:
    """Returns (tensors, hyperparameters)."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise FormatError(f"{manifest_path}: unsupported weight format")
    blob = (manifest_path.parent / doc["blob"]).read_bytes()
    if len(blob) != doc["blob_bytes"]:
        raise FormatError(f"{manifest_path}: blob length mismatch")
    tensors = {}
    for e in doc["tensors"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f4", count=count,
                            offset=e["offset"])
        tensors[e["name"]] = arr.reshape(shape).astype(np.float32)
    return tensors, doc["hyperparameters"]


# ---------------------------------------------------------------------------
# sequence bundle JSON (the CLI's sequence file)

def load_bundle_doc(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != 1:
        raise FormatError(f"{path}: unsupported bundle format")
    return doc


def save_bundle_doc(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def wrist_positions(doc: dict) -> np.ndarray:
    """(T, 3) wrist (root translation) per frame, object-local meters."""
    return np.array([f["trans"] for f in doc["frames"]], dtype=np.float64)
