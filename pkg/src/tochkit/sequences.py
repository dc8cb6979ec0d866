"""Sequence bundle files: a JSON document tying a hand model, an object
mesh and per-frame parameters together, all expressed in object-local
coordinates."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelMismatch
from .geometry import TriMesh, load_obj
from .handmodel import HandFrame, HandModel, HandSequence, load_hand_model

BUNDLE_FORMAT_VERSION = 1
COORDINATE_FRAME = "object-local"


@dataclass(frozen=True)
class SequenceBundle:
    """A hand motion plus the files it is expressed against."""

    hand_model_path: Path
    object_mesh_path: Path
    sequence: HandSequence

    def load_model(self) -> HandModel:
        return load_hand_model(self.hand_model_path)

    def load_object(self) -> TriMesh:
        return load_obj(self.object_mesh_path)


def save_bundle(bundle: SequenceBundle, path) -> None:
    path = Path(path)
    seq = bundle.sequence

    def rel(p: Path) -> str:
        p = Path(p)
        try:
            return p.relative_to(path.parent).as_posix()
        except ValueError:
            return str(p)

    doc = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "coordinate_frame": COORDINATE_FRAME,
        "hand_model": rel(bundle.hand_model_path),
        "object_mesh": rel(bundle.object_mesh_path),
        "fps": seq.fps,
        "shape": seq.shape.tolist(),
        "frames": [{"pose": f.pose.tolist(), "trans": f.trans.tolist()}
                   for f in seq.frames],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_bundle(path) -> SequenceBundle:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise ModelMismatch(f"{path}: unsupported bundle format")
    if doc.get("coordinate_frame") != COORDINATE_FRAME:
        raise ModelMismatch(f"{path}: expected {COORDINATE_FRAME} coordinates")
    if not doc["frames"]:
        raise ModelMismatch(f"{path}: bundle has no frames")
    shape = np.asarray(doc["shape"], dtype=np.float64)
    frames = tuple(
        HandFrame(pose=np.asarray(f["pose"], dtype=np.float64),
                  trans=np.asarray(f["trans"], dtype=np.float64), shape=shape)
        for f in doc["frames"])
    seq = HandSequence(frames=frames, fps=float(doc["fps"]))

    def resolve(rel_path: str) -> Path:
        p = Path(rel_path)
        return p if p.is_absolute() else path.parent / p

    hm = resolve(doc["hand_model"])
    om = resolve(doc["object_mesh"])
    for p in (hm, om):
        if not p.exists():
            raise ModelMismatch(f"{path}: referenced file missing: {p}")
    return SequenceBundle(hand_model_path=hm, object_mesh_path=om,
                          sequence=seq)
