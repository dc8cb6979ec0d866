"""Temporal denoising auto-encoder inference from exported weights, a
training-free baseline smoother, and latent-swap grasp transfer.

The computation graph is determined entirely by the hyperparameters in the
weight manifest: per frame, point features (c, d, y, o, n) pass through
PointNet blocks (shared per-point affine + rectifier, max-pool, global
concat); the pooled frame feature runs through a bidirectional GRU; the
decoder maps (z, o, n) per point back to (c, d, y).  All arithmetic is
float32 so independent implementations can match bit-for-bit closely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import WeightMismatch
from .geometry import ObjectPointSet
from .tochfield import TochFrame, TochSequence

WEIGHT_FORMAT_VERSION = 1
POINT_FEATURE_DIM = 11  # c, d, y(3), o(3), n(3)

DEFAULT_HYPERPARAMETERS = {
    "point_widths": [64, 128],
    "global_feature": 256,
    "gru_hidden": 128,
    "latent": 256,
    "decoder_widths": [256, 128, 64],
    "head": 5,
}


@dataclass(frozen=True)
class WeightContainer:
    """Named float32 tensors plus the architecture hyperparameters."""

    tensors: dict
    hyperparameters: dict

    def __post_init__(self):
        hp = self.hyperparameters
        if 2 * hp["point_widths"][-1] != hp["global_feature"]:
            raise WeightMismatch("global feature must be twice the last block width")
        if 2 * hp["gru_hidden"] != hp["latent"]:
            raise WeightMismatch("latent size must be twice the GRU hidden size")
        for name, shape in _expected_shapes(hp).items():
            t = self.tensors.get(name)
            if t is None:
                raise WeightMismatch(f"missing tensor {name}")
            if t.shape != shape:
                raise WeightMismatch(
                    f"tensor {name}: expected shape {shape}, got {t.shape}")
            if t.dtype != np.float32:
                raise WeightMismatch(f"tensor {name} must be float32")

    @property
    def latent_dim(self) -> int:
        return self.hyperparameters["latent"]


@dataclass(frozen=True)
class LatentSequence:
    """Per-frame latent vectors z_i, shape (T, Z)."""

    z: np.ndarray

    def __post_init__(self):
        if self.z.ndim != 2 or not np.isfinite(self.z).all():
            raise WeightMismatch("latents must be a finite (T, Z) array")

    def __len__(self) -> int:
        return self.z.shape[0]


def _expected_shapes(hp) -> dict:
    shapes = {}
    d = POINT_FEATURE_DIM
    for i, w in enumerate(hp["point_widths"]):
        shapes[f"enc.block{i}.weight"] = (w, d)
        shapes[f"enc.block{i}.bias"] = (w,)
        d = 2 * w
    h = hp["gru_hidden"]
    for direction in ("f", "b"):
        shapes[f"gru.w_ih_{direction}"] = (3 * h, hp["global_feature"])
        shapes[f"gru.w_hh_{direction}"] = (3 * h, h)
        shapes[f"gru.b_ih_{direction}"] = (3 * h,)
        shapes[f"gru.b_hh_{direction}"] = (3 * h,)
    d = hp["latent"] + 6  # z, o, n
    for i, w in enumerate(hp["decoder_widths"]):
        shapes[f"dec.layer{i}.weight"] = (w, d)
        shapes[f"dec.layer{i}.bias"] = (w,)
        d = w
    shapes["dec.head.weight"] = (hp["head"], d)
    shapes["dec.head.bias"] = (hp["head"],)
    return shapes


def random_weights(seed: int = 0, hyperparameters: dict | None = None,
                   scale: float = 0.1) -> WeightContainer:
    """Randomly initialized container (untrained; structural tests and
    baseline-free smoke runs)."""
    hp = dict(hyperparameters or DEFAULT_HYPERPARAMETERS)
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    tensors = {}
    for name, shape in _expected_shapes(hp).items():
        fan_in = shape[-1] if len(shape) > 1 else 1
        tensors[name] = (scale * gen.standard_normal(shape)
                         / np.sqrt(fan_in)).astype(np.float32)
    return WeightContainer(tensors=tensors, hyperparameters=hp)


# ---------------------------------------------------------------------------
# container file I/O: JSON manifest + adjacent raw little-endian f32 blob

def save_weights(weights: WeightContainer, manifest_path) -> None:
    manifest_path = Path(manifest_path)
    blob_name = manifest_path.stem + ".bin"
    entries = []
    chunks = []
    offset = 0
    for name in sorted(weights.tensors):
        t = np.ascontiguousarray(weights.tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(t.shape), "offset": offset})
        chunks.append(t.tobytes())
        offset += t.nbytes
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "hyperparameters": weights.hyperparameters,
        "blob": blob_name,
        "blob_bytes": offset,
        "tensors": entries,
    }
    with open(manifest_path, "w") as fh:
        json.dump(doc, fh, indent=1)
    (manifest_path.parent / blob_name).write_bytes(b"".join(chunks))


def load_weights(manifest_path) -> WeightContainer:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise WeightMismatch(f"{manifest_path}: unsupported weight format")
    blob = (manifest_path.parent / doc["blob"]).read_bytes()
    if len(blob) != doc["blob_bytes"]:
        raise WeightMismatch(f"{manifest_path}: blob length mismatch")
    tensors = {}
    for e in doc["tensors"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=e["offset"])
        tensors[e["name"]] = arr.reshape(shape).astype(np.float32)
    return WeightContainer(tensors=tensors,
                           hyperparameters=doc["hyperparameters"])


# ---------------------------------------------------------------------------
# forward pass

def _relu(x):
    return np.maximum(x, np.float32(0.0))


def _sigmoid(x):
    with np.errstate(over="ignore"):  # exp overflow saturates correctly
        return np.float32(1.0) / (np.float32(1.0) + np.exp(-x))


def _frame_features(seq: TochSequence) -> np.ndarray:
    """(T, N, 11) float32 input tensor."""
    ps = seq.point_set
    o = ps.points.astype(np.float32)
    nrm = ps.normals.astype(np.float32)
    rows = []
    for f in seq.frames:
        rows.append(np.concatenate([
            f.c.astype(np.float32)[:, None],
            f.d.astype(np.float32)[:, None],
            f.y.astype(np.float32), o, nrm], axis=1))
    return np.stack(rows)


def _pointnet(weights: WeightContainer, x: np.ndarray) -> np.ndarray:
    """(T, N, 11) -> (T, N, global_feature) per-point features."""
    hp = weights.hyperparameters
    for i in range(len(hp["point_widths"])):
        w = weights.tensors[f"enc.block{i}.weight"]
        b = weights.tensors[f"enc.block{i}.bias"]
        x = _relu(x @ w.T + b)
        g = x.max(axis=1, keepdims=True)
        x = np.concatenate([x, np.broadcast_to(g, x.shape)], axis=2)
    return x


def _gru_direction(weights: WeightContainer, xs: np.ndarray,
                   direction: str) -> np.ndarray:
    """Unidirectional GRU over (T, D) frame features -> (T, H) states."""
    h_dim = weights.hyperparameters["gru_hidden"]
    w_ih = weights.tensors[f"gru.w_ih_{direction}"]
    w_hh = weights.tensors[f"gru.w_hh_{direction}"]
    b_ih = weights.tensors[f"gru.b_ih_{direction}"]
    b_hh = weights.tensors[f"gru.b_hh_{direction}"]
    h = np.zeros(h_dim, dtype=np.float32)
    order = range(xs.shape[0]) if direction == "f" \
        else range(xs.shape[0] - 1, -1, -1)
    out = np.empty((xs.shape[0], h_dim), dtype=np.float32)
    for t in order:
        gi = xs[t] @ w_ih.T + b_ih
        gh = h @ w_hh.T + b_hh
        r = _sigmoid(gi[:h_dim] + gh[:h_dim])
        z = _sigmoid(gi[h_dim:2 * h_dim] + gh[h_dim:2 * h_dim])
        n = np.tanh(gi[2 * h_dim:] + r * gh[2 * h_dim:])
        h = (np.float32(1.0) - z) * n + z * h
        out[t] = h
    return out


def encode(weights: WeightContainer, seq: TochSequence) -> LatentSequence:
    """Per-frame latent codes; exactly invariant to point permutation and
    duplication by max-pool symmetry."""
    x = _frame_features(seq)
    per_point = _pointnet(weights, x)
    frame_feat = per_point.max(axis=1)  # (T, global_feature)
    fwd = _gru_direction(weights, frame_feat, "f")
    bwd = _gru_direction(weights, frame_feat, "b")
    return LatentSequence(z=np.concatenate([fwd, bwd], axis=1))


def decode(weights: WeightContainer, latents: LatentSequence,
           points: ObjectPointSet) -> TochSequence:
    """Per-point field prediction from latents; the reconstructed y is
    free-form (consumers project onto the template surface)."""
    if latents.z.shape[1] != weights.latent_dim:
        raise WeightMismatch(
            f"latent dim {latents.z.shape[1]} != weights {weights.latent_dim}")
    hp = weights.hyperparameters
    o = points.points.astype(np.float32)
    nrm = points.normals.astype(np.float32)
    frames = []
    for z in latents.z:
        x = np.concatenate(
            [np.broadcast_to(z.astype(np.float32), (points.n, z.shape[0])),
             o, nrm], axis=1)
        for i in range(len(hp["decoder_widths"])):
            w = weights.tensors[f"dec.layer{i}.weight"]
            b = weights.tensors[f"dec.layer{i}.bias"]
            x = _relu(x @ w.T + b)
        head = x @ weights.tensors["dec.head.weight"].T \
            + weights.tensors["dec.head.bias"]
        c = (_sigmoid(head[:, 0]) > np.float32(0.5)).astype(np.uint8)
        frames.append(TochFrame(c=c, d=head[:, 1].astype(np.float64),
                                y=head[:, 2:5].astype(np.float64),
                                point_set=points))
    return TochSequence(frames=tuple(frames), point_set=points)


def denoise(weights: WeightContainer, seq: TochSequence) -> TochSequence:
    """Project a field sequence onto the learned interaction manifold."""
    return decode(weights, encode(weights, seq), seq.point_set)


def transfer(weights: WeightContainer, source_seq: TochSequence,
             target_points: ObjectPointSet) -> TochSequence:
    """Re-decode the source interaction's latents on another object's
    points; fitting the result retargets the grasp."""
    return decode(weights, encode(weights, source_seq), target_points)


# ---------------------------------------------------------------------------
# training-free baseline

def baseline_smooth(seq: TochSequence, window: int) -> TochSequence:
    """Temporal smoothing without a model: per point, majority-vote c over a
    centered window (truncated at the ends) and a masked moving average of d
    and y over the window's c=1 frames."""
    if window < 1 or window % 2 == 0:
        raise WeightMismatch("window must be odd and >= 1")
    if window == 1:
        return seq
    t = len(seq)
    half = window // 2
    c_all = np.stack([f.c for f in seq.frames]).astype(np.float64)
    d_all = np.stack([f.d for f in seq.frames])
    y_all = np.stack([f.y for f in seq.frames])
    frames = []
    for i in range(t):
        lo, hi = max(0, i - half), min(t, i + half + 1)
        cw = c_all[lo:hi]
        count = cw.sum(axis=0)
        c = (2 * count > (hi - lo)).astype(np.uint8)
        with np.errstate(invalid="ignore"):
            d = np.where(c == 1,
                         (cw * d_all[lo:hi]).sum(axis=0)
                         / np.where(count > 0, count, 1.0), 0.0)
            y = np.where(c[:, None] == 1,
                         (cw[:, :, None] * y_all[lo:hi]).sum(axis=0)
                         / np.where(count[:, None] > 0, count[:, None], 1.0),
                         0.0)
        frames.append(TochFrame(c=c, d=d, y=y, point_set=seq.point_set))
    return TochSequence(frames=tuple(frames), point_set=seq.point_set)
