"""Torch implementation of the temporal field auto-encoder.

The graph mirrors the inference package's manifest-driven forward pass:
per-point features (c, d, y, o, n) run through shared-linear + ReLU
PointNet blocks with max-pool/concat (width doubles per block), the
pooled frame feature through a bidirectional GRU, and the decoder maps
(z, o, n) per point to the 5-channel head (c logit, d, y).  Exported
tensor names follow the weight container convention.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .formats import FieldSequence

POINT_FEATURE_DIM = 11

TOY_HYPERPARAMETERS = {
    "point_widths": [32, 64],
    "global_feature": 128,
    "gru_hidden": 64,
    "latent": 128,
    "decoder_widths": [128, 64],
    "head": 5,
}


def frame_features(fields: FieldSequence) -> torch.Tensor:
    """(T, N, 11) float32 input tensor."""
    t, n = fields.c.shape
    x = np.concatenate([
        fields.c.astype(np.float32)[:, :, None],
        fields.d.astype(np.float32)[:, :, None],
        fields.y.astype(np.float32),
        np.broadcast_to(fields.points.astype(np.float32), (t, n, 3)),
        np.broadcast_to(fields.normals.astype(np.float32), (t, n, 3)),
    ], axis=2)
    return torch.from_numpy(np.ascontiguousarray(x))


class DenoiserNet(nn.Module):
    def __init__(self, hyperparameters: dict | None = None):
        super().__init__()
        hp = dict(hyperparameters or TOY_HYPERPARAMETERS)
        assert 2 * hp["point_widths"][-1] == hp["global_feature"]
        assert 2 * hp["gru_hidden"] == hp["latent"]
        self.hyperparameters = hp
        d = POINT_FEATURE_DIM
        blocks = []
        for w in hp["point_widths"]:
            blocks.append(nn.Linear(d, w))
            d = 2 * w
        self.blocks = nn.ModuleList(blocks)
        self.gru = nn.GRU(input_size=hp["global_feature"],
                          hidden_size=hp["gru_hidden"], bidirectional=True)
        d = hp["latent"] + 6
        layers = []
        for w in hp["decoder_widths"]:
            layers.append(nn.Linear(d, w))
            d = w
        self.layers = nn.ModuleList(layers)
        self.head = nn.Linear(d, hp["head"])

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """(T, N, 11) -> (T, latent) frame codes."""
        for lin in self.blocks:
            x = torch.relu(lin(x))
            g = x.max(dim=1, keepdim=True).values
            x = torch.cat([x, g.expand_as(x)], dim=2)
        feat = x.max(dim=1).values
        out, _ = self.gru(feat.unsqueeze(1))
        return out.squeeze(1)

    def decode(self, z: torch.Tensor, points: torch.Tensor,
               normals: torch.Tensor) -> torch.Tensor:
        """(T, Z) codes + (N, 3) geometry -> (T, N, 5) head outputs."""
        t, n = z.shape[0], points.shape[0]
        x = torch.cat([z[:, None, :].expand(t, n, z.shape[1]),
                       points[None].expand(t, n, 3),
                       normals[None].expand(t, n, 3)], dim=2)
        for lin in self.layers:
            x = torch.relu(lin(x))
        return self.head(x)

    def forward(self, fields: FieldSequence) -> torch.Tensor:
        x = frame_features(fields)
        pts = torch.from_numpy(fields.points.astype(np.float32))
        nrm = torch.from_numpy(fields.normals.astype(np.float32))
        return self.decode(self.encode(x), pts, nrm)

    @torch.no_grad()
    def denoised(self, fields: FieldSequence) -> FieldSequence:
        """Forward pass packaged as a field sequence (what the inference
        side reconstructs from the same weights)."""
        head = self.forward(fields).numpy()
        c = (head[:, :, 0] > 0.0).astype(np.uint8)  # sigmoid(x) > 0.5
        return FieldSequence(c=c, d=head[:, :, 1].astype(np.float32),
                             y=head[:, :, 2:5].astype(np.float32),
                             points=fields.points, normals=fields.normals,
                             seed=fields.seed)

    def export_tensors(self) -> dict:
        """Weight container tensors, float32, named per the manifest
        convention."""
        out = {}
        for i, lin in enumerate(self.blocks):
            out[f"enc.block{i}.weight"] = _np(lin.weight)
            out[f"enc.block{i}.bias"] = _np(lin.bias)
        for suffix, torch_sfx in (("f", ""), ("b", "_reverse")):
            out[f"gru.w_ih_{suffix}"] = _np(
                getattr(self.gru, f"weight_ih_l0{torch_sfx}"))
            out[f"gru.w_hh_{suffix}"] = _np(
                getattr(self.gru, f"weight_hh_l0{torch_sfx}"))
            out[f"gru.b_ih_{suffix}"] = _np(
                getattr(self.gru, f"bias_ih_l0{torch_sfx}"))
            out[f"gru.b_hh_{suffix}"] = _np(
                getattr(self.gru, f"bias_hh_l0{torch_sfx}"))
        for i, lin in enumerate(self.layers):
            out[f"dec.layer{i}.weight"] = _np(lin.weight)
            out[f"dec.layer{i}.bias"] = _np(lin.bias)
        out["dec.head.weight"] = _np(self.head.weight)
        out["dec.head.bias"] = _np(self.head.bias)
        return out


def _np(param: torch.Tensor) -> np.ndarray:
    return param.detach().cpu().numpy().astype(np.float32)
