"""Training loop, loss, and fixture export.

Objective per sequence i with per-point targets (c, d, y):

    sum_j c_j (||yhat_j - y_j||^2 + w_ij (dhat_j - d_j)^2) + BCE(chat, c)

with w_ij = exp(-|d_j|) / sum_{k: c_k=1} exp(-|d_k|) * N_i and
N_i = sum_j c_j, computed per frame: close-contact points dominate the
distance term while the weights keep its total mass at N_i.  The BCE
term is summed over every point; masked points contribute only there.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.nn import functional as F

from .dataset import Corpus
from .errors import TrainingDiverged
from .formats import save_weights, write_toch
from .model import DenoiserNet, TOY_HYPERPARAMETERS, frame_features


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 300
    lr: float = 1e-3
    lr_drops: tuple = ()      # epochs at which lr is multiplied by 0.3
    seed: int = 0
    hyperparameters: dict = field(
        default_factory=lambda: dict(TOY_HYPERPARAMETERS))


def sequence_loss(head: torch.Tensor, c: torch.Tensor, d: torch.Tensor,
                  y: torch.Tensor) -> torch.Tensor:
    """Eq. above for one sequence; head (T, N, 5), targets (T, N[, 3])."""
    logit = head[:, :, 0]
    bce = F.binary_cross_entropy_with_logits(logit, c, reduction="sum")
    e = c * torch.exp(-d.abs())          # zero where c=0
    denom = e.sum(dim=1, keepdim=True)
    n_i = c.sum(dim=1, keepdim=True)
    w = e / torch.where(denom > 0, denom, torch.ones_like(denom)) * n_i
    sq_y = ((head[:, :, 2:5] - y) ** 2).sum(dim=2)
    return (c * sq_y).sum() + (w * (head[:, :, 1] - d) ** 2).sum() + bce


def contact_weights(c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Reference w_ij for one frame (numpy, test oracle)."""
    e = c.astype(np.float64) * np.exp(-np.abs(d))
    s = e.sum()
    if s == 0:
        return np.zeros_like(e)
    return e / s * c.sum()


def _targets(clean):
    return (torch.from_numpy(clean.c.astype(np.float32)),
            torch.from_numpy(clean.d.astype(np.float32)),
            torch.from_numpy(clean.y.astype(np.float32)))


def train(cfg: TrainingConfig, corpus: Corpus,
          verbose: bool = False) -> tuple[DenoiserNet, list]:
    """Adam over per-sequence losses; deterministic in cfg.seed.  Returns
    the trained net and the per-epoch mean loss history."""
    torch.manual_seed(cfg.seed)
    net = DenoiserNet(cfg.hyperparameters)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    order = list(range(len(corpus.pairs)))
    shuffler = random.Random(cfg.seed)
    cached = [(frame_features(p.noisy),
               torch.from_numpy(p.noisy.points.astype(np.float32)),
               torch.from_numpy(p.noisy.normals.astype(np.float32)),
               _targets(p.clean)) for p in corpus.pairs]
    history = []
    for epoch in range(cfg.epochs):
        if epoch in cfg.lr_drops:
            for group in opt.param_groups:
                group["lr"] *= 0.3
        shuffler.shuffle(order)
        total = 0.0
        for k in order:
            x, pts, nrm, (c, d, y) = cached[k]
            opt.zero_grad()
            head = net.decode(net.encode(x), pts, nrm)
            loss = sequence_loss(head, c, d, y)
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, "
                    f"sequence {corpus.pairs[k].tag}")
            loss.backward()
            opt.step()
            total += float(loss.detach())
        history.append(total / len(order))
        if verbose and (epoch % 25 == 0 or epoch == cfg.epochs - 1):
            print(f"epoch {epoch:4d}  loss {history[-1]:.4f}")
    return net, history


def export(net: DenoiserNet, corpus: Corpus, out_dir,
           n_fixtures: int = 5) -> Path:
    """Write the weight container plus parity fixtures: for each fixture,
    the raw noisy input and this net's output, both as field files.  The
    inference side must reproduce the outputs from the container alone."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "weights.json"
    save_weights(net.export_tensors(), net.hyperparameters, manifest)
    net.eval()
    for i, pair in enumerate(corpus.pairs[:n_fixtures]):
        write_toch(pair.noisy, out_dir / f"fixture{i}_input.toch")
        write_toch(net.denoised(pair.noisy),
                   out_dir / f"fixture{i}_expected.toch")
    return manifest
