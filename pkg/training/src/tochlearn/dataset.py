"""Synthetic training corpus: paired (noisy, clean) field sequences.

Sequences are produced through the inference package's command line
(`make-demo`, `perturb`, `extract`), so the corpus exercises exactly the
file contracts a real tracker would.  Each variant jitters the base grasp
a little (different grasp), then adds balanced tracking noise (the
training input).  Frames whose wrist strays more than 15 cm from the
object are dropped, and each pair is optionally mirrored into a
left-handed variant.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorpusError
from .formats import FieldSequence, load_bundle_doc, mirror_fields, \
    read_toch, save_bundle_doc, write_toch, wrist_positions

WRIST_LIMIT = 0.15  # meters


@dataclass(frozen=True)
class CorpusConfig:
    n_sequences: int = 6
    frames: int = 8
    n_points: int = 256
    point_seed: int = 3
    jitter: tuple = (0.002, 0.05)     # grasp diversification (trans, pose)
    noise: tuple = (0.01, 0.3)        # tracking noise, balanced protocol
    seed: int = 0
    wrist_limit: float = WRIST_LIMIT
    mirror: bool = True
    threads: int = 2


@dataclass(frozen=True)
class SequencePair:
    tag: str
    noisy: FieldSequence
    clean: FieldSequence
    noisy_toch: Path | None = None
    clean_toch: Path | None = None
    noisy_bundle: Path | None = None
    clean_bundle: Path | None = None


@dataclass(frozen=True)
class Corpus:
    pairs: tuple
    hand_model: Path
    object_mesh: Path
    workdir: Path

    def __len__(self) -> int:
        return len(self.pairs)


def _cli(*args) -> None:
    cmd = [sys.executable, "-m", "tochkit.cli"] + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CorpusError(f"pipeline command failed: {' '.join(cmd)}\n"
                          f"{proc.stderr.strip()}")


def filter_far_frames(doc: dict, limit: float) -> tuple[dict, list]:
    """Drop frames whose wrist is farther than `limit` from the object
    center; returns (filtered doc, kept frame indices)."""
    dist = np.linalg.norm(wrist_positions(doc), axis=1)
    keep = [i for i, r in enumerate(dist) if r <= limit]
    out = dict(doc)
    out["frames"] = [doc["frames"][i] for i in keep]
    return out, keep


def build_dataset(cfg: CorpusConfig, workdir) -> Corpus:
    if cfg.n_sequences < 1:
        raise CorpusError("n_sequences must be >= 1")
    workdir = Path(workdir)
    base = workdir / "base"
    _cli("make-demo", "--out-dir", base, "--frames", cfg.frames)

    pairs = []
    for i in range(cfg.n_sequences):
        tag = f"seq{i:03d}"
        d = workdir / tag
        d.mkdir(parents=True, exist_ok=True)
        clean_bundle = d / "clean.json"
        _cli("perturb", "--bundle", base / "gt.json", "--kind", "balanced",
             "--sigma-trans", cfg.jitter[0], "--sigma-pose", cfg.jitter[1],
             "--seed", 1000 * (cfg.seed + 1) + i, "--out", clean_bundle)

        doc, keep = filter_far_frames(load_bundle_doc(clean_bundle),
                                      cfg.wrist_limit)
        if not keep:
            continue
        if len(keep) != cfg.frames:
            save_bundle_doc(doc, clean_bundle)

        noisy_bundle = d / "noisy.json"
        _cli("perturb", "--bundle", clean_bundle, "--kind", "balanced",
             "--sigma-trans", cfg.noise[0], "--sigma-pose", cfg.noise[1],
             "--seed", 7000 * (cfg.seed + 1) + i, "--out", noisy_bundle)

        clean_toch = d / "clean.toch"
        noisy_toch = d / "noisy.toch"
        for bundle, out in ((clean_bundle, clean_toch),
                            (noisy_bundle, noisy_toch)):
            _cli("extract", "--bundle", bundle, "--n-points", cfg.n_points,
                 "--seed", cfg.point_seed, "--threads", cfg.threads,
                 "--out", out)
        clean = read_toch(clean_toch)
        noisy = read_toch(noisy_toch)
        if not clean.same_point_set(noisy):
            raise CorpusError(f"{tag}: pair does not share a point set")
        pairs.append(SequencePair(tag=tag, noisy=noisy, clean=clean,
                                  noisy_toch=noisy_toch,
                                  clean_toch=clean_toch,
                                  noisy_bundle=noisy_bundle,
                                  clean_bundle=clean_bundle))
        if cfg.mirror:
            m_clean = mirror_fields(clean)
            m_noisy = mirror_fields(noisy)
            mc = d / "clean_mirror.toch"
            mn = d / "noisy_mirror.toch"
            write_toch(m_clean, mc)
            write_toch(m_noisy, mn)
            pairs.append(SequencePair(tag=tag + "-mirror", noisy=m_noisy,
                                      clean=m_clean, noisy_toch=mn,
                                      clean_toch=mc))

    if not pairs:
        raise CorpusError("corpus is empty after filtering")
    return Corpus(pairs=tuple(pairs), hand_model=base / "hand_model.json",
                  object_mesh=base / "object.obj", workdir=workdir)
