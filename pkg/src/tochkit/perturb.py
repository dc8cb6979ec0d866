"""Synthetic tracking noise on hand sequences.

Three protocols: translation-dominant (wrist translation only),
pose-dominant (all axis-angle components), and balanced (both).  Noise is
i.i.d. zero-mean Gaussian per frame and deterministic in the seed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration
from .handmodel import HandFrame, HandSequence


class NoiseKind(enum.Enum):
    TranslationDominant = "translation"
    PoseDominant = "pose"
    Balanced = "balanced"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise protocol: which parameters to perturb and how much.

    ``sigma_trans`` is in meters, ``sigma_pose`` in radians per axis-angle
    component.  The root joint's orientation counts as pose.
    """

    kind: NoiseKind
    sigma_trans: float | None = None
    sigma_pose: float | None = None
    seed: int = 0

    def __post_init__(self):
        need_t = self.kind in (NoiseKind.TranslationDominant, NoiseKind.Balanced)
        need_p = self.kind in (NoiseKind.PoseDominant, NoiseKind.Balanced)
        if need_t and self.sigma_trans is None:
            raise DegenerateConfiguration(f"{self.kind.name} requires sigma_trans")
        if need_p and self.sigma_pose is None:
            raise DegenerateConfiguration(f"{self.kind.name} requires sigma_pose")
        for name in ("sigma_trans", "sigma_pose"):
            v = getattr(self, name)
            if v is not None and (not np.isfinite(v) or v < 0):
                raise DegenerateConfiguration(f"{name} must be >= 0")


def perturb_sequence(seq: HandSequence, spec: NoiseSpec) -> HandSequence:
    """Add per-frame Gaussian noise to translation and/or pose; shape
    coefficients are never touched."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(spec.seed)))
    st = spec.sigma_trans if spec.kind != NoiseKind.PoseDominant else None
    sp = spec.sigma_pose if spec.kind != NoiseKind.TranslationDominant else None
    frames = []
    for f in seq.frames:
        trans = f.trans
        pose = f.pose
        if st is not None:
            trans = trans + st * gen.standard_normal(3)
        if sp is not None:
            pose = pose + sp * gen.standard_normal(pose.shape)
        frames.append(HandFrame(pose=pose, trans=trans, shape=f.shape))
    return HandSequence(frames=tuple(frames), fps=seq.fps)
