"""Synthetic demo scene: a capsule hand curling around a cube, expressed in
object-local coordinates.  Deterministic; used by the test suite, the
`make-demo` CLI command and the training corpus generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TriMesh, make_box
from .handmodel import (
    HandFrame,
    HandModel,
    HandSequence,
    SyntheticHandConfig,
    make_synthetic_hand,
)

# hook grasp: the palm ends short of the cube, fingers run under the bottom
# face and the distal segments rise against the far face
HAND_OFFSET = np.array([0.0, -0.104, -0.0435])
OBJECT_EDGE = 0.05


@dataclass(frozen=True)
class DemoConfig:
    frames: int = 30
    fps: float = 30.0
    object_edge: float = OBJECT_EDGE
    base_curl: tuple[float, float, float] = (0.12, 0.28, 1.24)
    curl_amplitude: float = 0.03
    sway_amplitude: float = 0.0015
    hand: SyntheticHandConfig = SyntheticHandConfig(palm_radius=0.018)


def make_demo_object(cfg: DemoConfig | None = None) -> TriMesh:
    cfg = cfg or DemoConfig()
    return make_box(size=(cfg.object_edge,) * 3, subdivisions=3)


def make_demo_hand(cfg: DemoConfig | None = None) -> HandModel:
    cfg = cfg or DemoConfig()
    return make_synthetic_hand(cfg.hand)


def grasp_frame(model: HandModel, phase: float, cfg: DemoConfig) -> HandFrame:
    """One frame of the curling grasp at a given phase in [0, 1)."""
    curl = 0.5 * (1.0 - np.cos(2.0 * np.pi * phase))  # smooth 0..1..0
    pose = np.zeros((model.num_joints, 3))
    segments = cfg.hand.segments
    jid = 1
    for _f in range(cfg.hand.fingers):
        for s in range(segments):
            pose[jid, 0] = cfg.base_curl[min(s, len(cfg.base_curl) - 1)] \
                + cfg.curl_amplitude * curl
            jid += 1
    # small global sway so the root pose is exercised too
    pose[0, 2] = 0.06 * np.sin(2.0 * np.pi * phase)
    trans = HAND_OFFSET + cfg.sway_amplitude * np.array(
        [np.sin(2.0 * np.pi * phase), 0.0, 1.0 - np.cos(2.0 * np.pi * phase)])
    return HandFrame(pose=pose, trans=trans,
                     shape=np.zeros(model.num_shape_coeffs))


def make_demo_sequence(model: HandModel | None = None,
                       cfg: DemoConfig | None = None) -> HandSequence:
    cfg = cfg or DemoConfig()
    model = model or make_demo_hand(cfg)
    frames = tuple(grasp_frame(model, i / cfg.frames, cfg)
                   for i in range(cfg.frames))
    return HandSequence(frames=frames, fps=cfg.fps)
