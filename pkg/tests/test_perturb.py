"""Noise synthesis protocols and their statistical calibration."""

import numpy as np
import pytest

from tochkit.demo import DemoConfig, make_demo_hand, make_demo_sequence
from tochkit.errors import DegenerateConfiguration
from tochkit.handmodel import HandFrame, HandSequence, joints_of, \
    make_synthetic_hand
from tochkit.perturb import NoiseKind, NoiseSpec, perturb_sequence


@pytest.fixture(scope="module")
def demo_seq():
    cfg = DemoConfig(frames=8)
    return make_demo_hand(cfg), make_demo_sequence(cfg=cfg)


def assert_sequences_equal(a, b):
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.pose, fb.pose)
        np.testing.assert_array_equal(fa.trans, fb.trans)
        np.testing.assert_array_equal(fa.shape, fb.shape)


class TestNoiseSpec:
    def test_balanced_requires_both_sigmas(self):
        with pytest.raises(DegenerateConfiguration):
            NoiseSpec(kind=NoiseKind.Balanced, sigma_trans=0.01)
        with pytest.raises(DegenerateConfiguration):
            NoiseSpec(kind=NoiseKind.Balanced, sigma_pose=0.3)
        NoiseSpec(kind=NoiseKind.Balanced, sigma_trans=0.01, sigma_pose=0.3)

    def test_kind_specific_sigma_required(self):
        with pytest.raises(DegenerateConfiguration):
            NoiseSpec(kind=NoiseKind.TranslationDominant)
        with pytest.raises(DegenerateConfiguration):
            NoiseSpec(kind=NoiseKind.PoseDominant)

    def test_negative_sigma_rejected(self):
        with pytest.raises(DegenerateConfiguration):
            NoiseSpec(kind=NoiseKind.TranslationDominant, sigma_trans=-1.0)


class TestPerturbSequence:
    def test_zero_sigma_is_identity(self, demo_seq):
        _, seq = demo_seq
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.Balanced, sigma_trans=0.0, sigma_pose=0.0, seed=5))
        assert_sequences_equal(seq, out)

    def test_same_seed_identical(self, demo_seq):
        _, seq = demo_seq
        spec = NoiseSpec(kind=NoiseKind.Balanced, sigma_trans=0.01,
                         sigma_pose=0.3, seed=77)
        assert_sequences_equal(perturb_sequence(seq, spec),
                               perturb_sequence(seq, spec))

    def test_translation_kind_leaves_pose(self, demo_seq):
        _, seq = demo_seq
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.TranslationDominant, sigma_trans=0.01, seed=1))
        for fa, fb in zip(seq.frames, out.frames):
            np.testing.assert_array_equal(fa.pose, fb.pose)
            np.testing.assert_array_equal(fa.shape, fb.shape)
            assert not np.array_equal(fa.trans, fb.trans)

    def test_pose_kind_leaves_translation(self, demo_seq):
        _, seq = demo_seq
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.PoseDominant, sigma_pose=0.1, seed=1))
        for fa, fb in zip(seq.frames, out.frames):
            np.testing.assert_array_equal(fa.trans, fb.trans)
            np.testing.assert_array_equal(fa.shape, fb.shape)
            assert not np.array_equal(fa.pose, fb.pose)

    def test_noise_is_zero_mean(self):
        base = HandFrame(pose=np.zeros((16, 3)), trans=np.zeros(3),
                         shape=np.zeros(2))
        n = 4000
        seq = HandSequence(frames=(base,) * n)
        sigma = 0.01
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.TranslationDominant, sigma_trans=sigma, seed=3))
        deltas = np.stack([f.trans for f in out.frames])
        assert np.all(np.abs(deltas.mean(axis=0)) < 4 * sigma / np.sqrt(n))

    def test_per_frame_independence(self):
        base = HandFrame(pose=np.zeros((16, 3)), trans=np.zeros(3),
                         shape=np.zeros(2))
        seq = HandSequence(frames=(base,) * 4)
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.TranslationDominant, sigma_trans=0.01, seed=0))
        deltas = [tuple(f.trans) for f in out.frames]
        assert len(set(deltas)) == len(deltas)


class TestCalibration:
    """Mean joint displacement under translation noise is sigma * 2 sqrt(2/pi)."""

    @pytest.mark.parametrize("sigma,expect_mm,tol_mm",
                             [(0.01, 15.96, 0.3), (0.02, 31.92, 0.6)])
    def test_mean_joint_displacement(self, sigma, expect_mm, tol_mm):
        model = make_synthetic_hand()
        base = HandFrame(pose=np.zeros((model.num_joints, 3)),
                         trans=np.zeros(3), shape=np.zeros(2))
        n = 10_000
        seq = HandSequence(frames=(base,) * n)
        out = perturb_sequence(seq, NoiseSpec(
            kind=NoiseKind.TranslationDominant, sigma_trans=sigma, seed=11))
        gt_joints = joints_of(model, base)
        disp = np.empty(n)
        for i, f in enumerate(out.frames):
            disp[i] = np.linalg.norm(joints_of(model, f) - gt_joints,
                                     axis=1).mean()
        assert abs(disp.mean() * 1000.0 - expect_mm) < tol_mm
