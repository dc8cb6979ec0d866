"""Objective correctness, masking, determinism, capacity and divergence."""

import tempfile

import numpy as np
import pytest
import torch

from tochlearn import CorpusConfig, TrainingConfig, TrainingDiverged, \
    build_dataset, contact_weights, sequence_loss, train


def random_case(rng, t=3, n=24):
    head = rng.normal(size=(t, n, 5))
    c = (rng.random((t, n)) < 0.5).astype(np.float64)
    d = rng.normal(scale=0.01, size=(t, n))
    y = rng.normal(scale=0.05, size=(t, n, 3))
    return head, c, d, y


def reference_loss(head, c, d, y):
    """Float64 numpy oracle for sequence_loss."""
    total = 0.0
    for i in range(head.shape[0]):
        w = contact_weights(c[i], d[i])
        total += (c[i] * ((head[i, :, 2:5] - y[i]) ** 2).sum(axis=1)).sum()
        total += (w * (head[i, :, 1] - d[i]) ** 2).sum()
    logit = head[:, :, 0]
    total += (np.logaddexp(0.0, logit) - c * logit).sum()
    return total


def torch_loss(head, c, d, y):
    return float(sequence_loss(
        torch.from_numpy(head.astype(np.float32)),
        torch.from_numpy(c.astype(np.float32)),
        torch.from_numpy(d.astype(np.float32)),
        torch.from_numpy(y.astype(np.float32))))


class TestSequenceLoss:
    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            head, c, d, y = random_case(rng)
            ref = reference_loss(head, c, d, y)
            assert torch_loss(head, c, d, y) == pytest.approx(ref, rel=1e-4)

    def test_weights_sum_to_contact_count(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 60))
            c = (rng.random(n) < 0.5).astype(np.float64)
            d = rng.normal(scale=0.02, size=n)
            w = contact_weights(c, d)
            assert w.sum() == pytest.approx(c.sum(), abs=1e-12)
            assert (w[c == 0] == 0).all()

    def test_masked_targets_do_not_matter(self):
        rng = np.random.default_rng(2)
        head, c, d, y = random_case(rng)
        base = torch_loss(head, c, d, y)
        d2 = np.where(c == 0, d + rng.normal(size=d.shape), d)
        y2 = np.where(c[:, :, None] == 0,
                      y + rng.normal(size=y.shape), y)
        assert torch_loss(head, c, d2, y2) == pytest.approx(base, rel=1e-6)

    def test_frame_without_contacts(self):
        rng = np.random.default_rng(3)
        head, c, d, y = random_case(rng, t=2)
        c[0] = 0.0
        val = torch_loss(head, c, d, y)
        assert np.isfinite(val)
        # frame 0 contributes only BCE
        expect = reference_loss(head, c, d, y)
        assert val == pytest.approx(expect, rel=1e-4)


@pytest.fixture(scope="module")
def single_sequence_corpus():
    cfg = CorpusConfig(n_sequences=1, frames=4, n_points=32, mirror=False)
    return build_dataset(cfg, tempfile.mkdtemp(prefix="tochlearn-one-"))


class TestTraining:
    def test_overfit_single_sequence(self, single_sequence_corpus):
        hp = {"point_widths": [32, 64], "global_feature": 128,
              "gru_hidden": 64, "latent": 128,
              "decoder_widths": [256, 128], "head": 5}
        cfg = TrainingConfig(epochs=2500, lr=3e-3, lr_drops=(2000,),
                             hyperparameters=hp)
        _, hist = train(cfg, single_sequence_corpus)
        assert hist[-1] < 0.01 * hist[0], (hist[0], hist[-1])

    def test_deterministic(self, single_sequence_corpus):
        cfg = TrainingConfig(epochs=3, seed=4)
        _, h1 = train(cfg, single_sequence_corpus)
        _, h2 = train(cfg, single_sequence_corpus)
        assert h1 == h2

    def test_divergence_aborts(self, single_sequence_corpus):
        with pytest.raises(TrainingDiverged, match="epoch"):
            train(TrainingConfig(epochs=10, lr=1e12),
                  single_sequence_corpus)
