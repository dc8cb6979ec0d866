"""Corpus construction: pairing, filtering, mirroring, determinism."""

import numpy as np
import pytest

from tochlearn import CorpusConfig, CorpusError, build_dataset, \
    filter_far_frames
from tochlearn.formats import load_bundle_doc


class TestPairs:
    def test_every_pair_shares_point_set(self, small_corpus):
        corpus, _, _ = small_corpus
        for p in corpus.pairs:
            assert p.clean.same_point_set(p.noisy), p.tag

    def test_mirrored_variants_present(self, small_corpus):
        corpus, _, _ = small_corpus
        tags = [p.tag for p in corpus.pairs]
        assert "seq000" in tags and "seq000-mirror" in tags
        base = next(p for p in corpus.pairs if p.tag == "seq000")
        mirr = next(p for p in corpus.pairs if p.tag == "seq000-mirror")
        np.testing.assert_array_equal(mirr.clean.points[:, 0],
                                      -base.clean.points[:, 0])
        np.testing.assert_array_equal(mirr.clean.c, base.clean.c)

    def test_referenced_fixture_files_exist(self, small_corpus):
        corpus, _, _ = small_corpus
        assert corpus.hand_model.exists()
        assert corpus.object_mesh.exists()
        for p in corpus.pairs:
            assert p.clean_toch.exists() and p.noisy_toch.exists()


class TestDeterminism:
    def test_regeneration_is_identical(self, small_corpus, tmp_path):
        corpus, cfg, _ = small_corpus
        again = build_dataset(cfg, tmp_path)
        assert len(again) == len(corpus)
        for a, b in zip(corpus.pairs, again.pairs):
            assert a.tag == b.tag
            if a.clean_toch and b.clean_toch:
                assert a.clean_toch.read_bytes() == b.clean_toch.read_bytes()
                assert a.noisy_toch.read_bytes() == b.noisy_toch.read_bytes()


class TestWristFilter:
    def test_far_frame_removed_exactly(self, small_corpus):
        corpus, _, _ = small_corpus
        doc = load_bundle_doc(corpus.pairs[0].clean_bundle)
        t = len(doc["frames"])
        far = dict(doc["frames"][1])
        far["trans"] = [0.0, -0.5, 0.0]
        doc["frames"] = doc["frames"][:2] + [far] + doc["frames"][2:]
        out, keep = filter_far_frames(doc, 0.15)
        assert len(out["frames"]) == t
        assert keep == [0, 1] + list(range(3, t + 1))

    def test_all_frames_near_in_demo(self, small_corpus):
        corpus, _, _ = small_corpus
        doc = load_bundle_doc(corpus.pairs[0].clean_bundle)
        _, keep = filter_far_frames(doc, 0.15)
        assert keep == list(range(len(doc["frames"])))


class TestDegenerateConfigs:
    def test_zero_sequences(self, tmp_path):
        with pytest.raises(CorpusError):
            build_dataset(CorpusConfig(n_sequences=0), tmp_path)

    def test_everything_filtered(self, tmp_path):
        cfg = CorpusConfig(n_sequences=1, frames=4, n_points=64,
                           wrist_limit=1e-6)
        with pytest.raises(CorpusError, match="empty"):
            build_dataset(cfg, tmp_path)
