"""File-format contract: the training-side readers/writers interoperate
byte-for-byte with the inference package."""

import numpy as np
import pytest

from tochlearn import FieldSequence, FormatError, load_weights, \
    mirror_fields, read_toch, save_weights, write_toch

import tochkit.denoiser as tkd
import tochkit.tochfield as tkf


def random_fields(rng, t=3, n=17, seed=9):
    return FieldSequence(
        c=(rng.random((t, n)) < 0.4).astype(np.uint8),
        d=rng.normal(scale=0.01, size=(t, n)).astype(np.float32),
        y=rng.normal(scale=0.05, size=(t, n, 3)).astype(np.float32),
        points=rng.normal(size=(n, 3)).astype(np.float32),
        normals=rng.normal(size=(n, 3)).astype(np.float32),
        seed=seed)


class TestFieldFile:
    def test_round_trip(self, tmp_path):
        f = random_fields(np.random.default_rng(0))
        write_toch(f, tmp_path / "a.toch")
        back = read_toch(tmp_path / "a.toch")
        for name in ("c", "d", "y", "points", "normals"):
            np.testing.assert_array_equal(getattr(f, name),
                                          getattr(back, name))
        assert back.seed == f.seed

    def test_inference_side_reads_our_files(self, tmp_path):
        f = random_fields(np.random.default_rng(1))
        write_toch(f, tmp_path / "a.toch")
        seq = tkf.read_toch(tmp_path / "a.toch")
        assert len(seq) == f.num_frames
        for i, frame in enumerate(seq.frames):
            np.testing.assert_array_equal(frame.c, f.c[i])
            np.testing.assert_allclose(frame.d, f.d[i], atol=0)
        np.testing.assert_allclose(seq.point_set.points, f.points, atol=0)

    def test_we_read_inference_side_files(self, small_corpus):
        corpus, _, _ = small_corpus
        # corpus .toch files were produced by the inference CLI
        pair = corpus.pairs[0]
        f = read_toch(pair.clean_toch)
        seq = tkf.read_toch(pair.clean_toch)
        assert f.num_frames == len(seq)
        np.testing.assert_array_equal(
            f.c, np.stack([fr.c for fr in seq.frames]))

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad.toch").write_bytes(b"NOPE" + b"\0" * 20)
        with pytest.raises(FormatError):
            read_toch(tmp_path / "bad.toch")

    def test_shape_validation(self):
        rng = np.random.default_rng(2)
        f = random_fields(rng)
        with pytest.raises(FormatError):
            FieldSequence(c=f.c, d=f.d[:, :-1], y=f.y, points=f.points,
                          normals=f.normals, seed=0)


class TestMirror:
    def test_involution_and_invariants(self):
        f = random_fields(np.random.default_rng(3))
        m = mirror_fields(f)
        np.testing.assert_array_equal(m.c, f.c)
        np.testing.assert_array_equal(m.d, f.d)
        np.testing.assert_array_equal(m.points[:, 0], -f.points[:, 0])
        np.testing.assert_array_equal(m.points[:, 1:], f.points[:, 1:])
        np.testing.assert_array_equal(m.normals[:, 0], -f.normals[:, 0])
        np.testing.assert_array_equal(m.y[:, :, 0], -f.y[:, :, 0])
        mm = mirror_fields(m)
        for name in ("c", "d", "y", "points", "normals"):
            np.testing.assert_array_equal(getattr(mm, name),
                                          getattr(f, name))


class TestWeightContainer:
    def _tensors(self):
        rng = np.random.default_rng(4)
        hp = {"point_widths": [2, 2], "global_feature": 4, "gru_hidden": 2,
              "latent": 4, "decoder_widths": [3], "head": 5}
        shapes = tkd._expected_shapes(hp)
        tensors = {k: rng.normal(size=s).astype(np.float32)
                   for k, s in shapes.items()}
        return tensors, hp

    def test_round_trip(self, tmp_path):
        tensors, hp = self._tensors()
        save_weights(tensors, hp, tmp_path / "w.json")
        back, hp2 = load_weights(tmp_path / "w.json")
        assert hp2 == hp
        for k, t in tensors.items():
            np.testing.assert_array_equal(back[k], t)

    def test_inference_side_accepts_container(self, tmp_path):
        tensors, hp = self._tensors()
        save_weights(tensors, hp, tmp_path / "w.json")
        container = tkd.load_weights(tmp_path / "w.json")
        assert container.hyperparameters == hp
        for k, t in tensors.items():
            np.testing.assert_array_equal(container.tensors[k], t)
