"""Sequence bundle JSON round-trips and validation."""

import json

import numpy as np
import pytest

from tochkit.demo import DemoConfig, make_demo_hand, make_demo_object, \
    make_demo_sequence
from tochkit.errors import ModelMismatch
from tochkit.geometry import save_obj
from tochkit.handmodel import save_hand_model
from tochkit.sequences import SequenceBundle, load_bundle, save_bundle


@pytest.fixture()
def demo_bundle(tmp_path):
    cfg = DemoConfig(frames=4)
    model = make_demo_hand(cfg)
    save_hand_model(model, tmp_path / "hand.json")
    save_obj(make_demo_object(cfg), tmp_path / "object.obj")
    seq = make_demo_sequence(model, cfg)
    return SequenceBundle(hand_model_path=tmp_path / "hand.json",
                          object_mesh_path=tmp_path / "object.obj",
                          sequence=seq)


class TestRoundTrip:
    def test_exact(self, demo_bundle, tmp_path):
        save_bundle(demo_bundle, tmp_path / "seq.json")
        back = load_bundle(tmp_path / "seq.json")
        a, b = demo_bundle.sequence, back.sequence
        assert b.fps == a.fps
        assert len(b) == len(a)
        for fa, fb in zip(a.frames, b.frames):
            # JSON float repr round-trips float64 exactly
            np.testing.assert_array_equal(fa.pose, fb.pose)
            np.testing.assert_array_equal(fa.trans, fb.trans)
            np.testing.assert_array_equal(fa.shape, fb.shape)

    def test_referenced_files_load(self, demo_bundle, tmp_path):
        save_bundle(demo_bundle, tmp_path / "seq.json")
        back = load_bundle(tmp_path / "seq.json")
        model = back.load_model()
        obj = back.load_object()
        assert model.num_joints > 0 and obj.faces.shape[0] > 0

    def test_paths_stored_relative(self, demo_bundle, tmp_path):
        save_bundle(demo_bundle, tmp_path / "seq.json")
        doc = json.loads((tmp_path / "seq.json").read_text())
        assert doc["hand_model"] == "hand.json"
        assert doc["object_mesh"] == "object.obj"

    def test_save_is_deterministic(self, demo_bundle, tmp_path):
        save_bundle(demo_bundle, tmp_path / "a.json")
        save_bundle(demo_bundle, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() \
            == (tmp_path / "b.json").read_bytes()


class TestValidation:
    def _doc(self, demo_bundle, tmp_path):
        save_bundle(demo_bundle, tmp_path / "seq.json")
        return json.loads((tmp_path / "seq.json").read_text())

    def _reject(self, doc, tmp_path, match):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ModelMismatch, match=match):
            load_bundle(p)

    def test_bad_format_version(self, demo_bundle, tmp_path):
        doc = self._doc(demo_bundle, tmp_path)
        doc["format_version"] = 99
        self._reject(doc, tmp_path, "format")

    def test_bad_coordinate_frame(self, demo_bundle, tmp_path):
        doc = self._doc(demo_bundle, tmp_path)
        doc["coordinate_frame"] = "world"
        self._reject(doc, tmp_path, "object-local")

    def test_empty_frames(self, demo_bundle, tmp_path):
        doc = self._doc(demo_bundle, tmp_path)
        doc["frames"] = []
        self._reject(doc, tmp_path, "no frames")

    def test_missing_referenced_file(self, demo_bundle, tmp_path):
        doc = self._doc(demo_bundle, tmp_path)
        doc["object_mesh"] = "absent.obj"
        self._reject(doc, tmp_path, "missing")
