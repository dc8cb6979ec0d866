"""Toy-scale training for the temporal field denoiser.

Produces weight containers and parity fixtures consumed by the inference
package; talks to it only through the documented file formats and CLI.
"""

from .dataset import Corpus, CorpusConfig, SequencePair, build_dataset, \
    filter_far_frames
from .errors import CorpusError, FormatError, TochlearnError, \
    TrainingDiverged
from .formats import FieldSequence, load_weights, mirror_fields, read_toch, \
    save_weights, write_toch
from .model import DenoiserNet, TOY_HYPERPARAMETERS
from .train import TrainingConfig, contact_weights, export, sequence_loss, \
    train

__all__ = [
    "Corpus", "CorpusConfig", "CorpusError", "DenoiserNet", "FieldSequence",
    "FormatError", "SequencePair", "TochlearnError", "TrainingConfig",
    "TrainingDiverged", "TOY_HYPERPARAMETERS", "build_dataset",
    "contact_weights", "export", "filter_far_frames", "load_weights",
    "mirror_fields", "read_toch", "save_weights", "sequence_loss", "train",
    "write_toch",
]
