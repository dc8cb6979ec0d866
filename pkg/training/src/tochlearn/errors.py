"""Exception types for the training package."""


class TochlearnError(Exception):
    """Base class for all training-side errors."""


class FormatError(TochlearnError):
    pass


class CorpusError(TochlearnError):
    pass


class TrainingDiverged(TochlearnError):
    pass
