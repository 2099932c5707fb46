"""Exception hierarchy shared by all fddcsi modules."""


class FddCsiError(Exception):
    """Base class for every error raised by this package."""


class DatasetError(FddCsiError, ValueError):
    """A dataset file or in-memory record violates the dataset contract.

    ``location`` pinpoints the problem (byte offset, record index, ...).
    """

    def __init__(self, message, location=None):
        self.message = message
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class GeometryError(FddCsiError, ValueError):
    """Coincident or otherwise degenerate geometry."""


class ConvergenceError(FddCsiError, ArithmeticError):
    """An iterative solver did not reach its tolerance."""


class DegenerateSpectrumError(ConvergenceError):
    """The leading eigenvalue is not separated from the next one.

    The best available vector and eigenvalue are attached so callers may
    still use them knowingly.
    """

    def __init__(self, message, vector=None, eigenvalue=None, gap=None):
        super().__init__(message)
        self.vector = vector
        self.eigenvalue = eigenvalue
        self.gap = gap


class TrainingDivergedError(FddCsiError, ArithmeticError):
    """Training loss became non-finite."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class ProvenanceError(FddCsiError, ValueError):
    """An estimator is evaluated against a split it was not fitted on."""


class EmptySubsetError(FddCsiError, ValueError):
    """A split produced an empty train or test side."""


class CheckpointError(FddCsiError, ValueError):
    """A checkpoint file is malformed or belongs to a different model spec."""


class ConfigError(FddCsiError, ValueError):
    """A run configuration is invalid."""
