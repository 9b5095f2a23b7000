"""Exception types shared across the package."""


class SpecbirError(Exception):
    """Base class for all specbir errors."""


class HeaderError(SpecbirError):
    """Cube header sidecar is missing or malformed."""


class SizeMismatchError(SpecbirError):
    """Raw cube file size disagrees with the declared header dimensions."""


class NonFiniteDataError(SpecbirError):
    """Cube data contains NaN or infinite values."""


class EmptyCorpusError(SpecbirError):
    """Tiling or loading produced no patches."""


class DegenerateInputError(SpecbirError):
    """Endmember induction cannot proceed (rank-deficient or constant input)."""


class MassMismatchError(SpecbirError):
    """Significance-matrix marginals do not carry the same total mass."""


class UndefinedDistanceError(SpecbirError):
    """Dictionary distance is undefined (both dictionaries empty)."""


class MissingFeatureError(SpecbirError):
    """A patch feature bundle lacks the features a dissimilarity kind needs."""


class ClassifierDegenerateError(SpecbirError):
    """Classifier training set contains a single class."""


class LabelMismatchError(SpecbirError):
    """Feedback labels do not cover exactly the last retrieved set."""


class ConfigError(SpecbirError):
    """Run configuration is invalid or inconsistent."""
