"""Error types shared across the package."""

from sklearn.exceptions import NotFittedError


class PlacementExhausted(RuntimeError):
    """Scene sampler failed to place an object after the retry cap."""


class UnknownObject(KeyError):
    """An object id does not resolve in the scene."""


class Unplannable(ValueError):
    """The intent cannot be expanded into a plan on this scene."""


class ExecutionFault(RuntimeError):
    """A plan step's precondition was false when its turn came."""


class DegenerateSkeleton(ValueError):
    """A hand skeleton contains a zero-length direction vector."""


class UntrainedModel(NotFittedError):
    """Prediction was requested from a model that has not been fitted."""


class TooShort(ValueError):
    """A trajectory has fewer than two samples."""


class InsufficientDemos(ValueError):
    """Too few demonstrations to fit a motion primitive."""


class UnknownClass(KeyError):
    """A gesture class name is not in the library."""


class IndexOutOfRange(IndexError):
    """A decision-table lookup index is outside the table dimensions."""


class TooFewRecords(ValueError):
    """A dataset is too small for the requested split."""


class SchemaMismatch(ValueError):
    """A file on disk does not conform to the expected schema."""


class NoConfidentIntent(RuntimeError):
    """No feasible intent scored above the confidence threshold."""


class NonFiniteGradient(FloatingPointError):
    """Training diverged: a gradient or objective went non-finite."""


class ShapeMismatch(ValueError):
    """Input or weight shapes are inconsistent with the model config."""


class EmptyInput(ValueError):
    """An operation received an empty input it cannot handle."""
