"""Exception types shared across the package."""


class SignCodecError(Exception):
    """Base class for errors raised by this package."""


class FormatError(SignCodecError, ValueError):
    """A serialized artifact (weights file, container, PGM stream) is malformed."""


class ModelMismatchError(FormatError):
    """A container was produced with different model weights than supplied."""


class NotFittedError(SignCodecError, ValueError):
    """An estimator method that needs a trained model was called before fit."""
