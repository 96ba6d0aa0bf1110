"""Exception and warning types shared across the trainer."""


class CnnTrainerError(Exception):
    """Base class for all domain errors raised by this package."""


class DatasetTooSmall(CnnTrainerError):
    pass


class SchemaViolation(CnnTrainerError):
    pass


class StyleMismatch(CnnTrainerError):
    pass


class ArtifactError(CnnTrainerError):
    pass


class TraceFormatError(CnnTrainerError):
    pass


class NonDecreasingLoss(UserWarning):
    """Validation loss never improved on its first-epoch value."""
