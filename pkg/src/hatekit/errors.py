"""Exception types shared across the toolkit."""


class HatekitError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(HatekitError):
    """A required column or feature name is missing or unknown."""


class ValidationError(HatekitError):
    """Input data violates a documented contract."""


class StructureError(HatekitError):
    """A conversation thread violates the tweet/comment/reply hierarchy."""


class DimensionError(HatekitError):
    """Array shapes are inconsistent with the configuration."""


class CapabilityError(HatekitError):
    """A backend was asked for a capability it does not declare."""


class StateError(HatekitError):
    """An operation was called out of order, e.g. backward before forward."""


class LoadError(HatekitError):
    """A resource file could not be read."""


class NumericError(HatekitError):
    """Training produced a non-finite value."""

    def __init__(self, message, fold=None, epoch=None, batch=None, value=None):
        super().__init__(message)
        self.fold = fold
        self.epoch = epoch
        self.batch = batch
        self.value = value
