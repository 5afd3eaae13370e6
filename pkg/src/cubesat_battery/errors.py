"""Exception hierarchy shared by all modules."""


class DischargeModelError(ValueError):
    """Base class for every error raised by this package."""


class SchemaError(DischargeModelError):
    """A mandatory column is missing or the column mapping is malformed."""


class EmptyInputError(DischargeModelError):
    """Input had no data rows (or no segments / samples where some are required)."""


class ValidationError(DischargeModelError):
    """Input violates an ordering, uniqueness or lattice requirement."""


class InsufficientDataError(DischargeModelError):
    pass


class UnidentifiableError(DischargeModelError):
    """The requested quantity cannot be determined from the data."""


class DomainError(DischargeModelError):
    pass


class DegenerateDataError(DischargeModelError):
    """A least-squares design is rank deficient."""

    def __init__(self, message, collinear=()):
        super().__init__(message)
        self.collinear = tuple(collinear)


class ShapeError(DischargeModelError):
    pass


class ConfigurationError(DischargeModelError):
    pass


class EmptySegmentError(DischargeModelError):
    """Outlier filtering rejected every sample of a segment."""
