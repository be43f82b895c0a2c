"""Exception types raised by the tracker and its harness."""


class STPError(Exception):
    """Base class for all tracker errors."""


class InvalidInputError(STPError, ValueError):
    pass


class OutOfBoundsError(STPError, IndexError):
    pass


class DegenerateGeometryError(STPError, ArithmeticError):
    """A closed-form quantity has a vanishing denominator."""


class EmptyNegativesError(STPError):
    """No background location is available for hard-negative mining."""


class InitializationError(STPError):
    """No discriminative part could be learned from the first frame."""


class UsageError(STPError):
    pass


class ConfigError(STPError, ValueError):
    pass


class LoadError(STPError, OSError):
    pass
