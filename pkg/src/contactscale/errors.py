class ContactScaleError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(ContactScaleError, ValueError):
    pass


class OrderingError(ContactScaleError, ValueError):
    """A query asked for a path running backwards in time."""


class WindowOverflowError(ContactScaleError):
    """A path reached the edge of the simulated window; enlarge W."""


class UsageError(ContactScaleError, ValueError):
    pass


class InsufficientDataError(ContactScaleError):
    pass


class NumericError(ContactScaleError, ArithmeticError):
    pass


class FixtureError(ContactScaleError, ValueError):
    pass
