"""Exception types shared by the solver modules."""


class HermiteDGError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(HermiteDGError, ValueError):
    pass


class CompatibilityViolation(HermiteDGError, ValueError):
    """Right-hand side of a periodic elliptic problem does not have zero mean."""


class NumericFailure(HermiteDGError, RuntimeError):
    """A linear or fixed-point solve did not reach its tolerance.

    The last measured residual is kept in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UndefinedRatio(HermiteDGError, ValueError):
    pass


class InvalidWindow(HermiteDGError, ValueError):
    pass


class ConfigError(HermiteDGError, ValueError):
    pass
