"""Exception types raised by the engine."""


class KahlerError(ValueError):
    """Base class for every error raised by :mod:`discbundle`."""


class DomainError(KahlerError):
    """A point lies outside the domain of an expression or chart."""


class OrderError(KahlerError):
    """Requested derivative order exceeds what the Taylor engine supports."""


class NotPositiveDefinite(KahlerError):
    pass


class ZeroDirection(KahlerError):
    pass


class DegeneratePlane(KahlerError):
    pass


class WeightNotPositive(KahlerError):
    """The weight ``h`` fails the curvature check ``-ddbar log h == g_M``."""


class ProfileInadmissible(KahlerError):
    """Calabi profile violates ``u' > 0`` or ``(x u')' > 0``.

    The offending sample is kept on ``self.x``.
    """

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class OutsideDisc(KahlerError):
    pass


class OutOfRange(KahlerError):
    pass


class NotNegativelyPinched(KahlerError):
    pass


class DeltaTooSmall(KahlerError):
    pass


class UnknownModel(KahlerError):
    pass


class BadParams(KahlerError):
    pass


class ConfigError(KahlerError):
    pass
