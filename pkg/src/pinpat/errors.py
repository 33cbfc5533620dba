"""Exception hierarchy. Every error raised by the library derives from PinpatError."""


class PinpatError(Exception):
    pass


class DuplicatePoints(PinpatError, ValueError):
    pass


class CollinearTriple(PinpatError, ValueError):
    pass


class ZeroVector(PinpatError, ValueError):
    pass


class DimensionMismatch(PinpatError, ValueError):
    pass


class EmptyRadiusList(PinpatError, ValueError):
    pass


class BadLength(PinpatError, ValueError):
    pass


class TooLarge(PinpatError, ValueError):
    pass


class DomainError(PinpatError, ValueError):
    pass


class NotPrime(PinpatError, ValueError):
    pass


class OutOfWindow(PinpatError, ValueError):
    pass


class PreconditionViolated(PinpatError, ValueError):
    pass


class WindowEmpty(PinpatError, RuntimeError):
    pass


class NotCoplanar(PinpatError, ValueError):
    pass


class LengthMismatch(PinpatError, ValueError):
    pass


class PinNotInSet(PinpatError, ValueError):
    pass


class BadDimension(PinpatError, ValueError):
    pass


class InvalidConeParameters(PinpatError, ValueError):
    pass


class ApexCase(PinpatError):
    """Raised by the angle-lemma threshold when the pin is the cone apex.

    At the apex no threshold is needed: any two rays inside the cone meet at
    an angle of at most the full aperture, which is stored in ``bound``.
    """

    def __init__(self, bound: float):
        super().__init__(f"pin is the cone apex; angle bound {bound!r} holds for all scales")
        self.bound = bound


class ConfigError(PinpatError, ValueError):
    pass
