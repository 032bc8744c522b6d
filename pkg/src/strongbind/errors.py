class StrongBindError(Exception):
    """Base class for errors raised by this package."""


class NotCoprime(StrongBindError, ValueError):
    pass


class NoBoundState(StrongBindError):
    pass


class GridTooCoarse(StrongBindError):
    pass


class NoRoot(StrongBindError):
    pass


class Underflow(StrongBindError, ArithmeticError):
    pass


class MissingCoefficient(StrongBindError, KeyError):
    pass


class NotDegenerate(StrongBindError):
    pass


class RotationLeak(StrongBindError):
    pass


class IllConditioned(StrongBindError):
    pass


class ConfigError(StrongBindError, ValueError):
    pass
