"""Exception hierarchy shared by all drivermon modules."""


class DmsError(Exception):
    """Base class for every error raised by drivermon."""


# indicators
class WrongLength(DmsError, ValueError):
    pass


class NonFinite(DmsError, ValueError):
    pass


class DegenerateRegion(DmsError, ValueError):
    pass


class DegenerateEye(DegenerateRegion):
    pass


class DegenerateMouth(DegenerateRegion):
    pass


# micronet
class ShapeMismatch(DmsError, ValueError):
    pass


class MissingWeight(DmsError, KeyError):
    pass


class WeightFileError(DmsError, ValueError):
    pass


class BadMagic(WeightFileError):
    pass


class VersionUnsupported(WeightFileError):
    pass


class TruncatedFile(WeightFileError):
    pass


class ChecksumMismatch(WeightFileError):
    pass


# detector / tracker
class LengthMismatch(DmsError, ValueError):
    pass


class NumericalFailure(DmsError, ArithmeticError):
    pass


class SchedulerViolation(DmsError, RuntimeError):
    pass


# decision / fsm
class NotCalibrated(DmsError, RuntimeError):
    pass


class EmptyWindow(DmsError, ValueError):
    pass


class InvalidSample(DmsError, ValueError):
    pass


# metrics
class ZeroSupport(DmsError, ValueError):
    pass


class DegenerateIod(DmsError, ValueError):
    pass


# files / config
class ParseError(DmsError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(DmsError, ValueError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)
