"""Exception hierarchy shared by all climshift modules."""


class ClimShiftError(Exception):
    """Base class for every error raised by this package."""


class InvalidSeries(ClimShiftError, ValueError):
    """Non-finite values, too few observations or a bad period."""


class FewerThanTwoCycles(ClimShiftError, ValueError):
    pass


class PartialCycle(ClimShiftError, ValueError):
    pass


class NonPositiveVariance(ClimShiftError, ValueError):
    pass


class PeriodMismatch(ClimShiftError, ValueError):
    pass


class LengthMismatch(ClimShiftError, ValueError):
    pass


class LagTooLarge(ClimShiftError, ValueError):
    pass


class SampleSizeOutOfRange(ClimShiftError, ValueError):
    pass


class SeriesTooShort(ClimShiftError, ValueError):
    pass


class NonStationaryFit(ClimShiftError, RuntimeError):
    pass


class ModelSeriesMismatch(ClimShiftError, ValueError):
    pass


class ZeroVariance(ClimShiftError, ValueError):
    pass


class SegmentTooShort(ClimShiftError, ValueError):
    pass


class ProblemTooLarge(ClimShiftError, ValueError):
    pass


class InvalidConfig(ClimShiftError, ValueError):
    pass


class NullTableError(ClimShiftError, ValueError):
    """Malformed or mismatched ``.nulltab`` file."""


class DatasetError(ClimShiftError):
    pass


class ParseError(DatasetError, ValueError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class MissingValueInRange(DatasetError, ValueError):
    pass


class DatasetNotFound(DatasetError, FileNotFoundError):
    pass
