"""Exception hierarchy.

``DataError`` subclasses signal bad or insufficient input data (CLI exit code 2);
anything else deriving from ``ReldaysError`` is a runtime failure (exit code 3).
"""


class ReldaysError(Exception):
    pass


class DataError(ReldaysError, ValueError):
    pass


# dataset
class MissingColumn(DataError):
    pass


class UnparsableTimestamp(DataError):
    pass


class EmptyFile(DataError):
    pass


class ProfileError(DataError):
    pass


# features
class SlotOutOfRange(DataError):
    pass


class MissingTemperature(DataError):
    pass


class IncompleteDay(DataError):
    pass


class EmptySelection(DataError):
    pass


# dtw
class EmptySeries(DataError):
    pass


class BandInfeasible(DataError):
    pass


class LengthMismatch(DataError):
    pass


# selector
class MissingHistory(DataError):
    pass


class MissingForecast(DataError):
    pass


class EmptyPool(DataError):
    pass


# svr
class NotScaled(ReldaysError):
    pass


class SingularInput(DataError):
    pass


class ScalerMismatch(ReldaysError):
    pass


class DimensionMismatch(DataError):
    pass


# tuning
class TooFewSamples(DataError):
    pass


class DegenerateActual(DataError):
    pass


class DegenerateSeries(DataError):
    pass


# pipeline
class InvalidScenario(DataError):
    pass


class IoFailure(ReldaysError):
    pass


class EmptyReport(ReldaysError):
    pass
