# -*- coding: utf-8 -*-

#: Exit codes used by the command line interface
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class GyrocalException(Exception):
    exit_code = 1

    def __init__(self, *args, **kwargs):
        super(GyrocalException, self).__init__(*args, **kwargs)


class InvalidParameterError(GyrocalException):
    """Parameter is non-finite, out of range or of unknown kind"""

    exit_code = EXIT_USAGE


class ConfigurationError(GyrocalException):
    """Run configuration or component setup is inconsistent"""

    exit_code = EXIT_USAGE


class DimensionError(GyrocalException):
    """Shapes or lengths of inputs don't match"""

    exit_code = EXIT_DATA


class FormatError(GyrocalException):
    """Input file couldn't be parsed"""

    exit_code = EXIT_DATA

    def __init__(self, *args, **kwargs):
        """Initializes FormatError with optional offending `row` index."""
        self.row = kwargs.pop("row", None)
        super(FormatError, self).__init__(*args, **kwargs)


class InsufficientDataError(GyrocalException):
    """Record is too short for requested averaging intervals"""

    exit_code = EXIT_DATA

    def __init__(self, *args, **kwargs):
        """Initializes InsufficientDataError with offending `taus`."""
        self.taus = kwargs.pop("taus", ())
        super(InsufficientDataError, self).__init__(*args, **kwargs)


class PartitionError(GyrocalException):
    """Record can't be truncated into equal windows"""

    exit_code = EXIT_DATA


class SplitError(GyrocalException):
    """Dataset can't be split into train and test partitions"""

    exit_code = EXIT_DATA


class OutputError(GyrocalException):
    """Output file or directory couldn't be written"""

    exit_code = EXIT_DATA


class StateError(GyrocalException):
    """Operation called in a wrong order, e.g. backward before forward"""

    exit_code = EXIT_NUMERICAL


class NumericalError(GyrocalException):
    """Computation produced or met non-finite or degenerate values"""

    exit_code = EXIT_NUMERICAL


class RankDeficientError(NumericalError):
    """Calibration system doesn't determine all parameters"""

    def __init__(self, *args, **kwargs):
        """
        Initializes RankDeficientError with names of `unobservable`
        parameters and `partial` solution of the observable ones.
        """
        self.unobservable = tuple(kwargs.pop("unobservable", ()))
        self.partial = kwargs.pop("partial", None)
        self.rank = kwargs.pop("rank", None)
        super(RankDeficientError, self).__init__(*args, **kwargs)
