"""Exception hierarchy shared by all modules.

Each exception carries the process exit status the command line uses when it
surfaces uncaught from a command.
"""


class AEImputeError(Exception):
    exit_code = 1


class ParseError(AEImputeError, ValueError):
    exit_code = 2

    def __init__(self, message, path=None, row=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{', '.join(loc)}: {message}"
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column


class ConfigError(AEImputeError, ValueError):
    """Invalid configuration value or combination."""

    exit_code = 3


class ShapeError(AEImputeError, ValueError):
    exit_code = 4


class NumericError(AEImputeError, ValueError):
    """Data violates a numeric precondition (missing cells, range, donors)."""

    exit_code = 4


class IncompleteTrainingDataError(NumericError):
    pass


class NormalizationError(NumericError):
    pass


class DegenerateColumnError(NumericError):
    pass


class InsufficientDonorsError(NumericError):
    pass


class NothingToImputeError(NumericError):
    pass


class UnsupportedObjectiveError(ConfigError):
    pass
