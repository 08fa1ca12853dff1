"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class StarOrderError(Exception):
    exit_code = 2


class InvalidArgument(StarOrderError, ValueError):
    exit_code = 1


class DataError(StarOrderError, ValueError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidState(StarOrderError, RuntimeError):
    exit_code = 2


class DegenerateInput(StarOrderError, ValueError):
    exit_code = 3


class GeometryError(DegenerateInput):
    pass


class BudgetExceeded(StarOrderError):
    exit_code = 3
