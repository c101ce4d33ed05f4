"""Exception hierarchy shared by the kernels, the oracle and the solvers."""


class MstabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(MstabError, ValueError):
    pass


class BreakdownError(MstabError, ArithmeticError):
    """A recurrence hit a (near) singular quantity."""


class RankDeficient(BreakdownError):
    """Tall least-squares matrix lost column rank (stabilization breakdown)."""


class SingularProjection(BreakdownError):
    """The small projected system ``P^H V`` is numerically singular."""


class ShiftSingular(BreakdownError):
    """A shifted operator ``I - omega A^H`` could not be inverted."""


class ZeroPivot(BreakdownError):
    def __init__(self, row):
        super().__init__(f"zero pivot in row {row}")
        self.row = row


class MissingOmegas(MstabError, ValueError):
    pass


class FingerprintMismatch(MstabError, ValueError):
    pass


class StaleData(MstabError, ValueError):
    pass


class RecycleFormatError(MstabError, ValueError):
    pass


class MatrixMarketError(MstabError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(MstabError, ValueError):
    pass
