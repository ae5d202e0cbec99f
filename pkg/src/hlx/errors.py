"""Exception hierarchy shared by the library and the command line."""


class HlxError(Exception):
    """Base class for all library errors."""


class ValidationError(HlxError, ValueError):
    """Bad input: wrong shape, out-of-range parameter, inconsistent grids."""


class NumericalError(HlxError, ArithmeticError):
    """A computation produced non-finite values or violated a stability bound."""

    def __init__(self, message, state=None, dump_path=None):
        super().__init__(message)
        self.state = state
        self.dump_path = dump_path


class CFLError(NumericalError):
    """Time step too large for the advective stability estimate."""


class SnapshotError(HlxError, OSError):
    """Malformed or incompatible snapshot file."""


class ConfigError(ValidationError):
    """Run configuration failed schema validation."""
