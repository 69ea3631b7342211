"""Exceptions raised by sped_select.

Every class carries the process exit code the command line maps it to.
"""


class SpedError(ValueError):
    """Base class for all sped_select errors."""

    exit_code = 1


class DomainError(SpedError):
    """A parameter value lies outside its allowed domain."""

    exit_code = 64


class DataError(SpedError):
    """Input data or computed values are unusable (unreadable, NaN, infinite)."""

    exit_code = 2

    def __init__(self, message, line=None):
        """
        Args:
            message (str): Human readable description.
            line (int, optional): 1-based line number of the offending input line.
        """
        self._message = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

    def __reduce__(self):
        return (type(self), (self._message, self.line))


class PreconditionError(SpedError):
    """Valid values that do not satisfy an operation's precondition."""

    exit_code = 65


class MissingCompanionError(SpedError):
    """A results file was given without its companion manifest."""

    exit_code = 66


class ReplicateError(SpedError):
    """Failure inside one Monte Carlo replicate."""

    def __init__(self, replicate, cause):
        super().__init__(f"replicate {replicate} failed: {cause}")
        self.replicate = replicate
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)

    def __reduce__(self):
        return (type(self), (self.replicate, self.cause))
