"""Exception hierarchy.

Each class carries the process exit code the CLI maps it to.
"""


class SchrographError(Exception):
    exit_code = 1


class ParameterError(SchrographError, ValueError):
    """Invalid parameters or a violated operation precondition on inputs."""

    exit_code = 2


class DomainError(SchrographError, ValueError):
    """An operator was evaluated where it is not exactly defined (e.g. a boundary vertex)."""

    exit_code = 2


class OutOfSectionError(DomainError):
    """A metric ball reaches past the vertices covered by the finite section."""


class HypothesisError(SchrographError):
    """A hypothesis of an estimate does not hold, so its conclusion is not being tested."""

    exit_code = 3


class SolverError(SchrographError, RuntimeError):
    exit_code = 5

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual
