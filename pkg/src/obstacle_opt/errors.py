"""Exception types shared across the package."""


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class LinearSolveError(SolverError):
    """Direct sparse solve produced an unacceptable residual."""


class NewtonError(SolverError):
    """Damped Newton stagnated; carries the delta at which it happened."""

    def __init__(self, message: str, delta: float | None = None):
        super().__init__(message)
        self.delta = delta


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending field path."""

    def __init__(self, message: str, field_path: str | None = None):
        super().__init__(message)
        self.field_path = field_path
