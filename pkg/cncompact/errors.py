from typing import List, Sequence


class ConfigError(ValueError):
    pass


class SingularSystemError(RuntimeError):
    pass


class InapplicableFormulaError(RuntimeError):
    """Closed-form Toeplitz inverse requested with sub * sup <= 0."""


class EigenSolverError(RuntimeError):
    def __init__(self, message: str, partial: Sequence[complex] | None = None) -> None:
        super().__init__(message)
        self.partial: List[complex] = list(partial) if partial is not None else []


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, estimate: float, iterations: int) -> None:
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations
