from typing import Iterable, List, Optional


class BlicketError(Exception):
    """Base class for every error raised by the workbench"""


class ConfigError(BlicketError):
    pass


class GenerationError(BlicketError):
    """A problem or split could not be generated"""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"problem {index}: {message}"
        super().__init__(message)


class InfeasibleContextError(GenerationError):
    """Signals the caller to resample the context"""


class RejectionBudgetExceeded(GenerationError):
    pass


class ProblemDecodeError(BlicketError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid field '{field}': {message}")


class InconsistentContextError(BlicketError):
    """No Blicket assignment reproduces the observed trials"""


class NumericError(BlicketError):
    pass


class EvaluationError(BlicketError):
    def __init__(self, missing: Iterable[str] = (), extra: Iterable[str] = ()):
        self.missing: List[str] = sorted(missing)
        self.extra: List[str] = sorted(extra)
        parts = []
        if self.missing:
            parts.append(f"missing predictions for {', '.join(self.missing)}")
        if self.extra:
            parts.append(f"unexpected predictions for {', '.join(self.extra)}")
        super().__init__("; ".join(parts) or "prediction set does not match the fold")
