"""Exception hierarchy. Each maps to a CLI exit code."""


class ShiftDecompError(Exception):
    """Base error; ``stage`` and ``hint`` are filled in by the pipeline."""

    exit_code = 5

    def __init__(self, message: str = "", *, stage: str | None = None, hint: str | None = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.hint = hint

    def __str__(self) -> str:
        out = self.message
        if self.stage:
            out = f"[{self.stage}] {out}"
        if self.hint:
            out = f"{out} (hint: {self.hint})"
        return out


class ConfigError(ShiftDecompError, ValueError):
    exit_code = 2


class DataError(ShiftDecompError, ValueError):
    exit_code = 3


class DegenerateEstimateError(ShiftDecompError, ArithmeticError):
    """Raised when an estimand is undefined on the data at hand (e.g. zero denominator)."""

    exit_code = 4
