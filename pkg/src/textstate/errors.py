"""Exception hierarchy shared by every stage of the mapping."""

from __future__ import annotations


class TextStateError(Exception):
    """Base class for all domain errors raised by :mod:`textstate`."""


class EmptyInputError(TextStateError, ValueError):
    """Raised when an operation receives text that is empty after trimming."""


class LexiconParseError(TextStateError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class LexiconValidationError(TextStateError, ValueError):
    pass


class MalformedResponseError(TextStateError):
    """No interpretation could be parsed out of a model response."""

    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(message)


class FixtureNotFoundError(TextStateError, LookupError):
    pass


class FixtureError(TextStateError):
    """A fixture file exists but is unreadable or inconsistent."""


class TransportError(TextStateError):
    """A live provider request failed after exhausting its retries."""

    def __init__(self, message: str, attempts: int, last_error: BaseException | None = None):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"{message} (after {attempts} attempt{'s' if attempts != 1 else ''})")


class StateInvariantError(TextStateError, ValueError):
    pass


class StageContractError(TextStateError):
    def __init__(self, stage: str, reason: str):
        self.stage = stage
        super().__init__(f"stage {stage!r} broke the state contract: {reason}")


class CorpusSchemaError(TextStateError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
