"""Exception and warning types shared across the package."""


class AnticipationRnnError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(AnticipationRnnError, ValueError):
    """An argument violates a documented precondition."""


class CorpusParseError(InvalidInputError):
    """Malformed corpus text; carries the 1-based line and column of the offender."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class OutOfSpellingError(AnticipationRnnError):
    """A transposition would need an accidental beyond double-sharp/double-flat."""


class StateError(AnticipationRnnError, RuntimeError):
    """Operation called in the wrong order (e.g. backward with no recorded forward)."""


class CheckInvalidError(AnticipationRnnError):
    """Gradient check aborted: the loss function is not deterministic."""


class GuardError(AnticipationRnnError):
    """A resource guard tripped (e.g. exact enumeration would be too large)."""


class VocabularyMismatchError(AnticipationRnnError):
    """Checkpoint vocabulary does not cover the tokens it is being used with."""


class TrainingDivergedError(AnticipationRnnError):
    """Loss became non-finite during training; carries the offending step index."""

    def __init__(self, step: int):
        super().__init__(f"non-finite loss at optimizer step {step}")
        self.step = step


class ProbabilityFloorWarning(UserWarning):
    """A zero probability was clamped to the 1e-30 floor instead of producing inf."""
