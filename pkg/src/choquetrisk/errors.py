"""Exception hierarchy for choquet-risk."""


class ValidationError(ValueError):
    """Raised when an input fails validation."""

    pass


class NotGrounded(ValidationError):
    """Capacity of the empty event is not 0."""

    def __init__(self, value: float) -> None:
        super().__init__(f"c(∅) must be 0, got {value!r}")
        self.value = value


class NotNormalized(ValidationError):
    """A capacity or distortion curve misses its value at the top (or bottom)."""

    def __init__(self, message: str, value: float | None = None) -> None:
        super().__init__(message)
        self.value = value


class NotMonotone(ValidationError):
    """A set function or curve decreases; ``witness`` holds the offending pair."""

    def __init__(self, message: str, witness: tuple[object, object]) -> None:
        super().__init__(message)
        self.witness = witness


class MissingEvent(ValidationError):
    """A capacity table omits an event."""

    def __init__(self, event_key: str) -> None:
        super().__init__(f"capacity table has no value for event {event_key!r}")
        self.event_key = event_key


class InvalidValue(ValidationError):
    """A number is not finite or lies outside its admissible range."""


class InvalidProbability(ValidationError):
    """Weights are negative or do not sum to 1."""


class SpaceTooLarge(ValidationError):
    """The sample space or table exceeds the supported size."""


class SpaceMismatch(ValidationError):
    """Operands live on different sample spaces."""


class PartitionMismatch(ValidationError):
    """Operands use different block partitions."""


class GapOrOverlap(ValidationError):
    """Curve segments do not tile (0, 1] exactly."""


class BlockCountMismatch(ValidationError):
    """Number of curves differs from the number of blocks."""


class InvalidLevel(ValidationError):
    """A VaR/AVaR level lies outside (0, 1)."""

    def __init__(self, alpha: float) -> None:
        super().__init__(f"level must lie in (0, 1), got {alpha!r}")
        self.alpha = alpha


class OutOfDomain(ValidationError):
    """A distortion is evaluated outside [0, 1]."""


class NotConcave(ValidationError):
    """An operation requires concave distortions."""

    def __init__(self, blocks: list[str]) -> None:
        super().__init__(f"distortion is not concave on block(s): {', '.join(blocks)}")
        self.blocks = blocks


class NotComonotonic(ValidationError):
    """Two positions are not comonotonic."""

    def __init__(self, witness: tuple[str, str]) -> None:
        super().__init__(f"positions are not comonotonic on atoms {witness}")
        self.witness = witness


class NegativeInput(ValidationError):
    """A position that must be non-negative is not."""


class InvalidWeight(ValidationError):
    """A weight curve is negative or decreasing."""


class InvalidRanking(ValidationError):
    """An atom ranking is not a permutation of the atoms."""


class WellDefinednessViolation(ValidationError):
    """Events of equal capacity received different risk values."""

    def __init__(self, message: str, events: tuple[str, str], block: str) -> None:
        super().__init__(message)
        self.events = events
        self.block = block


class ExtractionMissing(ValidationError):
    """No usable extracted distortion is available for verification."""


class PluginError(RuntimeError):
    """An external risk-measure plugin failed or broke the protocol."""


class CharacterizationMismatch(RuntimeError):
    """Equivalent characterisations disagreed; signals an implementation bug."""


class ScenarioError(ValueError):
    """Base class for scenario file problems."""


class ScenarioSyntaxError(ScenarioError):
    """The scenario file is not well-formed JSON."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SchemaError(ScenarioError):
    """A field is missing, unexpected or of the wrong shape."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class ScenarioValidationError(ScenarioError):
    """A scenario element failed domain validation; the cause is chained."""

    def __init__(self, element: str, cause: Exception) -> None:
        super().__init__(f"{element}: {type(cause).__name__}: {cause}")
        self.element = element
        self.cause = cause
