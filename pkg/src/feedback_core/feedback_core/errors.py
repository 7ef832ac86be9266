"""Exception hierarchy shared by every solver."""


class FeedbackError(Exception):
    """Base class for all errors raised by feedback_core."""


class ConfigError(FeedbackError):
    """A parameter or grid combination is not acceptable."""

    def __init__(self, message: str, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field


class NonPositiveTau(ConfigError):
    pass


class GridMisaligned(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class WindowTooNarrow(ConfigError):
    pass


class TooFewModes(ConfigError):
    pass


class UnsupportedCoupling(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class NegativeTime(FeedbackError):
    pass


class OutOfRangeTime(FeedbackError):
    pass


class TrajectoryIndexError(FeedbackError, IndexError):
    pass


class DriveLengthMismatch(FeedbackError):
    pass


class MissingMemory(FeedbackError):
    pass


class NonFiniteState(FeedbackError):
    """The integrated state left the finite range."""

    def __init__(self, step: int, message: str | None = None) -> None:
        super().__init__(message or f"non-finite state at step {step}")
        self.step = step
