"""Exception hierarchy shared across the toolkit.

Every domain failure derives from RramFitError so the CLI can map it to a
structured error payload and exit code 1, keeping exit code 2 for usage
errors.
"""


class RramFitError(Exception):
    """Base class for all domain errors raised by this package."""

    def context(self):
        """Extra key/value detail for structured error reports."""
        return {}


class InvalidParams(RramFitError):
    """A value object violates one of its declared invariants."""


class NonFiniteState(RramFitError):
    """Integration produced NaN/Inf state; retry with a smaller dt."""


class TraceFormatError(RramFitError):
    """A trace or curve file failed strict parsing."""

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line

    def context(self):
        return {"path": str(self.path), "line": self.line}


class MalformedSweep(RramFitError):
    """Trace cannot be split into the four triangular sweep branches."""


class NoSetEvent(RramFitError):
    """No abrupt conduction increase found on the positive forward branch."""


class NoResetEvent(RramFitError):
    """No current peak followed by decay on the negative forward branch."""


class DegenerateWindow(RramFitError):
    """Too few samples inside a slope-extraction window."""


class YieldTooLow(RramFitError):
    """Dataset generation accepted too small a fraction of sampled devices."""


class EmptyDataset(RramFitError):
    """A dataset with zero records cannot back an estimate."""


class SchemaViolation(RramFitError):
    """A JSON payload does not satisfy the documented schema."""


class ConnectorFailure(RramFitError):
    """An external estimator process failed, timed out, or wrote garbage."""


class NoSwitching(RramFitError):
    """Candidate parameters produce no extractable hysteresis."""


class NonFiniteObjective(RramFitError):
    """A search probe returned NaN/Inf."""


class ZeroReferenceArea(RramFitError):
    """Reference hysteresis areas must be positive for area matching."""


class WindowTooLarge(RramFitError):
    """Smoothing window is invalid for the point count."""


class AmbiguousSweep(RramFitError):
    """Raw curve points cannot be ordered into a full bipolar sweep."""


class PipelineError(RramFitError):
    """A fitting stage failed; carries the stage name and partial report."""

    def __init__(self, stage, message, report=None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.report = report

    def context(self):
        return {"stage": self.stage}
