"""Shared exception types."""


class SizeGuardError(RuntimeError):
    """An enumeration would exceed its configured cap.

    Carries the exact count that tripped the guard so callers can report it.
    """

    def __init__(self, what, count, cap):
        super().__init__(f"{what}: enumeration count {count} exceeds cap {cap}")
        self.what = what
        self.count = count
        self.cap = cap


class ZeroProbabilityConditioning(ValueError):
    """Conditioning event has probability zero."""


class InconsistentObservation(ValueError):
    """A common observation has zero prior mass under the given belief and
    prescription, so the Bayes update is undefined."""


class EmptyPointSet(ValueError):
    """Value iteration needs at least one belief point."""


class NonTeamUtility(ValueError):
    """The optimizer requires all agents to share one utility table."""


class SpecFormatError(ValueError):
    """A problem-spec document is malformed or has an unsupported version."""
