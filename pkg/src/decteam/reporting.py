"""Verdict containers shared by the verification routines."""

HOLDS = "HOLDS"
FAILS = "FAILS"
SKIPPED = "SKIPPED"


class ConditionResult:
    def __init__(self, name, verdict, max_deviation=0.0, counterexample=None,
                 profiles_checked=0, realizations_checked=0, coverage="exhaustive"):
        self.name = name
        self.verdict = verdict
        self.max_deviation = max_deviation
        self.counterexample = counterexample
        self.profiles_checked = profiles_checked
        self.realizations_checked = realizations_checked
        self.coverage = coverage

    def to_dict(self):
        return {
            "condition": self.name,
            "verdict": self.verdict,
            "max_deviation": float(self.max_deviation),
            "counterexample": self.counterexample,
            "profiles_checked": self.profiles_checked,
            "realizations_checked": self.realizations_checked,
            "coverage": self.coverage,
        }


class CheckReport:
    """Per-condition verdicts for one verification run.

    A FAILS verdict always carries a replayable counterexample: the profile
    (as explicit action tables), the conditioning realization, and the two
    conditional distributions whose sup-distance exceeds tolerance.
    """

    def __init__(self, subject, conditions, tolerance):
        self.subject = subject
        self.conditions = conditions
        self.tolerance = tolerance

    @property
    def holds(self):
        return all(c.verdict == HOLDS for c in self.conditions)

    @property
    def any_fails(self):
        return any(c.verdict == FAILS for c in self.conditions)

    @property
    def any_skipped(self):
        return any(c.verdict == SKIPPED for c in self.conditions)

    def condition(self, name):
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "subject": self.subject,
            "tolerance": self.tolerance,
            "verdict": "HOLDS" if self.holds else ("FAILS" if self.any_fails else "SKIPPED"),
            "conditions": [c.to_dict() for c in self.conditions],
        }
