"""Exception types shared across the package."""


class QbijectError(Exception):
    """Base class for all package-specific errors."""


class BracketTooWide(QbijectError):
    """A rational bracket is too wide for the requested grid resolution."""


class DuplicateNode(QbijectError):
    """A node product was requested with repeated nodes."""


class NotBracketed(QbijectError):
    """The target value lies outside [p(0), p(1)]."""


class NotMonotone(QbijectError):
    """No increasing-on-[0,1] certificate could be established for a polynomial."""


class BadEnumeration(QbijectError):
    """An enumeration handle does not start with 0, 1."""


class AvoidanceExhausted(QbijectError):
    """No admissible perturbation value remained (impossible by pigeonhole)."""


class ScheduleOverflow(QbijectError):
    """A grid-step exponent exceeds the configured budget; the step is refused."""

    def __init__(self, exponent, budget, step):
        self.exponent = exponent
        self.budget = budget
        self.step = step
        super().__init__(
            f"step {step} needs majorant exponent {exponent} > budget {budget}; "
            f"raise the budget (QBIJECT_EXPONENT_BUDGET) or use a scaled schedule"
        )


class StageInfeasible(QbijectError):
    """A counting stage would require an unmaterializable polynomial update."""


class StageTooShallow(QbijectError):
    """A count was requested beyond the last frozen threshold."""


class EmptyTildeQ(QbijectError):
    """No fresh witness rational was available (impossible by construction)."""


class HeightTooLarge(QbijectError):
    """An exact index/count was requested beyond the sieve cap."""


class ParseError(QbijectError):
    """A trace or family file could not be parsed."""


class ReplayDivergence(QbijectError):
    """A trace does not reproduce under deterministic replay."""

    def __init__(self, step, field, expected, actual):
        self.step = step
        self.field = field
        self.expected = expected
        self.actual = actual
        super().__init__(f"replay diverges at step {step}: field {field!r}")


class PoleInUnit(QbijectError):
    """A rational map's denominator vanishes inside [0,1]."""
