"""Exception types shared across the package."""

from __future__ import annotations


class HjjError(Exception):
    """Base class for all package-specific errors."""


class OutOfHorizon(HjjError):
    """A time signal was sampled outside [0, horizon]."""


class EmptyWindow(HjjError):
    """An averaging window [a, b] with b <= a was requested."""


class HorizonMismatch(HjjError):
    """Two time signals with different horizons were combined."""


class BracketFailure(HjjError):
    """Minimizer bracketing failed; the function looks non-coercive."""


class ConvexityError(HjjError):
    """A randomized midpoint probe found a convexity violation."""


class EmptyControlSet(HjjError):
    """An edge was given no control samples."""


class NoAdmissibleControl(HjjError):
    """A sign-restricted control subset is empty at the probed point."""


class FluxLimiterBelowFloor(HjjError):
    """The flux limiter dips below the junction floor A0(t).

    Carries the offending time and the deficit (floor - A) so callers
    can report where admissibility fails.
    """

    def __init__(self, time: float, deficit: float):
        self.time = float(time)
        self.deficit = float(deficit)
        super().__init__(
            f"flux limiter below junction floor at t={time!r} (deficit {deficit:.3e})"
        )


class SlopeCountMismatch(HjjError):
    """junction operator got a slope count different from the edge count."""


class CflViolation(HjjError):
    """Explicitly requested time step violates dt <= dx / C2."""


class NumericalFailure(HjjError):
    """Non-finite values appeared during time stepping."""


class NonSeparableTimeDependence(HjjError):
    """A black-box Hamiltonian declared time dependence that cannot be
    mollified coefficient-wise."""


class NegativeKn(HjjError):
    """A mismatch signal came out negative beyond round-off."""


class BudgetExceeded(HjjError):
    """Exhaustive trajectory enumeration would exceed its node budget."""


class ConfigError(HjjError):
    """Malformed run configuration (CLI exit code 1)."""
