"""Exception hierarchy for the Ricci ovals laboratory."""

from typing import Any, Dict, Optional, Sequence, Tuple


class RicciLabError(Exception):
    """Base class for all laboratory exceptions."""

    pass


class GridError(RicciLabError):
    """Raised when a sampled profile or grid violates its invariants."""

    pass


class IntegrationError(RicciLabError):
    """Raised when an ODE integration fails before reaching its target."""

    def __init__(self, message: str, last_rho: Optional[float] = None):
        super().__init__(message)
        self.last_rho = last_rho


class ProfileBlowUpError(IntegrationError):
    """Raised when the Bryant profile leaves the interval (0, 1]."""

    pass


class BarrierError(RicciLabError):
    """Raised when a barrier cannot be built or compared on the requested domain."""

    pass


class QuadratureError(RicciLabError):
    """Raised when a weighted integral would lose too much Gaussian mass."""

    pass


class StabilityError(RicciLabError):
    """Raised when a requested time step exceeds the stability bound."""

    pass


class SingularityError(RicciLabError):
    """Raised when a flow step would pinch the profile.

    Attributes:
        time_of_death: Linear estimate of the time at which the radius vanishes.
        last_state: The last accepted profile.
    """

    def __init__(self, message: str, time_of_death: float, last_state=None):
        super().__init__(message)
        self.time_of_death = time_of_death
        self.last_state = last_state


class MonotonicityError(RicciLabError):
    """Raised when a profile is not monotone where a tip chart is requested."""

    pass


class TipSlopeError(RicciLabError):
    """Raised when the tip slope is too far from the closing value."""

    pass


class SeamError(RicciLabError):
    """Raised when glued ansatz pieces disagree across a seam."""

    def __init__(self, message: str, seams: Sequence[Tuple[float, float]] = ()):
        super().__init__(message)
        self.seams = list(seams)


class ConfigError(RicciLabError):
    """Raised when a run configuration is invalid."""

    pass


class ChecksFailedError(RicciLabError):
    """Raised when one or more enabled verification checks fail.

    ``result`` holds the finished summary, already written to disk.
    """

    def __init__(self, message: str, failed: Sequence[str] = (), result: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.failed = list(failed)
        self.result = result


class FlowAbortedError(RicciLabError):
    """Raised when a flow run stops on a step error.

    Attributes:
        trajectory: The trajectory up to the last accepted step.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
