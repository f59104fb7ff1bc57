"""Exception hierarchy shared by all clockwork modules."""


class ClockworkError(Exception):
    """Base class for every error raised by the package."""


class InvalidMdp(ClockworkError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid MDP: " + "; ".join(self.violations))


class InstanceTooLarge(ClockworkError, ValueError):
    pass


class NotCommunicating(ClockworkError):
    pass


class CertificateSearchExhausted(ClockworkError, RuntimeError):
    """No power horizon up to |X|^2 made the power sum positive (internal bug)."""


class NonPersistentPolicy(ClockworkError, ValueError):
    pass


class InconsistentClocks(ClockworkError, ValueError):
    pass


class AdmissibilityError(ClockworkError):
    """Refusal to certify a schedule outside the scope of the convergence results."""


class PairClockNotCovered(AdmissibilityError):
    pass


class InadmissibleSchedule(AdmissibilityError):
    pass
