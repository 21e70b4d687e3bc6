"""
Exception hierarchy for the self-triggered sampling toolkit.
Each CLI-facing error carries the process exit code it maps to.
"""

from typing import Any, Optional


class SelfTriggerError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ConfigurationError(SelfTriggerError):
    """Invalid run configuration, artifact or parameter choice."""

    exit_code = 2


class ContractViolation(SelfTriggerError):
    """A caller broke an interface contract (shapes, positive dwells, ...)."""


class DomainError(SelfTriggerError):
    """A function was evaluated outside its domain (e.g. w <= 0)."""


class PreconditionError(SelfTriggerError):
    """An operation precondition does not hold (e.g. phi((x0, 0)) >= 0)."""


class DivergenceError(SelfTriggerError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float, message: Optional[str] = None):
        self.time = time
        super().__init__(message or f"state became non-finite at t={time:.6g} s")


class SynthesisError(SelfTriggerError):
    """Coefficient or set synthesis could not complete."""

    exit_code = 3


class UnboundedSetError(SynthesisError):
    """The set Phi escaped the ray-search growth cap (compactness fails)."""


class SynthesisInconsistencyError(SelfTriggerError):
    """delta0 * phi0 + delta1 <= 0 at a D_r projection point."""

    exit_code = 3


class VerificationError(SelfTriggerError):
    """A property check failed."""

    exit_code = 4


class DeltaVerificationError(VerificationError):
    """Dense verification of the comparison coefficients found a violation."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"delta verification failed: margin={report.min_margin:.6g}, "
            f"boundary margin={report.boundary_margin:.6g}"
        )


class CoverageError(SelfTriggerError):
    """A state is not covered by the region partition."""

    exit_code = 5

    def __init__(self, which: str, state: Any, message: Optional[str] = None):
        self.which = which
        self.state = state
        super().__init__(message or f"state {state} not covered ({which} failed)")


class SuiteFailure(VerificationError):
    """One or more verify suites failed."""

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__(f"verify suites failed: {', '.join(self.failed)}")
