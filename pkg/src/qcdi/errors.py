"""Exception types shared across the package."""

from __future__ import annotations


class QcdiError(Exception):
    """Base class for package-specific failures."""


class ValidationFailure(QcdiError, ValueError):
    """An instance violates a structural requirement.

    Carries the full list of human-readable issues so callers can report
    every problem at once instead of the first one hit.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class ImpossibleObservation(QcdiError):
    """A symbol with zero predictive probability was fed to the update."""


class StreamExhausted(QcdiError):
    """An observation stream ended before the strategy stopped."""


class HorizonGuardTripped(QcdiError):
    """A simulated episode exceeded the stage guard without stopping."""

    def __init__(self, episode_ids, guard):
        self.episode_ids = list(episode_ids)
        self.guard = int(guard)
        ids = ", ".join(str(i) for i in self.episode_ids[:8])
        more = "..." if len(self.episode_ids) > 8 else ""
        super().__init__(
            f"episodes [{ids}{more}] still running after {self.guard} stages"
        )


class GridBudgetExceeded(QcdiError):
    """Requested grid resolution would allocate more points than allowed."""


class IterationBudgetExceeded(QcdiError):
    """Value iteration failed to reach the target tolerance within budget."""


class StoreFormatError(QcdiError):
    """A policy file is malformed or has an unsupported version."""


class DigestMismatch(QcdiError):
    """A policy file does not match the instance it is being used with."""
