"""Exception types shared across the package."""

from __future__ import annotations


class FedsimError(Exception):
    """Base class for all package errors."""


class IncompatibleShapes(FedsimError):
    """Operands have mismatched entry names or vector lengths."""


class ZeroWeight(FedsimError):
    """An average was requested over statistics with zero total weight."""


class EmptyCohort(FedsimError):
    """An aggregate was requested over zero users."""


class TooFewPoints(FedsimError):
    """The data pool is too small for even a single user."""


class InsufficientData(FedsimError):
    """The data pool cannot cover the requested partition."""


class CohortTooLarge(FedsimError):
    """More users were requested than the population contains."""


class NotClippedUpstream(FedsimError):
    """A noise mechanism was declared without a clipping step before it."""


class Unachievable(FedsimError):
    """No noise scale within the search bracket meets the privacy target."""


class ZeroLocalSteps(FedsimError):
    """A control-variate update requires at least one local optimizer step."""


class ConfigError(FedsimError):
    """One or more configuration entries are invalid.

    Collects every problem found in a single pass so the user can fix
    them all at once.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class DataError(FedsimError):
    """Dataset construction or loading failed."""


class EngineError(FedsimError):
    """A simulation iteration failed; message carries provenance."""
