"""Exception types shared across the package."""

from __future__ import annotations


class IasKitError(Exception):
    """Base class for package-specific failures."""


class SamplingError(IasKitError):
    """Rejection sampling exhausted its attempt budget."""


class BudgetExceededError(IasKitError):
    """Enumeration work budget exhausted; carries the sets found so far."""

    def __init__(self, message: str, found=()):
        super().__init__(message)
        self.found = list(found)


class SingularDesignError(IasKitError):
    """Regression design matrix was singular for the named predictor set."""

    def __init__(self, varset):
        super().__init__(f"singular design matrix for predictor set {varset}")
        self.varset = varset
