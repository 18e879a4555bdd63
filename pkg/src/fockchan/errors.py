"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain of the requested family or operation."""


class ToleranceError(RuntimeError):
    """A numerical target (completeness, leakage, tail mass) could not be met.

    The achieved value is kept on the exception so callers can report it.
    """

    def __init__(self, message, achieved=None, target=None):
        super().__init__(message)
        self.achieved = achieved
        self.target = target


class TruncationWarning(UserWarning):
    """Probability mass was lost to the Fock cutoff beyond the configured leakage."""
