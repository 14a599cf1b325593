"""Exception types raised across the package."""


class SampleError(ValueError):
    """Raw observations cannot form a valid sample."""


class DomainError(ValueError):
    """A density is non-positive where the likelihood needs it positive."""


class ConfigurationError(ValueError):
    """An experiment configuration is malformed or violates a theorem hypothesis.

    ``hypothesis`` names the violated assumption when the config is well formed
    but the (density, statistic, functional) combination is not covered.
    """

    def __init__(self, message, hypothesis=None):
        super().__init__(message)
        self.hypothesis = hypothesis


class UnsupportedFunctionError(ValueError):
    """The test function lacks metadata needed by the requested operation."""


class InconsistencyError(RuntimeError):
    """Internal invariant failure, e.g. a majorant that does not dominate."""


class DistributionMismatchError(ValueError):
    """Values cannot come from the degenerate reference law."""


class DegenerateStatisticError(ValueError):
    """A rate fit was requested on non-positive summary values."""
