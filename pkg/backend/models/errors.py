class HelmholtzMeansError(Exception):
    """Base class for every error raised by the library."""


class DomainError(HelmholtzMeansError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(HelmholtzMeansError, ValueError):
    """The hypothesis of the underlying statement is not satisfied."""


class SearchError(HelmholtzMeansError, RuntimeError):
    """A numerical search finished without locating what it looked for."""
