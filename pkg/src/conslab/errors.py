"""Exception types shared across the package.

Every precondition failure raises one of these with an actionable message
(what was violated, and where applicable the admissible range).
"""


class ConslabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(ConslabError, ValueError):
    """A constructor or catalogue parameter is outside its validity range."""


class DomainViolationError(ConslabError, ValueError):
    """A state left the admissible state domain of a system."""


class GeometryError(ConslabError, ValueError):
    """A requested geometric construction is inconsistent (e.g. an enlarged
    range box exits the state domain)."""


class UnsupportedGeometryError(ConslabError, ValueError):
    """The operation is only defined for a different spatial dimension."""


class ResolutionError(ConslabError, ValueError):
    """A scale parameter is not resolvable on the given lattice."""


class TestSupportError(ConslabError, ValueError):
    """A test function's support does not fit inside the lattice interior."""


class InconsistentShockError(ConslabError, ValueError):
    """A jump's per-component flux speeds disagree, so no single shock speed
    exists."""


class ConfigError(ConslabError, ValueError):
    """A run configuration failed schema validation or referenced an unknown
    catalogue entry."""
