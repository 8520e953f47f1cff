"""Exception types shared across the package."""


class AerialCfError(Exception):
    """Base class for all package errors."""


class ValidationError(AerialCfError):
    """A configuration or input value failed schema/invariant validation."""


class GeometryError(AerialCfError):
    """Node geometry is inconsistent (e.g. UxNB at or above the HAPS)."""


class DomainError(AerialCfError):
    """A numeric argument is outside the domain of an operation."""


class SolverError(AerialCfError):
    """The cone-program solver failed (dimension mismatch, breakdown)."""


class DegenerateScenarioError(AerialCfError):
    """No positive SINR target is feasible for the given scenario."""
