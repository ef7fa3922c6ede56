"""Exception types shared across the package.

Errors are grouped loosely by the stage that raises them: geometry and
channel validation, secrecy analytics, resource allocation, routing
search, and file ingestion.  All inherit from :class:`SagRelayError` so
callers can catch the package's failures with a single clause.
"""


class SagRelayError(Exception):
    """Base class for all package errors."""


class ZeroDistance(SagRelayError):
    """Two nodes occupy the same position; the link model is undefined."""


class InsufficientTrials(SagRelayError):
    """A Monte-Carlo estimate was requested with too few trials."""


class FreeSpaceDivergence(SagRelayError):
    """The eavesdropper integral diverges for pathloss exponents <= 2."""


class MissingCalibration(SagRelayError):
    """No calibration band covers the requested distance."""


class InvalidRegion(SagRelayError):
    """Monte-Carlo region radius too small relative to the link distance."""


class Infeasible(SagRelayError):
    """A constraint set admits no solution under the given budgets."""


class InfeasibleLink(Infeasible):
    """A node's required jamming power exceeds its jamming budget."""

    def __init__(self, node_id, required, budget):
        self.node_id = node_id
        self.required = required
        self.budget = budget
        super().__init__(
            f"node {node_id}: required jamming PSD {required:.4g} W/Hz "
            f"exceeds budget {budget:.4g} W/Hz"
        )


class ZeroRate(SagRelayError):
    """An edge on a user path has zero spectral efficiency."""


class DisconnectedUser(SagRelayError):
    """A user has no feasible path from the root."""


class Unreachable(SagRelayError):
    """No root-to-user path exists in the feasible graph."""


class CombinatorialBlowup(SagRelayError):
    """Exact enumeration would exceed the configured combination limit."""


class NoFeasibleTree(SagRelayError):
    """A node subset admits no spanning tree covering all users."""


class ParseError(SagRelayError):
    """A snapshot file contains malformed rows."""

    def __init__(self, message, rows=None):
        self.rows = list(rows) if rows else []
        super().__init__(message)


class EmptyDataset(SagRelayError):
    """A snapshot file produced zero valid node records."""


class DegenerateFit(SagRelayError):
    """Too few usable Monte-Carlo cells remain to fit a calibration band."""
