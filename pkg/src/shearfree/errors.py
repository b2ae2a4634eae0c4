"""Exception types shared across the package.

Numeric failures (caustics, blowup) are distinct from precondition
violations (transversality, incidence) so that batch drivers can map them
to different exit codes.
"""


class ShearfreeError(Exception):
    """Base class for all package errors."""


class ZeroSubspace(ShearfreeError):
    """All supplied generators are numerically zero."""


class DimensionMismatch(ShearfreeError):
    """Operands live in different ambient spaces or have wrong dimensions."""


class TangentAtInfinity(ShearfreeError):
    """The geodesic lies in structures through the infinity point, so it has
    no well-defined chart intersection with scri."""


class NotIncident(ShearfreeError):
    """The subspace does not meet the requested plane of scri."""


class TangentDirection(ShearfreeError):
    """The trace line degenerates to the excluded tangent direction."""


class NoChartIntersection(ShearfreeError):
    """The null geodesic never enters the affine chart."""


class CausticReached(ShearfreeError):
    """Characteristics cross (or fail to reach the query point); the classical
    solution stops being single-valued."""

    def __init__(self, message, u_star=None, where=None):
        super().__init__(message)
        self.u_star = u_star
        self.where = where


class BlowUp(ShearfreeError):
    """A characteristic left the configured state bound in finite time."""

    def __init__(self, message, u=None):
        super().__init__(message)
        self.u = u


class DegenerateCurve(ShearfreeError):
    """A sampled curve is not an immersion at the sample resolution."""


class IllConditioned(ShearfreeError):
    """A linear solve or a finite-difference stencil is too ill-conditioned
    to trust at the requested tolerance."""


class TransversalityViolation(ShearfreeError):
    """Cauchy data is tangent to its own characteristic somewhere."""


class FoliationFailure(ShearfreeError):
    """The geodesic family fails to foliate: det of the parameter Jacobian
    vanishes inside the requested box."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ScenarioError(ShearfreeError):
    """Malformed scenario file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ExpressionSyntaxError(ScenarioError):
    """Expression source failed to parse; carries the byte offset and the
    set of token kinds that would have been accepted."""

    def __init__(self, message, offset, expected=()):
        super().__init__("offset %d: %s" % (offset, message))
        self.offset = offset
        self.expected = frozenset(expected)


class ExpressionDomainError(ScenarioError):
    """Expression evaluation hit a domain error (log of a negative number,
    division by zero); carries the source span of the offending node."""

    def __init__(self, message, span):
        super().__init__("at %d:%d: %s" % (span[0], span[1], message))
        self.span = span
