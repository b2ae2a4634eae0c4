"""The compactified split-signature model space and its incidence geometry.

Fixed model conventions:

* the ambient space is R^4 with standard basis e1..e4;
* the infinity point is the plane I = span{e1, e2};
* the affine spacetime chart consists of the planes rowspan [X | I2] for a
  real 2x2 matrix X, which never meet I;
* scri, the null cone of I minus its vertex, carries the chart
  (u, x, y) -> span{e1 + x e2, e3 + y e4 + u e2}.

In this chart x labels the family of totally null planes traced by lines
of slope dx/du inside each {y = const} surface of scri, and y plays the
mirror role.  Two chart points are null separated exactly when
det(X - Y) = 0, so det is the chart quadratic form, of signature (2,2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, NoChartIntersection, NotIncident,
                     TangentAtInfinity, TangentDirection, ZeroSubspace)
from .projlin import (DEFAULT_TOL, PNFlag, Subspace, contains, join, meet,
                      span_canonical)

_E = np.eye(4)


def infinity_plane(tol: float = DEFAULT_TOL) -> Subspace:
    """The distinguished plane I = span{e1, e2} whose null cone is scri."""
    return span_canonical([_E[0], _E[1]], tol)


@dataclass(frozen=True, eq=False)
class PluckerVector:
    """Line coordinates (p12, p13, p14, p23, p24, p34) of a 2-plane,
    normalized so the largest-magnitude entry is +1."""

    p: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.p, dtype=float).reshape(-1)
        if v.size != 6:
            raise DimensionMismatch("PluckerVector expects 6 components, got %d" % v.size)
        i = int(np.argmax(np.abs(v)))
        if abs(v[i]) == 0.0:
            raise ZeroSubspace("zero Plucker vector")
        v = v / v[i] + 0.0
        v.flags.writeable = False
        object.__setattr__(self, "p", v)

    @property
    def relation_residual(self) -> float:
        """|p12 p34 - p13 p24 + p14 p23|, zero exactly on decomposable vectors."""
        p = self.p
        return float(abs(p[0] * p[5] - p[1] * p[4] + p[2] * p[3]))


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of the affine spacetime chart: the plane rowspan [X | I2]."""

    X: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.X, dtype=float).reshape(2, 2).copy()
        M.flags.writeable = False
        object.__setattr__(self, "X", M)

    @property
    def plane(self) -> Subspace:
        rows = np.hstack([self.X, np.eye(2)])
        return span_canonical(rows)

    def __repr__(self):
        return "ChartPoint(%s)" % np.array2string(self.X, precision=10)


@dataclass(frozen=True, eq=False)
class ScriPoint:
    """A chart point (u, x, y) of scri together with its plane realization."""

    u: float
    x: float
    y: float
    plane: Subspace

    def coords(self):
        return (self.u, self.x, self.y)


def chart_form(N: np.ndarray) -> float:
    """The chart quadratic form q(N) = det N on displacement matrices."""
    N = np.asarray(N, dtype=float)
    return float(N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0])


def plucker_embed(plane: Subspace) -> PluckerVector:
    """Plucker coordinates of a 2-plane: the six 2x2 minors of its basis."""
    if plane.dim != 2:
        raise ZeroSubspace("plucker_embed needs a 2-plane, got dim %d" % plane.dim)
    b0, b1 = plane.basis
    comps = []
    for i in range(4):
        for j in range(i + 1, 4):
            comps.append(b0[i] * b1[j] - b0[j] * b1[i])
    return PluckerVector(np.array(comps))


def null_separation(A: Subspace, B: Subspace) -> float:
    """Normalized top wedge of two 2-planes.

    Zero (within tolerance) iff the planes intersect nontrivially, which is
    the conformal null relation.  For chart points this is proportional to
    det(X - Y).
    """
    if A.dim != 2 or B.dim != 2:
        raise DimensionMismatch("null_separation needs two 2-planes")
    S = np.vstack([A.basis, B.basis])
    norms = np.linalg.norm(S, axis=1)
    norms[norms == 0.0] = 1.0
    return float(np.linalg.det(S / norms[:, None]))


def scri_point(u: float, x: float, y: float, tol: float = DEFAULT_TOL) -> ScriPoint:
    """The scri chart: (u, x, y) -> span{e1 + x e2, e3 + y e4 + u e2}."""
    rows = np.array([[1.0, x, 0.0, 0.0], [0.0, u, 1.0, y]])
    return ScriPoint(float(u), float(x), float(y), span_canonical(rows, tol))


def _chart_coords_of_scri_plane(J: Subspace, tol: float):
    """Solve span{e1 + x e2, e3 + y e4 + u e2} = J for (u, x, y)."""
    I = infinity_plane(tol)
    W = meet(I, J)
    if W.dim != 1:
        raise TangentAtInfinity("plane does not meet infinity in a single direction")
    w = W.vector()
    if abs(w[0]) <= tol:
        raise TangentAtInfinity("scri point lies on the chart boundary (first label infinite)")
    x = w[1] / w[0]
    # find the combination of basis rows with e1-coefficient 0, e3-coefficient 1
    B = J.basis
    M = np.array([[B[0][0], B[1][0]], [B[0][2], B[1][2]]])
    if abs(np.linalg.det(M)) <= tol:
        raise TangentAtInfinity("scri point lies on the chart boundary (second label infinite)")
    ab = np.linalg.solve(M, np.array([0.0, 1.0]))
    v = ab @ B
    return float(v[1]), float(x), float(v[3])


def scri_intersection(flag: PNFlag, tol: float = DEFAULT_TOL) -> ScriPoint:
    """The unique scri point J with v1 inside J inside v3.

    Requires v1 not inside I and I not inside v3; geodesics failing this lie
    in structures through the infinity point and never cross scri
    transversally.
    """
    I = infinity_plane(tol)
    if contains(I, flag.v1):
        raise TangentAtInfinity("v1 lies inside the infinity plane")
    if contains(flag.v3, I):
        raise TangentAtInfinity("v3 contains the infinity plane")
    J = join(flag.v1, meet(I, flag.v3))
    if J.dim != 2:
        raise TangentAtInfinity("incidence construction degenerated (dim %d)" % J.dim)
    u, x, y = _chart_coords_of_scri_plane(J, tol)
    return ScriPoint(u, x, y, J)


def alpha_trace_on_beta_plane(v1: Subspace, y0: float, tol: float = DEFAULT_TOL):
    """Trace of a totally null alpha family on the scri surface {y = y0}.

    Writing v1 = span{a e1 + b e2 + c e3 + d e4}, the scri points whose
    plane contains v1 and whose second label is y0 form the line
    x = X0 + L u with X0 = b/a and L = -c/a.  Incidence requires d = c y0;
    a = 0 is the excluded tangent direction.
    """
    if v1.dim != 1 or v1.ambient != 4:
        raise DimensionMismatch("alpha_trace needs a dim-1 subspace of R^4")
    a, b, c, d = v1.vector()
    scale = max(1.0, abs(c) * max(1.0, abs(y0)), abs(d))
    if abs(d - c * y0) > tol * scale:
        raise NotIncident("direction misses the surface y = %g (residual %g)" % (y0, d - c * y0))
    if abs(a) <= tol:
        raise TangentDirection("excluded tangent direction: vanishing leading coefficient")
    return (float(b / a), float(-c / a))


def annihilator(v3: Subspace, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unit-normalized covector annihilating a 3-plane, largest entry +1."""
    if v3.dim != 3 or v3.ambient != 4:
        raise DimensionMismatch("annihilator needs a dim-3 subspace of R^4")
    _, _, vh = np.linalg.svd(v3.basis)
    n = vh[-1]
    i = int(np.argmax(np.abs(n)))
    return n / n[i] + 0.0


def beta_trace_on_alpha_plane(v3: Subspace, x0: float, tol: float = DEFAULT_TOL):
    """Mirror trace: scri points inside v3 with first label x0 form the line
    y = Y0 + M u.

    With annihilating covector n, incidence requires n1 + x0 n2 = 0 and the
    line is read from n3 + y n4 + u n2 = 0; n4 = 0 is the excluded tangent
    direction.
    """
    n = annihilator(v3, tol)
    scale = max(1.0, abs(x0))
    if abs(n[0] + x0 * n[1]) > tol * scale:
        raise NotIncident("3-plane misses the surface x = %g (residual %g)" % (x0, n[0] + x0 * n[1]))
    if abs(n[3]) <= tol:
        raise TangentDirection("excluded tangent direction: vanishing trailing coefficient")
    return (float(-n[2] / n[3]), float(-n[1] / n[3]))


def flag_from_slopes(p: ScriPoint, L: float, M: float, tol: float = DEFAULT_TOL) -> PNFlag:
    """The null geodesic through a scri point with prescribed trace slopes.

    v1 = span{e1 + (x - L u) e2 - L e3 - L y e4} reproduces slope L under
    alpha_trace; v3 is the unique 3-plane containing p.plane whose
    beta_trace slope is M, with annihilator (x M, -M, u M - y, 1).
    """
    u, x, y = p.u, p.x, p.y
    v = np.array([1.0, x - L * u, -L, -L * y])
    n = np.array([x * M, -M, u * M - y, 1.0])
    _, _, vh = np.linalg.svd(n[None, :])
    V3 = span_canonical(vh[1:], tol)
    V1 = span_canonical(v[None, :], tol)
    return PNFlag(V1, V3)


def _line_solution(v: np.ndarray, n: np.ndarray, tol: float):
    """Chart line {X : v in rowspan[X|I2] in ker n} as X(t) = X0 + t N."""
    vscale = float(np.max(np.abs(v)))
    nscale = float(np.max(np.abs(n)))
    if np.hypot(v[2], v[3]) <= tol * max(1.0, vscale):
        raise NoChartIntersection("the alpha family passes through the infinity point")
    if np.hypot(n[0], n[1]) <= tol * max(1.0, nscale):
        raise NoChartIntersection("the beta family passes through the infinity point")
    A = np.array([
        [v[2], 0.0, v[3], 0.0],
        [0.0, v[2], 0.0, v[3]],
        [n[0], n[1], 0.0, 0.0],
        [0.0, 0.0, n[0], n[1]],
    ])
    b = np.array([v[0], v[1], -n[2], -n[3]])
    X0 = (np.linalg.pinv(A, rcond=1e-12) @ b).reshape(2, 2)
    N = np.outer([-v[3], v[2]], [-n[1], n[0]])
    flatN = N.reshape(-1)
    i = int(np.argmax(np.abs(flatN)))
    N = N / flatN[i] + 0.0
    return X0, N


def geodesic_chart_line(flag: PNFlag, tol: float = DEFAULT_TOL):
    """Affine-chart realization of a null geodesic.

    Returns (X0, N) with the geodesic equal to {rowspan[(X0 + t N) | I2]},
    det N = 0 and N normalized so its largest entry is +1.  Raises
    NoChartIntersection when the geodesic stays at infinity.
    """
    v = flag.v1.vector()
    n = annihilator(flag.v3, tol)
    X0, N = _line_solution(v, n, tol)
    return ChartPoint(X0), N
