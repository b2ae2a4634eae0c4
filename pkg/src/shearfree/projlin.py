"""Projective linear algebra over a fixed low-dimensional real vector space.

Subspaces are kept in reduced row echelon form with an explicit pivot
threshold, which makes equality of row spaces a row-wise comparison and
makes canonicalization idempotent at the bit level.  Points of projective
space are normalized so that the largest-magnitude homogeneous coordinate
equals +1 (ties resolved toward the lowest index), which stays stable near
chart boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroSubspace

DEFAULT_TOL = 1e-10


def _as_float_matrix(rows) -> np.ndarray:
    A = np.atleast_2d(np.asarray(rows, dtype=float))
    if A.ndim != 2:
        raise DimensionMismatch("expected a 2-d array of row vectors, got shape %s" % (A.shape,))
    return A


def _rref(A: np.ndarray, tol: float):
    """Reduced row echelon form with partial pivoting.

    Returns (rows, pivots).  Entries below tol are snapped to exact zeros
    and pivots to exact ones, so running the reduction twice reproduces the
    first output bit for bit.
    """
    A = A.astype(float).copy()
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        i = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[i, c]) <= tol:
            continue
        if i != r:
            A[[r, i]] = A[[i, r]]
        piv = A[r, c]
        if piv != 1.0:
            A[r] = A[r] / piv
        A[r, c] = 1.0
        for j in range(m):
            if j != r:
                f = A[j, c]
                if f != 0.0:
                    A[j] = A[j] - f * A[r]
                    A[j, c] = 0.0
        pivots.append(c)
        r += 1
    B = A[:r]
    B[np.abs(B) <= tol] = 0.0
    B = B + 0.0  # clears negative zeros
    return B, tuple(pivots)


def _normalize_homogeneous(v: np.ndarray, tol: float) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    piv = v[i]
    if abs(piv) <= tol:
        raise ZeroSubspace("all homogeneous coordinates below tolerance %g" % tol)
    out = v / piv
    return out + 0.0


@dataclass(frozen=True, eq=False)
class HPoint:
    """A point of RP^2 or RP^3 in canonical homogeneous coordinates.

    The same type doubles as a line of the dual plane; incidence is tested
    with :func:`pairing`.
    """

    coords: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        v = np.asarray(self.coords, dtype=float).reshape(-1)
        if v.size not in (3, 4):
            raise DimensionMismatch("HPoint expects 3 or 4 coordinates, got %d" % v.size)
        v = _normalize_homogeneous(v, self.tol)
        v.flags.writeable = False
        object.__setattr__(self, "coords", v)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def isclose(self, other: "HPoint", atol: float = 1e-9) -> bool:
        """Projective comparison; tolerant of the sign flip that roundoff can
        produce when two entries tie for largest magnitude."""
        if len(self) != len(other):
            return False
        return bool(np.allclose(self.coords, other.coords, atol=atol)
                    or np.allclose(self.coords, -other.coords, atol=atol))

    def __repr__(self):
        return "HPoint(%s)" % np.array2string(self.coords, precision=12, suppress_small=True)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace stored as canonical reduced-row-echelon basis rows.

    dim 0 is a legal value (it arises naturally from intersections); the
    basis is then a (0, ambient) array.
    """

    dim: int
    basis: np.ndarray
    pivots: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.shape[0] != self.dim or len(self.pivots) != self.dim:
            raise DimensionMismatch("basis has %d rows for claimed dim %d" % (B.shape[0], self.dim))
        B = B.copy()
        B.flags.writeable = False
        object.__setattr__(self, "basis", B)

    @property
    def ambient(self) -> int:
        return self.basis.shape[1]

    def canonicalized(self) -> "Subspace":
        """Re-run canonicalization; by construction this is the identity."""
        if self.dim == 0:
            return Subspace(0, np.zeros((0, self.ambient)), (), self.tol)
        rows, piv = _rref(self.basis, self.tol)
        return Subspace(rows.shape[0], rows, piv, self.tol)

    def vector(self) -> np.ndarray:
        """The single basis row of a dim-1 subspace."""
        if self.dim != 1:
            raise DimensionMismatch("vector() requires dim 1, have dim %d" % self.dim)
        return self.basis[0]

    def same_as(self, other: "Subspace") -> bool:
        return (self.ambient == other.ambient and self.dim == other.dim
                and contains(self, other) and contains(other, self))

    def __repr__(self):
        return "Subspace(dim=%d, ambient=%d)" % (self.dim, self.ambient)


def zero_subspace(ambient: int, tol: float = DEFAULT_TOL) -> Subspace:
    return Subspace(0, np.zeros((0, ambient)), (), tol)


def span_canonical(rows, tol: float = DEFAULT_TOL) -> Subspace:
    """Canonical subspace spanned by the given row vectors.

    Raises ZeroSubspace when every row is below tol in magnitude; use
    :func:`zero_subspace` when a trivial result is expected.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _as_float_matrix(rows)
    if A.shape[0] == 0:
        raise ZeroSubspace("no generators supplied")
    B, piv = _rref(A, tol)
    if B.shape[0] == 0:
        raise ZeroSubspace("all generators below tolerance %g" % tol)
    return Subspace(B.shape[0], B, piv, tol)


def _span_or_zero(rows, ambient: int, tol: float) -> Subspace:
    A = _as_float_matrix(rows) if len(rows) else np.zeros((0, ambient))
    if A.shape[0] == 0:
        return zero_subspace(ambient, tol)
    B, piv = _rref(A, tol)
    if B.shape[0] == 0:
        return zero_subspace(ambient, tol)
    return Subspace(B.shape[0], B, piv, tol)


def _check_same_ambient(U: Subspace, V: Subspace):
    if U.ambient != V.ambient:
        raise DimensionMismatch("ambient dimensions differ: %d vs %d" % (U.ambient, V.ambient))


def join(U: Subspace, V: Subspace) -> Subspace:
    """Sum of two subspaces, in canonical form."""
    _check_same_ambient(U, V)
    tol = min(U.tol, V.tol)
    rows = np.vstack([U.basis, V.basis])
    return _span_or_zero(rows, U.ambient, tol)


def meet(U: Subspace, V: Subspace) -> Subspace:
    """Intersection of two subspaces.

    A vector lies in both row spaces iff it can be written a @ U.basis and
    b @ V.basis with the stacked coefficient vector (a, -b) in the null
    space of [U.basis; V.basis]^T.  The null space is read off an SVD.
    """
    _check_same_ambient(U, V)
    tol = min(U.tol, V.tol)
    if U.dim == 0 or V.dim == 0:
        return zero_subspace(U.ambient, tol)
    A = np.vstack([U.basis, V.basis])
    _, s, vh = np.linalg.svd(A.T)
    # null space of A^T: rows of vh past the numerical rank
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * max(1.0, smax)))
    null = vh[rank:]
    if null.shape[0] == 0:
        return zero_subspace(U.ambient, tol)
    rows = null[:, : U.dim] @ U.basis
    return _span_or_zero(rows, U.ambient, tol)


def contains(U: Subspace, V: Subspace) -> bool:
    """True iff every basis row of V lies in the row space of U within tol."""
    _check_same_ambient(U, V)
    if V.dim == 0:
        return True
    if V.dim > U.dim:
        return False
    tol = max(U.tol, V.tol)
    for v in V.basis:
        r = v.copy()
        for row, c in zip(U.basis, U.pivots):
            r = r - r[c] * row
        if np.max(np.abs(r)) > tol * max(1.0, float(np.max(np.abs(v)))):
            return False
    return True


def pairing(x: HPoint, y: HPoint) -> float:
    """Euclidean pairing of the canonical representatives.

    Vanishing (within tolerance) of the pairing is the incidence relation
    between points and dual hyperplanes; the zero set is invariant under
    rescaling the inputs because both are canonicalized first.
    """
    if len(x) != len(y):
        raise DimensionMismatch("pairing needs equal lengths, got %d and %d" % (len(x), len(y)))
    return float(np.dot(x.coords, y.coords))


@dataclass(frozen=True, eq=False)
class PNFlag:
    """An incident (line, hyperplane) flag in the 4-dimensional model space:
    an unparametrized null geodesic."""

    v1: Subspace
    v3: Subspace

    def __post_init__(self):
        if self.v1.dim != 1 or self.v3.dim != 3:
            raise DimensionMismatch("flag needs dims (1, 3), got (%d, %d)" % (self.v1.dim, self.v3.dim))
        if self.v1.ambient != 4 or self.v3.ambient != 4:
            raise DimensionMismatch("flags live in a 4-dimensional ambient space")
        if not contains(self.v3, self.v1):
            raise DimensionMismatch("flag violates incidence: v1 not inside v3")
