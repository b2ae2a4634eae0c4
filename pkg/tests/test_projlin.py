import numpy as np
import pytest

from shearfree.errors import DimensionMismatch, ZeroSubspace
from shearfree.projlin import (HPoint, PNFlag, Subspace, contains, join, meet,
                               pairing, span_canonical, zero_subspace)

E = np.eye(4)


def rank_oracle(matrix, tol=1e-10):
    """Independent rank count: forward Gaussian elimination, no echelon
    normalization shared with the library."""
    A = np.array(matrix, dtype=float)
    m, n = A.shape
    rank = 0
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = row + int(np.argmax(np.abs(A[row:, col])))
        if abs(A[piv, col]) <= tol:
            continue
        A[[row, piv]] = A[[piv, row]]
        for j in range(row + 1, m):
            A[j] -= A[j, col] / A[row, col] * A[row]
        row += 1
        rank += 1
    return rank


def in_rowspace_oracle(rows, v, tol=1e-8):
    """Least-squares membership test, independent of the echelon pivots."""
    coef, residual, *_ = np.linalg.lstsq(np.asarray(rows, float).T, np.asarray(v, float), rcond=None)
    return np.linalg.norm(np.asarray(rows).T @ coef - v) <= tol * max(1.0, np.linalg.norm(v))


class TestHPoint:
    def test_normalizes_largest_entry_to_plus_one(self):
        p = HPoint([2.0, -4.0, 1.0])
        assert np.allclose(p.coords, [-0.5, 1.0, -0.25])

    def test_tie_resolved_to_lowest_index(self):
        p = HPoint([-3.0, 3.0, 0.0])
        assert np.allclose(p.coords, [1.0, -1.0, 0.0])

    def test_scale_invariance(self):
        assert HPoint([1.0, 2.0, 3.0]).isclose(HPoint([-2.0, -4.0, -6.0]))

    def test_zero_rejected(self):
        with pytest.raises(ZeroSubspace):
            HPoint([0.0, 0.0, 0.0])

    def test_bad_length(self):
        with pytest.raises(DimensionMismatch):
            HPoint([1.0, 2.0])


class TestSpanCanonical:
    def test_already_canonical(self):
        S = span_canonical([E[0], E[1]])
        assert S.dim == 2
        assert np.array_equal(S.basis, np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=float))

    def test_dependent_rows_collapse(self):
        S = span_canonical([E[0], 2 * E[0]])
        assert S.dim == 1
        assert np.array_equal(S.basis, E[:1])

    def test_rank_matches_elimination_oracle(self):
        rows = [E[0] + E[1], E[0] - E[1], E[0]]
        S = span_canonical(rows)
        assert S.dim == rank_oracle(rows) == 2

    def test_random_rank_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            k = rng.integers(1, 5)
            A = rng.normal(size=(k, 4))
            if rng.random() < 0.4 and k >= 2:
                A[-1] = A[0] * rng.normal() + A[min(1, k - 1)] * rng.normal()
            assert span_canonical(A).dim == rank_oracle(A)

    def test_zero_rows_raise(self):
        with pytest.raises(ZeroSubspace):
            span_canonical([np.zeros(4), 1e-14 * E[1]])

    def test_canonicalization_idempotent_bit_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            S = span_canonical(rng.normal(size=(rng.integers(1, 4), 4)))
            again = S.canonicalized()
            assert np.array_equal(S.basis, again.basis)
            assert S.pivots == again.pivots


class TestMeetJoin:
    def test_meet_common_axis(self):
        got = meet(span_canonical([E[0], E[1]]), span_canonical([E[1], E[2]]))
        assert got.dim == 1
        assert np.array_equal(got.basis, E[1:2])

    def test_meet_disjoint_is_dim_zero(self):
        got = meet(span_canonical([E[0], E[1]]), span_canonical([E[2], E[3]]))
        assert got.dim == 0
        assert got.basis.shape == (0, 4)

    def test_join_axes(self):
        got = join(span_canonical([E[0]]), span_canonical([E[1]]))
        assert np.array_equal(got.basis, E[:2])

    def test_join_idempotent(self):
        U = span_canonical(np.random.default_rng(0).normal(size=(2, 4)))
        assert join(U, U).same_as(U)

    def test_dimension_formula_on_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            U = span_canonical(rng.normal(size=(2, 4)))
            V = span_canonical(rng.normal(size=(2, 4)))
            assert U.dim + V.dim == meet(U, V).dim + join(U, V).dim

    def test_dimension_formula_on_incident_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            shared = rng.normal(size=4)
            U = span_canonical(np.vstack([shared, rng.normal(size=4)]))
            V = span_canonical(np.vstack([shared, rng.normal(size=4)]))
            assert meet(U, V).dim >= 1
            assert U.dim + V.dim == meet(U, V).dim + join(U, V).dim

    def test_join_absorbs_meet(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            shared = rng.normal(size=4)
            U = span_canonical(np.vstack([shared, rng.normal(size=4)]))
            V = span_canonical(np.vstack([shared, rng.normal(size=4)]))
            W = meet(U, V)
            assert W.dim >= 1
            assert join(W, V).same_as(V)

    def test_lattice_containments(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            U = span_canonical(rng.normal(size=(2, 4)))
            V = span_canonical(rng.normal(size=(2, 4)))
            assert contains(join(U, V), U)
            assert contains(U, meet(U, V))


class TestContains:
    def test_examples(self):
        assert contains(span_canonical([E[0], E[1], E[2]]), span_canonical([E[0] + E[1]]))
        assert not contains(span_canonical([E[0], E[1]]), span_canonical([E[2]]))

    def test_ambient_mismatch(self):
        with pytest.raises(DimensionMismatch):
            contains(span_canonical(np.eye(3)[:2]), span_canonical([E[0]]))

    def test_agrees_with_lstsq_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            U = span_canonical(rng.normal(size=(2, 4)))
            if rng.random() < 0.5:
                v = rng.normal(size=2) @ U.basis
            else:
                v = rng.normal(size=4)
            V = span_canonical([v])
            assert contains(U, V) == in_rowspace_oracle(U.basis, V.basis[0])

    def test_nested_random_flags(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            rows = rng.normal(size=(3, 4))
            V1 = span_canonical(rows[:1])
            V2 = span_canonical(rows[:2])
            V3 = span_canonical(rows[:3])
            assert contains(V2, V1) and contains(V3, V2) and contains(V3, V1)


class TestPairing:
    def test_examples(self):
        assert pairing(HPoint([1, 0, 0]), HPoint([0, 0, 1])) == 0.0
        assert abs(pairing(HPoint([1, 2, 3]), HPoint([3, 0, -1]))) < 1e-15
        assert pairing(HPoint([1, 1, 1]), HPoint([1, 1, 1])) == pytest.approx(3.0)

    def test_zero_set_scale_invariant(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            x = rng.normal(size=3)
            y = rng.normal(size=3)
            y[2] = -(x[0] * y[0] + x[1] * y[1]) / x[2]
            for sx, sy in ((2.0, -7.0), (-0.02, 311.0)):
                assert abs(pairing(HPoint(sx * x), HPoint(sy * y))) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pairing(HPoint([1, 0, 0]), HPoint([1, 0, 0, 0]))


class TestPNFlag:
    def test_valid_flag(self):
        PNFlag(span_canonical([E[0]]), span_canonical([E[0], E[1], E[2]]))

    def test_incidence_enforced(self):
        with pytest.raises(DimensionMismatch):
            PNFlag(span_canonical([E[3]]), span_canonical([E[0], E[1], E[2]]))

    def test_dims_enforced(self):
        with pytest.raises(DimensionMismatch):
            PNFlag(span_canonical([E[0], E[1]]), span_canonical([E[0], E[1], E[2]]))


def test_zero_subspace_is_legal_value():
    Z = zero_subspace(4)
    assert Z.dim == 0
    U = span_canonical([E[0]])
    assert contains(U, Z)
    assert join(Z, U).same_as(U)
    assert meet(Z, U).dim == 0
