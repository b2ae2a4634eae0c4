"""From scattering data on scri to a null geodesic family in the chart.

Scattering data assigns to each point of a crossection u = s(x, y) a pair
of slopes (L0, M0).  Solving the slope-transport pair

    L_u + L L_x = sigma(u, x, y, L)      on each {y = const} surface,
    M_u + M M_y = sigma~(u, x, y, M)     on each {x = const} surface,

extends the data to a field on a scri box; each field point then determines
a null geodesic of the chart through the incidence construction, and the
family is checked for integrability: the finite-difference shear scalars
and the Frobenius three-vectors of the two associated plane distributions
must vanish together.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import klein
from .burgers import (DEFAULT_BOUND, DEFAULT_STEP, CauchyCurve, Forcing,
                      caustic_detect, solve_burgers, transversality_check)
from .errors import (CausticReached, FoliationFailure, IllConditioned,
                     TransversalityViolation)


# ---------------------------------------------------------------------------
# scattering data
# ---------------------------------------------------------------------------

@dataclass
class ScatteringData:
    """Slope data (L0, M0) on the crossection u = crossection(x, y).

    All three callables take (x, y) and must broadcast over numpy arrays.
    """

    crossection: Callable
    L0: Callable
    M0: Callable

    def u_of(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.crossection(x, y), dtype=float),
                               np.broadcast(x, y).shape).copy()

    def beta_curve(self, y: float, x_range, n: int = 513) -> CauchyCurve:
        """Cauchy curve carried by the surface {y = const}: (u, x) data."""
        return CauchyCurve.graph(lambda x: self.crossection(x, y),
                                 lambda x: self.L0(x, y), x_range, n=n)

    def alpha_curve(self, x: float, y_range, n: int = 513) -> CauchyCurve:
        """Mirror curve on {x = const}: (u, y) data."""
        return CauchyCurve.graph(lambda y: self.crossection(x, y),
                                 lambda y: self.M0(x, y), y_range, n=n)


def _as_forcing_family(f):
    if f is None:
        f = Forcing.zero()
    if isinstance(f, Forcing):
        return lambda _slice_value: f, f.is_zero
    return f, False


# ---------------------------------------------------------------------------
# the solved slope pair
# ---------------------------------------------------------------------------

def _flat_shoot(crossection, slope0, u, w, frozen, n_iter=78):
    """Vectorized inversion of w0 + (u - s(w0)) * slope0(w0) = w.

    crossection and slope0 take (w0, frozen); all arguments broadcast.
    Returns the slope at the query points.
    """
    u, w, frozen = np.broadcast_arrays(np.asarray(u, float), np.asarray(w, float),
                                       np.asarray(frozen, float))

    def F(w0):
        return w0 + (u - crossection(w0, frozen)) * slope0(w0, frozen) - w

    half = np.ones(u.shape)
    a = w - half
    b = w + half
    with np.errstate(all="ignore"):
        fa, fb = F(a), F(b)
        for _ in range(60):
            need = ~((fa < 0) & (fb > 0)) & ~((fa > 0) & (fb < 0))
            if not np.any(need):
                break
            half = np.where(need, 2.0 * half, half)
            a = np.where(need, w - half, a)
            b = np.where(need, w + half, b)
            fa = np.where(need, F(a), fa)
            fb = np.where(need, F(b), fb)
        else:
            raise CausticReached("flat characteristic bracketing failed")
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        fm = F(m)
        same = (fm < 0) == (fa < 0)
        a = np.where(same, m, a)
        fa = np.where(same, fm, fa)
        b = np.where(same, b, m)
    w0 = 0.5 * (a + b)
    h = 1e-9
    for _ in range(3):
        f0 = F(w0)
        der = (F(w0 + h) - f0) / h
        ok = np.isfinite(der) & (der != 0)
        w0 = np.where(ok, w0 - f0 / np.where(ok, der, 1.0), w0)
    # orientation guard: the characteristic map from the curve level to the
    # query level must not have folded along the way
    hc = 1e-6
    der_u = (F(w0 + hc) - F(w0 - hc)) / (2 * hc)
    u_c = crossection(w0, frozen)

    def at_curve(w0s):
        return w0s + (u_c - crossection(w0s, frozen)) * slope0(w0s, frozen)

    der_c = (at_curve(w0 + hc) - at_curve(w0 - hc)) / (2 * hc)
    if np.any(der_u * der_c <= 0.0):
        bad = np.argmax(der_u * der_c <= 0.0)
        raise CausticReached(
            "characteristic map folded before (u, w) = (%g, %g)"
            % (u.ravel()[bad], w.ravel()[bad]))
    return slope0(w0, frozen)


class KappaField:
    """The solved pair of slope fields L(u, x, y) and M(u, x, y).

    Evaluation away from the sample grid goes back to the solver: flat
    problems re-invert the characteristic map (machine accurate anywhere in
    the box); forced problems evaluate the tabulated per-surface families
    and interpolate across surfaces with a local cubic.
    """

    def __init__(self, data, domain, u_grid, x_grid, y_grid, L_vals, M_vals,
                 L_solutions, M_solutions, f_family, ft_family, flat_L, flat_M):
        self.data = data
        self.domain = domain
        self.u_grid = u_grid
        self.x_grid = x_grid
        self.y_grid = y_grid
        self.L_vals = L_vals
        self.M_vals = M_vals
        self._L_solutions = L_solutions
        self._M_solutions = M_solutions
        self._f_family = f_family
        self._ft_family = ft_family
        self._flat_L = flat_L
        self._flat_M = flat_M

    # -- evaluation ---------------------------------------------------------

    def L(self, u, x, y):
        u, x, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(x, float),
                                      np.asarray(y, float))
        if self._flat_L:
            return _flat_shoot(lambda w0, fz: self.data.crossection(w0, fz),
                               lambda w0, fz: self.data.L0(w0, fz), u, x, y)
        return self._sliced_eval(self._L_solutions, self.y_grid, u, x, y)

    def M(self, u, x, y):
        u, x, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(x, float),
                                      np.asarray(y, float))
        if self._flat_M:
            return _flat_shoot(lambda w0, fz: self.data.crossection(fz, w0),
                               lambda w0, fz: self.data.M0(fz, w0), u, y, x)
        return self._sliced_eval(self._M_solutions, self.x_grid, u, y, x)

    def _sliced_eval(self, solutions, slice_grid, u, w, frozen):
        out = np.empty(u.shape)
        uf, wf, ff = u.ravel(), w.ravel(), frozen.ravel()
        res = np.empty(uf.shape)
        for fz in np.unique(ff):
            mask = ff == fz
            j = int(np.searchsorted(slice_grid, fz))
            exact = next((c for c in (j - 1, j) if 0 <= c < len(slice_grid)
                          and abs(slice_grid[c] - fz) <= 1e-12), None)
            if exact is not None:
                res[mask] = solutions[exact].eval_batch(uf[mask], wf[mask])
                continue
            k = min(max(j - 1, 1), len(slice_grid) - 3)
            idx = [k - 1, k, k + 1, k + 2]
            vals = np.stack([solutions[i].eval_batch(uf[mask], wf[mask]) for i in idx])
            wgt = np.ones(4)
            for a in range(4):
                for b in range(4):
                    if a != b:
                        wgt[a] *= (fz - slice_grid[idx[b]]) / (slice_grid[idx[a]] - slice_grid[idx[b]])
            res[mask] = wgt @ vals
        out.ravel()[:] = res
        return out

    # -- diagnostics --------------------------------------------------------

    def slice_residual_max(self, h: float = 1e-3, inset: float = 0.05,
                           max_slices: int = 21):
        """Max centered PDE residual of both fields.

        Residuals are evaluated surface by surface: the frozen coordinate
        runs over the solved grid (where forced evaluation is exact) while
        the (u, transported) stencil points move freely inside the box.
        """
        (u_lo, u_hi), (x_lo, x_hi), (y_lo, y_hi) = self.domain
        du, dx, dy = inset * (u_hi - u_lo), inset * (x_hi - x_lo), inset * (y_hi - y_lo)
        uu = np.linspace(u_lo + max(du, 2 * h), u_hi - max(du, 2 * h), min(9, len(self.u_grid)))
        xx = np.linspace(x_lo + dx, x_hi - dx, min(9, len(self.x_grid)))
        yy = np.linspace(y_lo + dy, y_hi - dy, min(9, len(self.y_grid)))

        def thin(grid_vals):
            stride = max(1, len(grid_vals) // max_slices)
            return grid_vals[::stride]

        worst_L = 0.0
        worst_M = 0.0
        for y in thin(self.y_grid):
            U, X = np.meshgrid(uu, xx, indexing="ij")
            Y = np.full(U.shape, y)
            f = self._f_family(y)
            L = self.L(U, X, Y)
            Lu = (self.L(U + h, X, Y) - self.L(U - h, X, Y)) / (2 * h)
            Lx = (self.L(U, X + h, Y) - self.L(U, X - h, Y)) / (2 * h)
            worst_L = max(worst_L, float(np.abs(Lu + L * Lx - f.sigma(U, X, L)).max()))
        for x in thin(self.x_grid):
            U, Y = np.meshgrid(uu, yy, indexing="ij")
            X = np.full(U.shape, x)
            ft = self._ft_family(x)
            M = self.M(U, X, Y)
            Mu = (self.M(U + h, X, Y) - self.M(U - h, X, Y)) / (2 * h)
            My = (self.M(U, X, Y + h) - self.M(U, X, Y - h)) / (2 * h)
            worst_M = max(worst_M, float(np.abs(Mu + M * My - ft.sigma(U, Y, M)).max()))
        return worst_L, worst_M


def solve_scattering(data: ScatteringData, f, ftilde, domain,
                     grid=(21, 21, 21), curve_n: int = 513, pad: float = 0.6,
                     step: float = DEFAULT_STEP, bound: float = DEFAULT_BOUND,
                     threads: int = 1) -> KappaField:
    """Extend scattering data to a slope pair on the scri box `domain`.

    domain is ((u_lo, u_hi), (x_lo, x_hi), (y_lo, y_hi)).  f and ftilde are
    Forcing values (or callables slice-coordinate -> Forcing); the L
    equation is solved on every {y = const} surface of the y grid and the M
    equation on every {x = const} surface.  Raises TransversalityViolation
    when some Cauchy curve is tangent to its own datum, and CausticReached
    (annotated with the surface) when characteristics cross inside the box.
    """
    (u_lo, u_hi), (x_lo, x_hi), (y_lo, y_hi) = [tuple(map(float, r)) for r in domain]
    n_u, n_x, n_y = grid
    u_grid = np.linspace(u_lo, u_hi, n_u)
    x_grid = np.linspace(x_lo, x_hi, n_x)
    y_grid = np.linspace(y_lo, y_hi, n_y)
    f_family, f_zero = _as_forcing_family(f)
    ft_family, ft_zero = _as_forcing_family(ftilde)

    def solve_slice(side, value):
        if side == "L":
            curve = data.beta_curve(value, (x_lo - pad, x_hi + pad), n=curve_n)
            forcing = f_family(value)
        else:
            curve = data.alpha_curve(value, (y_lo - pad, y_hi + pad), n=curve_n)
            forcing = ft_family(value)
        margin = transversality_check(curve)
        if margin <= 0.0:
            raise TransversalityViolation(
                "Cauchy curve tangent to its datum on the %s surface at %g" % (side, value))
        try:
            solution = solve_burgers(forcing, curve, (u_lo, u_hi), step=step, bound=bound)
        except CausticReached as exc:
            raise CausticReached(
                "%s equation on the surface at %g: %s" % (side, value, exc),
                u_star=exc.u_star, where=exc.where) from exc
        crossing = caustic_detect(solution, region=(u_lo, u_hi))
        if crossing is not None:
            raise CausticReached(
                "%s equation on the surface at %g: characteristics cross at u* = %g"
                % (side, value, crossing[0]), u_star=crossing[0], where=crossing)
        return solution

    jobs = [("L", y) for y in y_grid] + [("M", x) for x in x_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solutions = list(pool.map(lambda sv: solve_slice(*sv), jobs))
    else:
        solutions = [solve_slice(*sv) for sv in jobs]
    L_solutions = solutions[: len(y_grid)]
    M_solutions = solutions[len(y_grid):]

    kappa = KappaField(data, ((u_lo, u_hi), (x_lo, x_hi), (y_lo, y_hi)),
                       u_grid, x_grid, y_grid, None, None,
                       L_solutions, M_solutions, f_family, ft_family, f_zero, ft_zero)

    U, X, Y = np.meshgrid(u_grid, x_grid, y_grid, indexing="ij")
    try:
        kappa.L_vals = kappa.L(U, X, Y)
        kappa.M_vals = kappa.M(U, X, Y)
    except CausticReached as exc:
        raise CausticReached("caustic inside the requested box: %s" % exc,
                             u_star=exc.u_star, where=exc.where) from exc
    return kappa


# ---------------------------------------------------------------------------
# the geodesic family
# ---------------------------------------------------------------------------

def _phi_n_arrays(L, M, u, x, y, tol=1e-12):
    """Base points and directions of the chart geodesics, batched.

    Columns of the 4x4 system constrain rowspan [X | I2] to contain the
    alpha direction (1, x - L u, -L, -L y) and to lie inside the 3-space
    annihilated by (x M, -M, u M - y, 1); the minimum-norm solution picks a
    base point orthogonal to the line direction.
    """
    sh = u.shape
    one = np.ones(sh)
    v = np.stack([one, x - L * u, -L, -L * y], axis=-1)
    n = np.stack([x * M, -M, u * M - y, one], axis=-1)
    A = np.zeros(sh + (4, 4))
    A[..., 0, 0] = v[..., 2]
    A[..., 0, 2] = v[..., 3]
    A[..., 1, 1] = v[..., 2]
    A[..., 1, 3] = v[..., 3]
    A[..., 2, 0] = n[..., 0]
    A[..., 2, 1] = n[..., 1]
    A[..., 3, 2] = n[..., 0]
    A[..., 3, 3] = n[..., 1]
    b = np.stack([v[..., 0], v[..., 1], -n[..., 2], -n[..., 3]], axis=-1)
    X0 = (np.linalg.pinv(A, rcond=1e-12) @ b[..., None])[..., 0].reshape(sh + (2, 2))
    Ncol = np.stack([-v[..., 3], v[..., 2]], axis=-1)
    Nrow = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    N = Ncol[..., :, None] * Nrow[..., None, :]
    flat = N.reshape(sh + (4,))
    idx = np.argmax(np.abs(flat), axis=-1)
    piv = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    if np.any(np.abs(piv) <= tol):
        raise FoliationFailure("a geodesic direction degenerated (slope at the excluded value)")
    return X0, N / piv[..., None, None]


@dataclass
class Congruence:
    """A parametrized family Phi(u, x, y, t) = X0 + t N of chart geodesics."""

    kappa: KappaField
    t_range: tuple = (-1.0, 1.0)
    twist: Optional[Callable] = None

    def phi_n_batch(self, u, x, y):
        """Vectorized (X0, N) over arrays of scri coordinates."""
        u, x, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(x, float),
                                      np.asarray(y, float))
        L = self.kappa.L(u, x, y)
        M = self.kappa.M(u, x, y)
        X0, N = _phi_n_arrays(L, M, u, x, y)
        if self.twist is not None:
            th = np.asarray(self.twist(u, x, y), dtype=float)
            c, s = np.cos(th), np.sin(th)
            R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
            N = R @ N
        return X0, N

    def phi(self, u: float, x: float, y: float, t: float) -> klein.ChartPoint:
        X0, N = self.phi_n_batch(np.asarray(u, float), np.asarray(x, float), np.asarray(y, float))
        return klein.ChartPoint(X0 + t * N)

    def tangent(self, u: float, x: float, y: float) -> np.ndarray:
        """The null direction k = dPhi/dt (independent of t)."""
        _, N = self.phi_n_batch(np.asarray(u, float), np.asarray(x, float), np.asarray(y, float))
        return N

    def flag_at(self, u: float, x: float, y: float):
        """The incident pair of the geodesic through (u, x, y), through the
        pointwise reference construction."""
        L = float(self.kappa.L(np.asarray(u, float), np.asarray(x, float), np.asarray(y, float)))
        M = float(self.kappa.M(np.asarray(u, float), np.asarray(x, float), np.asarray(y, float)))
        return klein.flag_from_slopes(klein.scri_point(u, x, y), L, M)

    def with_twist(self, angle: Callable) -> "Congruence":
        """A control family with the directions rotated pointwise; rotation
        preserves nullity of the tangent but breaks integrability."""
        return Congruence(self.kappa, self.t_range, twist=angle)


def _bisect_det_zero(cong, grids, det, h):
    """Refine a det sign change on the check grid to a point estimate.

    Walks the grid for an axis-adjacent pair with opposite signs and bisects
    the connecting segment; falls back to the smallest-magnitude grid point
    when the zero set only touches the grid."""
    gu, gx, gy, gt = grids
    axes_vals = (gu, gx, gy, gt)
    idx = np.argwhere(det < 0.0)
    pos = det > 0.0
    for i in map(tuple, idx):
        for axis in range(4):
            for step in (-1, 1):
                j = list(i)
                j[axis] += step
                if not (0 <= j[axis] < det.shape[axis]):
                    continue
                if not pos[tuple(j)]:
                    continue
                a = np.array([axes_vals[k][i[k]] for k in range(4)])
                b = np.array([axes_vals[k][j[k]] for k in range(4)])

                def det_at(point):
                    g = congruence_jacobian_det(
                        cong, ([point[0]], [point[1]], [point[2]], [point[3]]), h=h)
                    return float(g.ravel()[0])

                fa = det_at(a)
                for _ in range(40):
                    m = 0.5 * (a + b)
                    fm = det_at(m)
                    if (fm < 0) == (fa < 0):
                        a, fa = m, fm
                    else:
                        b = m
                return tuple(float(v) for v in 0.5 * (a + b))
    flat = int(np.argmin(np.abs(det)))
    i = np.unravel_index(flat, det.shape)
    return tuple(float(axes_vals[k][i[k]]) for k in range(4))


def verify_foliation(cong: Congruence, check_grid=(6, 6, 6, 3), h: float = 1e-3):
    """Raise FoliationFailure (with a bisected locus) when det of the family
    Jacobian vanishes or changes sign over the domain box."""
    (u_lo, u_hi), (x_lo, x_hi), (y_lo, y_hi) = cong.kappa.domain
    gu = np.linspace(u_lo, u_hi, check_grid[0])
    gx = np.linspace(x_lo, x_hi, check_grid[1])
    gy = np.linspace(y_lo, y_hi, check_grid[2])
    gt = np.linspace(cong.t_range[0], cong.t_range[1], check_grid[3])
    det = congruence_jacobian_det(cong, (gu, gx, gy, gt), h=h)
    if np.any(det == 0.0) or (det.min() < 0.0 < det.max()):
        where = _bisect_det_zero(cong, (gu, gx, gy, gt), det, h)
        raise FoliationFailure("det(jac) changes sign inside the box", where=where)


def build_congruence(kappa: KappaField, t_range=(-1.0, 1.0),
                     check_grid=(6, 6, 6, 3), h: float = 1e-3) -> Congruence:
    """Assemble the geodesic family of a solved slope pair and verify that it
    foliates: det of the parameter Jacobian must keep one sign over the box.

    Raises FoliationFailure with a bisected locus estimate otherwise.
    """
    cong = Congruence(kappa, (float(t_range[0]), float(t_range[1])))
    verify_foliation(cong, check_grid=check_grid, h=h)
    return cong


def _directional_derivatives(cong: Congruence, U, X, Y, h: float, richardson: bool = True):
    """Richardson-refined central derivatives of (X0, N) along u, x, y."""
    dX, dN = [], []
    shifts = [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)]
    for e in shifts:
        Xp, Np_ = cong.phi_n_batch(U + e[0], X + e[1], Y + e[2])
        Xm, Nm = cong.phi_n_batch(U - e[0], X - e[1], Y - e[2])
        d1x = (Xp - Xm) / (2 * h)
        d1n = (Np_ - Nm) / (2 * h)
        if richardson:
            Xp, Np_ = cong.phi_n_batch(U + e[0] / 2, X + e[1] / 2, Y + e[2] / 2)
            Xm, Nm = cong.phi_n_batch(U - e[0] / 2, X - e[1] / 2, Y - e[2] / 2)
            d2x = (Xp - Xm) / h
            d2n = (Np_ - Nm) / h
            d1x = (4 * d2x - d1x) / 3
            d1n = (4 * d2n - d1n) / 3
        dX.append(d1x)
        dN.append(d1n)
    return dX, dN


def congruence_jacobian_det(cong: Congruence, grid, h: float = 1e-3) -> np.ndarray:
    """det of the Jacobian of Phi with respect to (u, x, y, t) on a grid."""
    gu, gx, gy, gt = grid
    U, X, Y = np.meshgrid(gu, gx, gy, indexing="ij")
    _, Nc = cong.phi_n_batch(U, X, Y)
    dX, dN = _directional_derivatives(cong, U, X, Y, h)
    out = np.empty(U.shape + (len(gt),))
    for k, t in enumerate(gt):
        jac = np.zeros(U.shape + (4, 4))
        for i in range(3):
            jac[..., :, i] = (dX[i] + t * dN[i]).reshape(U.shape + (4,))
        jac[..., :, 3] = Nc.reshape(U.shape + (4,))
        out[..., k] = np.linalg.det(jac)
    return out


def _g_form(A, B):
    """Polarization of the chart quadratic form det on 2x2 displacements."""
    return (A[..., 0, 0] * B[..., 1, 1] + A[..., 1, 1] * B[..., 0, 0]
            - A[..., 0, 1] * B[..., 1, 0] - A[..., 1, 0] * B[..., 0, 1])


def _null_frames(N, pivot=None):
    """The two null directions m, m' of the screen space of a rank-1 tangent.

    N factors as column x row through its largest entry (the pivot rule);
    m keeps the column and rotates the row, m' rotates the column and keeps
    the row.  Both are null, orthogonal to N, and independent modulo N.
    A frozen pivot index array may be supplied so that frames vary smoothly
    under finite-difference shifts.
    """
    sh = N.shape[:-2]
    flat = N.reshape(sh + (4,))
    if pivot is None:
        pivot = np.argmax(np.abs(flat), axis=-1)
    i0 = pivot // 2
    j0 = pivot % 2
    col = np.take_along_axis(N, np.broadcast_to(j0[..., None, None], sh + (2, 1)), axis=-1)[..., 0]
    row = np.take_along_axis(N, np.broadcast_to(i0[..., None, None], sh + (1, 2)), axis=-2)[..., 0, :]
    piv = np.take_along_axis(flat, pivot[..., None], axis=-1)[..., 0]
    alpha = col / piv[..., None]
    beta = row
    rot = lambda w: np.stack([-w[..., 1], w[..., 0]], axis=-1)
    m = alpha[..., :, None] * rot(beta)[..., None, :]
    mp = rot(alpha)[..., :, None] * beta[..., None, :]
    return m, mp, pivot


def _wedge3_norm(a, b, c):
    """Norm of the decomposable three-vector a ^ b ^ c in R^4: root sum of
    squares of the four 3x3 minors of the stacked rows."""
    rows = np.stack([a, b, c], axis=-2)
    total = np.zeros(a.shape[:-1])
    for drop in range(4):
        cols = [i for i in range(4) if i != drop]
        total = total + np.linalg.det(rows[..., cols]) ** 2
    return np.sqrt(total)


@dataclass
class ShearReport:
    """Pointwise integrability diagnostics of a geodesic family."""

    grid: tuple
    sigma: np.ndarray        # (..., 2): the two screen-space shear scalars
    shear_norm: np.ndarray   # (...): hypot of the two scalars
    frobenius: np.ndarray    # (..., 2): norms of the two bracket three-vectors
    det_jac: np.ndarray

    @property
    def max_shear(self) -> float:
        return float(np.max(self.shear_norm))

    @property
    def max_frobenius(self) -> float:
        return float(np.max(self.frobenius))

    @property
    def min_abs_det(self) -> float:
        return float(np.min(np.abs(self.det_jac)))


def shear_report(cong: Congruence, grid, h: float = 1e-3, richardson: bool = True,
                 metric_scale: float = 1.0, cond_limit: float = 1e12) -> ShearReport:
    """Finite-difference shear and Frobenius diagnostics on a grid.

    grid is (u values, x values, y values, t values).  At every point the
    spacetime derivative of the tangent field is assembled by the chain
    rule (parameter derivatives composed with the inverse family Jacobian,
    flat connection); the report carries g(grad_m k, m) and
    g(grad_m' k, m') for the two canonical screen null directions, plus the
    norms of [k, m] ^ k ^ m and [k, m'] ^ k ^ m'.  All reported quantities
    scale covariantly with k and with the metric normalization.
    """
    gu, gx, gy, gt = [np.asarray(g, dtype=float) for g in grid]
    U, X, Y = np.meshgrid(gu, gx, gy, indexing="ij")
    base = U.shape
    _, Nc = cong.phi_n_batch(U, X, Y)
    dX, dN = _directional_derivatives(cong, U, X, Y, h, richardson)

    # frames at the center, with the pivot frozen for the shifted evaluations
    m_c, mp_c, pivot = _null_frames(Nc)
    dm, dmp = [], []
    shifts = [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)]
    for e in shifts:
        _, Np_ = cong.phi_n_batch(U + e[0], X + e[1], Y + e[2])
        _, Nm = cong.phi_n_batch(U - e[0], X - e[1], Y - e[2])
        m_p, mp_p, _ = _null_frames(Np_, pivot)
        m_m, mp_m, _ = _null_frames(Nm, pivot)
        d1m = (m_p - m_m) / (2 * h)
        d1mp = (mp_p - mp_m) / (2 * h)
        if richardson:
            _, Np_ = cong.phi_n_batch(U + e[0] / 2, X + e[1] / 2, Y + e[2] / 2)
            _, Nm = cong.phi_n_batch(U - e[0] / 2, X - e[1] / 2, Y - e[2] / 2)
            m_p, mp_p, _ = _null_frames(Np_, pivot)
            m_m, mp_m, _ = _null_frames(Nm, pivot)
            d1m = (4 * (m_p - m_m) / h - d1m) / 3
            d1mp = (4 * (mp_p - mp_m) / h - d1mp) / 3
        dm.append(d1m)
        dmp.append(d1mp)

    nt = len(gt)
    sigma = np.empty(base + (nt, 2))
    frob = np.empty(base + (nt, 2))
    dets = np.empty(base + (nt,))
    kvec = Nc.reshape(base + (4,))
    for kidx, t in enumerate(gt):
        jac = np.zeros(base + (4, 4))
        dparam_k = np.zeros(base + (4, 4))
        dparam_m = np.zeros(base + (4, 4))
        dparam_mp = np.zeros(base + (4, 4))
        for i in range(3):
            jac[..., :, i] = (dX[i] + t * dN[i]).reshape(base + (4,))
            dparam_k[..., :, i] = dN[i].reshape(base + (4,))
            dparam_m[..., :, i] = dm[i].reshape(base + (4,))
            dparam_mp[..., :, i] = dmp[i].reshape(base + (4,))
        jac[..., :, 3] = kvec
        det = np.linalg.det(jac)
        dets[..., kidx] = det
        scale = np.abs(jac).max()
        if np.any(np.abs(det) * cond_limit < scale ** 4):
            raise IllConditioned("family Jacobian nearly singular at t = %g" % t)
        inv = np.linalg.inv(jac)
        Dk = dparam_k @ inv
        Dm = dparam_m @ inv
        Dmp = dparam_mp @ inv
        mvec = m_c.reshape(base + (4,))
        mpvec = mp_c.reshape(base + (4,))
        grad_m_k = (Dk @ mvec[..., None])[..., 0]
        grad_mp_k = (Dk @ mpvec[..., None])[..., 0]
        s1 = metric_scale * _g_form(grad_m_k.reshape(base + (2, 2)), m_c)
        s2 = metric_scale * _g_form(grad_mp_k.reshape(base + (2, 2)), mp_c)
        sigma[..., kidx, 0] = s1
        sigma[..., kidx, 1] = s2
        br_m = (Dm @ kvec[..., None])[..., 0] - grad_m_k
        br_mp = (Dmp @ kvec[..., None])[..., 0] - grad_mp_k
        frob[..., kidx, 0] = _wedge3_norm(br_m, kvec, mvec)
        frob[..., kidx, 1] = _wedge3_norm(br_mp, kvec, mpvec)
    return ShearReport(grid=(gu, gx, gy, gt), sigma=sigma,
                       shear_norm=np.hypot(sigma[..., 0], sigma[..., 1]),
                       frobenius=frob, det_jac=dets)


def frobenius_check(cong: Congruence, grid, h: float = 1e-3, richardson: bool = True):
    """Maxima of the two bracket three-vector norms over the grid; both must
    vanish (with the shear scalars) exactly when the family is integrable."""
    rep = shear_report(cong, grid, h=h, richardson=richardson)
    return (float(np.max(rep.frobenius[..., 0])), float(np.max(rep.frobenius[..., 1])))


# ---------------------------------------------------------------------------
# round trips and rank diagnostics
# ---------------------------------------------------------------------------

def scattering_trace_errors(cong: Congruence, n: int = 15):
    """Reconstruct the scattering data from the family at its crossection.

    For an (x, y) grid on the crossection, rebuild each flag pointwise, send
    it back to scri through the incidence construction, and read the slopes
    from the two trace lines.  Returns the max absolute errors
    (scri point, L, M).
    """
    kappa = cong.kappa
    (_, _), (x_lo, x_hi), (y_lo, y_hi) = kappa.domain
    xs = np.linspace(x_lo, x_hi, n)
    ys = np.linspace(y_lo, y_hi, n)
    err_pt = 0.0
    err_L = 0.0
    err_M = 0.0
    for x in xs:
        for y in ys:
            u = float(kappa.data.u_of(x, y))
            flag = cong.flag_at(u, x, y)
            sp = klein.scri_intersection(flag)
            err_pt = max(err_pt, abs(sp.u - u), abs(sp.x - x), abs(sp.y - y))
            _, L = klein.alpha_trace_on_beta_plane(flag.v1, y)
            _, M = klein.beta_trace_on_alpha_plane(flag.v3, x)
            err_L = max(err_L, abs(L - float(kappa.data.L0(x, y))))
            err_M = max(err_M, abs(M - float(kappa.data.M0(x, y))))
    return err_pt, err_L, err_M


def section_rank_profile(kappa: KappaField, grid=None, h: float = 1e-4):
    """Singular values of the numeric differentials of the two section
    components over a grid.

    The alpha component is charted by (x - L u, -L, -L y) and the beta
    component by (x M, -M, u M - y); both should have rank exactly two as
    maps of (u, x, y).  Returns arrays of shape (..., 3) of singular values
    for each component.
    """
    if grid is None:
        gu, gx, gy = kappa.u_grid, kappa.x_grid, kappa.y_grid
    else:
        gu, gx, gy = grid
    U, X, Y = np.meshgrid(gu, gx, gy, indexing="ij")
    base = U.shape

    def params(u, x, y):
        L = kappa.L(u, x, y)
        M = kappa.M(u, x, y)
        k1 = np.stack([x - L * u, -L, -L * y], axis=-1)
        k3 = np.stack([x * M, -M, u * M - y], axis=-1)
        return k1, k3

    J1 = np.empty(base + (3, 3))
    J3 = np.empty(base + (3, 3))
    shifts = [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)]
    for i, e in enumerate(shifts):
        k1p, k3p = params(U + e[0], X + e[1], Y + e[2])
        k1m, k3m = params(U - e[0], X - e[1], Y - e[2])
        J1[..., :, i] = (k1p - k1m) / (2 * h)
        J3[..., :, i] = (k3p - k3m) / (2 * h)
    s1 = np.linalg.svd(J1, compute_uv=False)
    s3 = np.linalg.svd(J3, compute_uv=False)
    return s1, s3
