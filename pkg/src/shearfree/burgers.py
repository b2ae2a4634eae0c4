"""Slope-transport solvers: flat and forced inviscid Burgers equations.

The unknown L(u, x) is the slope field of a line-valued map that is
constant along each of the lines it assigns.  Flat solutions are evaluated
by inverting the straight-line characteristic map x = x0 + u L0(x0);
forced solutions integrate the characteristic system

    x' = p,    p' = sigma(u, x, p)

with a classical fixed-step fourth-order scheme and invert the resulting
family by bracketed bisection over the Cauchy-curve parameter.  Caustics
(characteristic crossings) are detected, located by bisection, and
reported rather than crossed: no weak solutions are attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (BlowUp, CausticReached, DegenerateCurve, IllConditioned,
                     ZeroSubspace)
from .projlin import HPoint

DEFAULT_STEP = 1e-3
DEFAULT_BOUND = 1e6


# ---------------------------------------------------------------------------
# forcing terms
# ---------------------------------------------------------------------------

def _coef(c, u, w):
    if callable(c):
        return np.asarray(c(u, w), dtype=float)
    return float(c)


@dataclass(frozen=True)
class Forcing:
    """A forcing term sigma(u, x, p) = A0 + A1 p + A2 p^2 + A3 p^3.

    Each coefficient is a constant or a callable of (u, x) that broadcasts
    over numpy arrays.  The representation is cubic in the slope by
    construction: there is no way to express a quartic term.
    """

    a0: object = 0.0
    a1: object = 0.0
    a2: object = 0.0
    a3: object = 0.0

    @classmethod
    def zero(cls) -> "Forcing":
        return cls()

    @classmethod
    def from_coefficients(cls, coeffs) -> "Forcing":
        """Build from a sequence (A0, A1, ...) of at most four coefficients."""
        coeffs = list(coeffs)
        if len(coeffs) > 4:
            raise ValueError(
                "forcing must be cubic or lower in the slope; got %d coefficients" % len(coeffs))
        coeffs = coeffs + [0.0] * (4 - len(coeffs))
        return cls(*coeffs)

    @property
    def is_zero(self) -> bool:
        return all(not callable(c) and float(c) == 0.0 for c in (self.a0, self.a1, self.a2, self.a3))

    def sigma(self, u, w, p):
        """Evaluate sigma(u, w, p); all arguments broadcast."""
        a0 = _coef(self.a0, u, w)
        a1 = _coef(self.a1, u, w)
        a2 = _coef(self.a2, u, w)
        a3 = _coef(self.a3, u, w)
        return ((a3 * p + a2) * p + a1) * p + a0

    def __call__(self, u, w, p):
        return self.sigma(u, w, p)


# ---------------------------------------------------------------------------
# Cauchy data
# ---------------------------------------------------------------------------

class CauchyCurve:
    """A sampled curve s -> (u(s), x(s)) carrying a slope datum s -> L(s).

    Both callables must accept numpy arrays.  The curve must be an
    embedding at the sample resolution.
    """

    def __init__(self, gamma: Callable, datum: Callable, n: int = 513,
                 s_range=(0.0, 1.0), tol: float = 1e-12):
        if n < 8:
            raise DegenerateCurve("need at least 8 samples, got %d" % n)
        self.gamma = gamma
        self.datum = datum
        self.n = int(n)
        self.s_range = (float(s_range[0]), float(s_range[1]))
        self.tol = float(tol)
        s = np.linspace(self.s_range[0], self.s_range[1], self.n)
        u, x = gamma(s)
        u = np.broadcast_to(np.asarray(u, dtype=float), s.shape).copy()
        x = np.broadcast_to(np.asarray(x, dtype=float), s.shape).copy()
        L = np.broadcast_to(np.asarray(datum(s), dtype=float), s.shape).copy()
        step = np.hypot(np.diff(u), np.diff(x))
        if np.any(step <= tol):
            raise DegenerateCurve("repeated curve samples at resolution %d" % n)
        for arr in (s, u, x, L):
            arr.flags.writeable = False
        self.s_nodes = s
        self.u_nodes = u
        self.x_nodes = x
        self.L_nodes = L

    @classmethod
    def initial_line(cls, L0: Callable, x_range, n: int = 513, u0: float = 0.0) -> "CauchyCurve":
        """Data prescribed on the line u = u0 over an x interval."""
        x_lo, x_hi = float(x_range[0]), float(x_range[1])
        gamma = lambda s: (np.full_like(np.asarray(s, dtype=float), u0), x_lo + s * (x_hi - x_lo))
        datum = lambda s: L0(x_lo + np.asarray(s, dtype=float) * (x_hi - x_lo))
        return cls(gamma, datum, n=n)

    @classmethod
    def graph(cls, u_of_x: Callable, L0: Callable, x_range, n: int = 513) -> "CauchyCurve":
        """Data on the graph u = u_of_x(x) over an x interval."""
        x_lo, x_hi = float(x_range[0]), float(x_range[1])

        def gamma(s):
            x = x_lo + np.asarray(s, dtype=float) * (x_hi - x_lo)
            return (np.asarray(u_of_x(x), dtype=float), x)

        datum = lambda s: L0(x_lo + np.asarray(s, dtype=float) * (x_hi - x_lo))
        return cls(gamma, datum, n=n)

    def tangent_angles(self) -> np.ndarray:
        """Tangent directions as angles in [0, pi), by central differences."""
        du = np.gradient(self.u_nodes)
        dx = np.gradient(self.x_nodes)
        norm = np.hypot(du, dx)
        if np.any(norm <= self.tol):
            raise DegenerateCurve("tangent undefined at a sample")
        return np.mod(np.arctan2(dx, du), np.pi)

    def transversality_signs(self) -> np.ndarray:
        """Sign of the tangent-vs-datum determinant dx - du * L at each node."""
        du = np.gradient(self.u_nodes)
        dx = np.gradient(self.x_nodes)
        return np.sign(dx - du * self.L_nodes)


def transversality_check(curve: CauchyCurve) -> float:
    """Minimum angular distance on the slope circle between the curve tangent
    and its datum line; a strictly positive margin certifies the local
    solvability of the Cauchy problem."""
    theta_t = curve.tangent_angles()
    theta_d = np.mod(np.arctan(curve.L_nodes), np.pi)
    d = np.abs(theta_t - theta_d)
    d = np.minimum(d, np.pi - d)
    return float(np.min(d))


# ---------------------------------------------------------------------------
# characteristic integration
# ---------------------------------------------------------------------------

def _rk4_step(sigma, u, x, p, h):
    k1x = p
    k1p = sigma(u, x, p)
    k2x = p + 0.5 * h * k1p
    k2p = sigma(u + 0.5 * h, x + 0.5 * h * k1x, k2x)
    k3x = p + 0.5 * h * k2p
    k3p = sigma(u + 0.5 * h, x + 0.5 * h * k2x, k3x)
    k4x = p + h * k3p
    k4p = sigma(u + h, x + h * k3x, k4x)
    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    pn = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return xn, pn


def _check_state(x, p, bound, u):
    bad = ~np.isfinite(x) | ~np.isfinite(p) | (np.abs(x) > bound) | (np.abs(p) > bound)
    if np.any(bad):
        raise BlowUp("characteristic left the state bound %g near u = %g" % (bound, float(u)), u=float(u))


def characteristic_trace(f: Forcing, u0: float, x0: float, p0: float, u_end: float,
                         step: float = DEFAULT_STEP, bound: float = DEFAULT_BOUND) -> np.ndarray:
    """Integrate one characteristic of x'' = sigma(u, x, x').

    Returns the sampled curve as an array of rows (u, x, p), including both
    endpoints.  The step is fixed (with one shorter final step to land on
    u_end exactly); integration runs backward when u_end < u0.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    u, x, p = float(u0), float(x0), float(p0)
    _check_state(np.asarray(x), np.asarray(p), bound, u)
    direction = 1.0 if u_end >= u0 else -1.0
    rows = [(u, x, p)]
    remaining = abs(u_end - u0)
    nfull = int(np.floor(remaining / step + 1e-12))
    sig = f.sigma
    for k in range(1, nfull + 1):
        # drift-free levels: each step lands on u0 + k * step exactly
        target = u0 + direction * k * step
        x, p = _rk4_step(sig, u, x, p, target - u)
        u = target
        _check_state(np.asarray(x), np.asarray(p), bound, u)
        rows.append((u, float(x), float(p)))
    if abs(u_end - u) > 1e-12 * max(1.0, abs(u_end)):
        x, p = _rk4_step(sig, u, x, p, u_end - u)
        u = u_end
        _check_state(np.asarray(x), np.asarray(p), bound, u)
        rows.append((u, float(x), float(p)))
    else:
        rows[-1] = (u_end, rows[-1][1], rows[-1][2])
    return np.array(rows)


def _integrate_to(f: Forcing, u0, x0, p0, u_end, step, bound):
    """Vectorized endpoint integration of the characteristic system."""
    x = np.array(x0, dtype=float, copy=True)
    p = np.array(p0, dtype=float, copy=True)
    u = float(u0)
    direction = 1.0 if u_end >= u0 else -1.0
    remaining = abs(u_end - u0)
    nfull = int(np.floor(remaining / step + 1e-12))
    sig = f.sigma
    for k in range(1, nfull + 1):
        target = u0 + direction * k * step
        x, p = _rk4_step(sig, u, x, p, target - u)
        u = target
        _check_state(x, p, bound, u)
    if abs(u_end - u) > 1e-12 * max(1.0, abs(u_end)):
        x, p = _rk4_step(sig, u, x, p, u_end - u)
        _check_state(x, p, bound, u_end)
    return x, p


# ---------------------------------------------------------------------------
# solution objects
# ---------------------------------------------------------------------------

def _lagrange_weights(nodes, t):
    w = np.ones(len(nodes))
    for i in range(len(nodes)):
        for j in range(len(nodes)):
            if i != j:
                w[i] *= (t - nodes[j]) / (nodes[i] - nodes[j])
    return w


def _cubic_gather(t, nodes, values):
    """Batched cubic Lagrange interpolation.

    t has shape (m,), nodes and values have shape (4, m); each column holds
    the four interpolation nodes for the corresponding entry of t.
    """
    r = np.zeros(np.shape(t))
    for a in range(4):
        w = np.ones(np.shape(t))
        for b in range(4):
            if a != b:
                w = w * (t - nodes[b]) / (nodes[a] - nodes[b])
        r = r + w * values[a]
    return r


class BurgersSolution:
    """A solved characteristic family over a Cauchy curve.

    The family is tabulated on a shared grid of u levels; queries invert
    the map s -> x(s, u) at the requested level.  Flat families are also
    available in closed form, which query evaluation uses directly.
    """

    def __init__(self, forcing, cauchy, u_grid, x_tab, p_tab, step, bound, tol=1e-9):
        self.forcing = forcing
        self.cauchy = cauchy
        self.u_grid = u_grid
        self.x_tab = x_tab
        self.p_tab = p_tab
        self.step = step
        self.bound = bound
        self.tol = tol
        self.flat = forcing.is_zero
        sgn = cauchy.transversality_signs()
        # the orientation of the characteristic map along the curve; constant
        # for admissible Cauchy data
        self._orientation = float(np.sign(np.sum(sgn)))
        self._row_cache = {}

    # -- interpolation helpers -------------------------------------------

    def _rows_at(self, u: float):
        """Tabulated x and p rows at level u (4-point interpolation in u)."""
        if self.flat:
            x = self.cauchy.x_nodes + (u - self.cauchy.u_nodes) * self.cauchy.L_nodes
            return x, self.cauchy.L_nodes
        cached = self._row_cache.get(u)
        if cached is not None:
            return cached
        g = self.u_grid
        k = int(np.searchsorted(g, u)) - 1
        k = min(max(k, 1), len(g) - 3)
        idx = np.array([k - 1, k, k + 1, k + 2])
        w = _lagrange_weights(g[idx], u)
        rows = (w @ self.x_tab[idx], w @ self.p_tab[idx])
        if len(self._row_cache) > 256:
            self._row_cache.clear()
        self._row_cache[u] = rows
        return rows

    def charmap(self, s, u: float):
        """(x, p) on the characteristic through curve parameter s at level u."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.flat:
            ug, xg = self.cauchy.gamma(s)
            L = np.asarray(self.cauchy.datum(s), dtype=float)
            return xg + (u - ug) * L, L + 0.0
        xrow, prow = self._rows_at(u)
        nodes = self.cauchy.s_nodes
        i = np.clip(np.searchsorted(nodes, s) - 1, 1, len(nodes) - 3)
        ii = np.stack([i - 1, i, i + 1, i + 2])
        ss = nodes[ii]
        x = _cubic_gather(s, ss, xrow[ii])
        p = _cubic_gather(s, ss, prow[ii])
        return x, p

    # -- query evaluation --------------------------------------------------

    def _eval_level(self, u: float, xq: np.ndarray, want_foot: bool) -> np.ndarray:
        """All queries at one u level, vectorized bracket scan plus bisection."""
        xrow, prow = self._rows_at(u)
        nodes = self.cauchy.s_nodes
        d = xrow[None, :] - xq[:, None]
        sb = np.signbit(d)
        flips = sb[:, 1:] != sb[:, :-1]
        counts = flips.sum(axis=1)
        if np.any(counts == 0):
            bad = float(xq[np.argmax(counts == 0)])
            raise CausticReached(
                "no characteristic of the sampled family reaches x = %g at u = %g" % (bad, u),
                where=(u, bad))
        if np.any(counts > 1):
            bad = float(xq[np.argmax(counts > 1)])
            raise CausticReached(
                "characteristics cross before reaching x = %g at u = %g" % (bad, u),
                where=(u, bad))
        i = np.argmax(flips, axis=1)

        if self.flat:
            return self._refine_flat(u, xq, i, want_foot)

        ii = np.clip(np.stack([i - 1, i, i + 1, i + 2]), 0, len(nodes) - 1)
        ss = nodes[ii]
        xs = xrow[ii]
        ps = prow[ii]
        a, b = nodes[i], nodes[i + 1]
        fa = _cubic_gather(a, ss, xs) - xq
        for _ in range(52):
            m = 0.5 * (a + b)
            fm = _cubic_gather(m, ss, xs) - xq
            left = (fm < 0) == (fa < 0)
            a = np.where(left, m, a)
            fa = np.where(left, fm, fa)
            b = np.where(left, b, m)
        s = 0.5 * (a + b)
        h = nodes[i + 1] - nodes[i]
        slope = (_cubic_gather(s + 0.5 * h, ss, xs) - _cubic_gather(s - 0.5 * h, ss, xs)) / h
        self._orientation_guard(u, xq, slope)
        if want_foot:
            _, xg = self.cauchy.gamma(s)
            return np.asarray(xg, dtype=float)
        return _cubic_gather(s, ss, ps)

    def _refine_flat(self, u: float, xq: np.ndarray, i: np.ndarray, want_foot: bool) -> np.ndarray:
        """Flat families admit a closed-form map s -> x(s, u); bisect it."""
        c = self.cauchy

        def F(s):
            ug, xg = c.gamma(s)
            return xg + (u - ug) * np.asarray(c.datum(s), dtype=float) - xq

        a, b = c.s_nodes[i], c.s_nodes[i + 1]
        fa = F(a)
        for _ in range(70):
            m = 0.5 * (a + b)
            fm = F(m)
            left = (fm < 0) == (fa < 0)
            a = np.where(left, m, a)
            fa = np.where(left, fm, fa)
            b = np.where(left, b, m)
        s = 0.5 * (a + b)
        h = 1e-9
        for _ in range(3):
            f0 = F(s)
            der = (F(s + h) - f0) / h
            ok = np.isfinite(der) & (der != 0)
            s = np.where(ok, s - f0 / np.where(ok, der, 1.0), s)
        slope = (F(s + h) - F(s - h)) / (2 * h)
        self._orientation_guard(u, xq, slope)
        ug, xg = c.gamma(s)
        if want_foot:
            return np.asarray(xg, dtype=float)
        return np.asarray(c.datum(s), dtype=float)

    def _orientation_guard(self, u, xq, slope):
        if self._orientation == 0.0:
            return
        folded = slope * self._orientation < 0
        if np.any(folded):
            bad = float(np.atleast_1d(xq)[np.argmax(np.atleast_1d(folded))])
            raise CausticReached(
                "characteristic map folded before (u, x) = (%g, %g)" % (u, bad), where=(u, bad))

    def eval(self, u: float, x: float) -> float:
        """The slope L at (u, x), by inversion of the characteristic map."""
        return float(self._eval_level(float(u), np.array([float(x)]), want_foot=False)[0])

    def foot(self, u: float, x: float) -> float:
        """The x-coordinate of the Cauchy-curve point whose characteristic
        passes through (u, x); constant along characteristics."""
        return float(self._eval_level(float(u), np.array([float(x)]), want_foot=True)[0])

    def eval_batch(self, u, x) -> np.ndarray:
        """Vectorized eval; queries are grouped by their u level."""
        u = np.asarray(u, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(-1)
        out = np.empty_like(x)
        for lvl in np.unique(u):
            mask = u == lvl
            out[mask] = self._eval_level(float(lvl), x[mask], want_foot=False)
        return out


def solve_burgers(forcing: Forcing, cauchy: CauchyCurve, u_range,
                  step: float = DEFAULT_STEP, bound: float = DEFAULT_BOUND,
                  tol: float = 1e-9) -> BurgersSolution:
    """Tabulate the characteristic family of a forced (or flat) problem over
    a range of u levels containing the Cauchy curve."""
    u_lo = min(float(u_range[0]), float(np.min(cauchy.u_nodes)))
    u_hi = max(float(u_range[1]), float(np.max(cauchy.u_nodes)))
    if u_hi - u_lo < step:
        u_hi = u_lo + step
    n_levels = int(np.ceil((u_hi - u_lo) / step + 1e-9)) + 1
    u_grid = np.linspace(u_lo, u_hi, n_levels)
    if forcing.is_zero:
        x_tab = cauchy.x_nodes[None, :] + (u_grid[:, None] - cauchy.u_nodes[None, :]) * cauchy.L_nodes[None, :]
        p_tab = np.broadcast_to(cauchy.L_nodes, x_tab.shape).copy()
        return BurgersSolution(forcing, cauchy, u_grid, x_tab, p_tab, step, bound, tol)

    n_s = cauchy.n
    x_tab = np.full((n_levels, n_s), np.nan)
    p_tab = np.full((n_levels, n_s), np.nan)
    sig = forcing.sigma
    u0 = cauchy.u_nodes

    def sweep(direction):
        if direction > 0:
            k_start = np.searchsorted(u_grid, u0 - 1e-12, side="left")
            k_start = np.minimum(k_start, n_levels - 1)
            h0 = u_grid[k_start] - u0
        else:
            k_start = np.searchsorted(u_grid, u0 + 1e-12, side="right") - 1
            k_start = np.maximum(k_start, 0)
            h0 = u_grid[k_start] - u0
        x, p = _rk4_step(sig, u0, cauchy.x_nodes, cauchy.L_nodes, h0)
        _check_state(x, p, bound, float(np.median(u_grid[k_start])))
        levels = range(n_levels) if direction > 0 else range(n_levels - 1, -1, -1)
        for k in levels:
            active = (k_start <= k) if direction > 0 else (k_start >= k)
            x_tab[k, active] = x[active]
            p_tab[k, active] = p[active]
            nxt = k + direction
            if 0 <= nxt < n_levels:
                h = np.where(active, u_grid[nxt] - u_grid[k], 0.0)
                x, p = _rk4_step(sig, u_grid[k], x, p, h)
                _check_state(x, p, bound, u_grid[nxt])

    sweep(+1)
    if np.any(np.isnan(x_tab)):
        sweep(-1)
    return BurgersSolution(forcing, cauchy, u_grid, x_tab, p_tab, step, bound, tol)


# ---------------------------------------------------------------------------
# direct flat evaluation
# ---------------------------------------------------------------------------

def _flat_root(L0: Callable, u: float, x: float, tol: float, samples: int, max_expand: int):
    def F(x0):
        return x0 + u * np.asarray(L0(x0), dtype=float) - x

    half = 1.0
    for _ in range(max_expand):
        xs = np.linspace(x - half, x + half, samples)
        with np.errstate(all="ignore"):
            vals = np.asarray(F(xs), dtype=float)
        finite = np.isfinite(vals)
        if not np.all(finite):
            half *= 0.5
            continue
        zero = np.abs(vals) == 0.0
        if np.count_nonzero(zero) > 2:
            raise CausticReached("characteristic map degenerate at u = %g" % u)
        sgn = np.signbit(vals)
        crossings = np.where(sgn[1:] != sgn[:-1])[0]
        if len(crossings) > 1:
            raise CausticReached(
                "several characteristics reach (u, x) = (%g, %g)" % (u, x), where=(u, x))
        if len(crossings) == 1:
            a, b = xs[crossings[0]], xs[crossings[0] + 1]
            fa = F(a)
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = F(m)
                if (fm < 0) == (fa < 0):
                    a, fa = m, fm
                else:
                    b = m
            x0 = 0.5 * (a + b)
            h = max(1e-9, 1e-9 * abs(x0))
            for _ in range(3):
                f0 = F(x0)
                d = (F(x0 + h) - f0) / h
                if d != 0 and np.isfinite(d):
                    x0 = x0 - f0 / d
            return float(x0)
        half *= 2.0
    raise CausticReached(
        "bracketing failed for (u, x) = (%g, %g); no single characteristic found" % (u, x),
        where=(u, x))


def _flat_jacobian_ok(L0: Callable, u: float, x0: float) -> bool:
    h = 1e-6 * max(1.0, abs(x0))
    dL = (float(np.asarray(L0(x0 + h))) - float(np.asarray(L0(x0 - h)))) / (2 * h)
    return 1.0 + u * dL > 0.0


def eval_flat(L0: Callable, u: float, x: float, tol: float = 1e-12,
              samples: int = 257, max_expand: int = 60) -> float:
    """Solve L_u + L L_x = 0 with data L(0, .) = L0 at the point (u, x).

    Inverts x = x0 + u L0(x0) by scanning for a bracket and bisecting.
    Raises CausticReached when the root is missing or not unique, or when
    the characteristic map has folded (nonpositive Jacobian) at the root.
    """
    x0 = _flat_root(L0, float(u), float(x), tol, samples, max_expand)
    if not _flat_jacobian_ok(L0, float(u), x0):
        raise CausticReached("characteristic map folded before u = %g" % u, where=(u, x))
    return float(np.asarray(L0(x0)))


def transport_eval(L0: Callable, u: float, x: float, tol: float = 1e-12,
                   samples: int = 257, max_expand: int = 60) -> float:
    """The characteristic label X with X_u + L X_x = 0 and X(0, x) = x."""
    x0 = _flat_root(L0, float(u), float(x), tol, samples, max_expand)
    if not _flat_jacobian_ok(L0, float(u), x0):
        raise CausticReached("characteristic map folded before u = %g" % u, where=(u, x))
    return float(x0)


def eval_forced(f: Forcing, c: CauchyCurve, u: float, x: float,
                solution: Optional[BurgersSolution] = None,
                step: float = DEFAULT_STEP, bound: float = DEFAULT_BOUND) -> float:
    """Solve L_u + L L_x = sigma(u, x, L) with data on the curve c at (u, x).

    Builds (or reuses) the tabulated characteristic family and inverts it
    at level u by bracketed bisection over the curve parameter.
    """
    if solution is None:
        solution = solve_burgers(f, c, (min(u, float(np.min(c.u_nodes))),
                                        max(u, float(np.max(c.u_nodes)))),
                                 step=step, bound=bound)
    return solution.eval(u, x)


def pde_residual(field: Callable, sigma: Callable, u, x, h: float = 1e-3):
    """Central-difference residual of L_u + L L_x - sigma(u, x, L).

    field(u, x) must broadcast over arrays; returns an array shaped like the
    broadcast of u and x.
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    L = np.asarray(field(u, x), dtype=float)
    Lu = (np.asarray(field(u + h, x), dtype=float) - np.asarray(field(u - h, x), dtype=float)) / (2 * h)
    Lx = (np.asarray(field(u, x + h), dtype=float) - np.asarray(field(u, x - h), dtype=float)) / (2 * h)
    return Lu + L * Lx - np.asarray(sigma(u, x, L), dtype=float)


# ---------------------------------------------------------------------------
# caustics
# ---------------------------------------------------------------------------

def caustic_detect(sol: BurgersSolution, region=None, u_tol: float = 1e-8):
    """First crossing of adjacent characteristics, or None.

    Scans the tabulated family for a sign change of the spacing
    x(s_{i+1}, u) - x(s_i, u) relative to its orientation on the curve,
    then bisects the crossing time of every pair that flips at the earliest
    grid level.  Returns (u_star, x_star) or None.
    """
    g = sol.u_grid
    if region is None:
        lo, hi = g[0], g[-1]
    else:
        lo, hi = float(region[0]), float(region[1])
    klo = int(np.searchsorted(g, lo - 1e-12))
    khi = int(np.searchsorted(g, hi + 1e-12))
    levels = range(klo, min(khi, len(g)))

    def spacing(u):
        xrow, _ = sol._rows_at(u)
        return np.diff(xrow)

    ref = np.sign(np.diff(sol.cauchy.x_nodes + 0.0))
    base_sign = sol._orientation if sol._orientation != 0 else 1.0
    ref = np.where(ref == 0, base_sign, ref)

    prev_u = None
    for k in levels:
        d = spacing(g[k])
        flipped = np.where(d * ref <= 0.0)[0]
        if len(flipped) == 0:
            prev_u = g[k]
            continue
        lo_u = prev_u if prev_u is not None else g[max(k - 1, 0)]
        best = None
        for i in flipped:
            a, b = lo_u, g[k]
            if a == b:
                u_star = a
            else:
                for _ in range(200):
                    if b - a <= u_tol:
                        break
                    m = 0.5 * (a + b)
                    if spacing(m)[i] * ref[i] <= 0.0:
                        b = m
                    else:
                        a = m
                u_star = 0.5 * (a + b)
            xrow, _ = sol._rows_at(u_star)
            x_star = 0.5 * (xrow[i] + xrow[i + 1])
            if best is None or u_star < best[0]:
                best = (float(u_star), float(x_star))
        return best
    return None


# ---------------------------------------------------------------------------
# line-family surfaces, envelopes, and the tangent-line construction
# ---------------------------------------------------------------------------

@dataclass
class CausticCurve:
    """Sampled envelope lift: rows (u, x, slope) plus the generating lines."""

    samples: np.ndarray
    lines: np.ndarray

    def __len__(self):
        return len(self.samples)


@dataclass
class SurfaceSheet:
    """One chart of a line-family surface: parameters (s, u) with
    x = intercept(s) + slope(s) u."""

    s_nodes: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def point(self, i: int, u: float):
        return (u, self.intercepts[i] + self.slopes[i] * u, self.slopes[i])


@dataclass
class BurgersSurface:
    """A multi-sheeted slope surface swept by a one-parameter line family."""

    sheets: list
    caustic: Optional[CausticCurve]
    ramification: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _dual_samples(dual_curve, s_vals):
    out = np.empty((len(s_vals), 3))
    for i, s in enumerate(s_vals):
        l = dual_curve(s)
        l = np.asarray(getattr(l, "coords", l), dtype=float).reshape(3)
        out[i] = l
    return out


def surface_from_caustic(dual_curve: Callable, n: int = 200, fd_step: float = 1e-3,
                         closed: bool = True, chart_cutoff: float = 1e-7,
                         tol: float = 1e-9) -> BurgersSurface:
    """Sweep the line family s -> dual_curve(s) into a slope surface and lift
    its envelope.

    dual_curve returns homogeneous line coordinates (p, q, r) (an HPoint is
    accepted).  The envelope point of each line solves the 2x2 system built
    from the line and its s-derivative (five-point finite differences).
    Lines nearly parallel to the chart axis (|q| below chart_cutoff) are
    ramification markers separating sheets.
    """
    if closed:
        s_vals = np.arange(n) / n
    else:
        s_vals = np.linspace(0.0, 1.0, n)
    lines = _dual_samples(dual_curve, s_vals)
    scale = np.max(np.abs(lines), axis=1)
    if np.any(scale == 0):
        raise DegenerateCurve("zero line sample in the dual curve")

    # five-point derivative of the line family
    def deriv(s):
        pts = np.array([np.asarray(getattr(dual_curve(s + k * fd_step), "coords",
                                           dual_curve(s + k * fd_step)), dtype=float)
                        for k in (-2.0, -1.0, 1.0, 2.0)])
        return (pts[0] - 8 * pts[1] + 8 * pts[2] - pts[3]) / (12 * fd_step)

    env = np.empty((len(s_vals), 2))
    fixed_point = True
    for i, s in enumerate(s_vals):
        l = lines[i]
        dl = deriv(s)
        A = np.array([[l[0], l[1]], [dl[0], dl[1]]])
        b = np.array([-l[2], -dl[2]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) <= tol * max(1.0, float(np.max(np.abs(A)))) ** 2:
            nl = np.linalg.norm(dl - (np.dot(dl, l) / np.dot(l, l)) * l)
            if nl <= tol * np.linalg.norm(l):
                raise DegenerateCurve("dual curve fails to be immersed at s = %g" % s)
            raise DegenerateCurve("envelope system singular at s = %g" % s)
        env[i] = np.linalg.solve(A, b)
        if i > 0 and not np.allclose(env[i], env[0], atol=1e-9):
            fixed_point = False

    with np.errstate(divide="ignore"):
        slopes = np.where(np.abs(lines[:, 1]) > 0, -lines[:, 0] / lines[:, 1], np.inf)
        intercepts = np.where(np.abs(lines[:, 1]) > 0, -lines[:, 2] / lines[:, 1], np.inf)

    good = np.abs(lines[:, 1]) > chart_cutoff * scale
    ram = s_vals[~good]
    sheets = []
    if np.any(good):
        # maximal runs of chart-valid samples
        idx = np.where(good)[0]
        breaks = np.where(np.diff(idx) > 1)[0]
        runs = np.split(idx, breaks + 1)
        for run in runs:
            sheets.append(SurfaceSheet(s_vals[run], slopes[run], intercepts[run]))

    caustic = CausticCurve(np.column_stack([env[:, 0], env[:, 1], slopes]), lines)
    if fixed_point:
        caustic = CausticCurve(caustic.samples[:1], lines[:1])
    return BurgersSurface(sheets=sheets, caustic=caustic, ramification=ram)


def circle_tangent_lines(pt, tol: float = 1e-12):
    """Tangent lines to the conic x^2 + y^2 = z^2 through a point.

    Returns 0, 1 or 2 lines as canonical homogeneous triples (p, q, r) with
    p^2 + q^2 = r^2 and <pt, line> = 0: two lines from an exterior point,
    one at a point of the conic, none from the interior.
    """
    v = np.asarray(getattr(pt, "coords", pt), dtype=float).reshape(3)
    if np.max(np.abs(v)) == 0:
        raise ZeroSubspace("zero point")
    v = v / np.max(np.abs(v))
    _, _, vh = np.linalg.svd(v[None, :])
    l1, l2 = vh[1], vh[2]

    def Q(a, b):
        return a[0] * b[0] + a[1] * b[1] - a[2] * b[2]

    A = Q(l1, l1)
    B = 2.0 * Q(l1, l2)
    C = Q(l2, l2)
    S = max(abs(A), abs(B), abs(C))
    D = B * B - 4.0 * A * C
    lines = []
    if D < -tol * S * S:
        return []
    if abs(D) <= tol * S * S:
        if abs(A) > tol * S:
            lines.append((-B / (2 * A)) * l1 + l2)
        else:
            lines.append(l1)
    else:
        sq = np.sqrt(D)
        if abs(A) > tol * S:
            # stable quadratic roots
            qq = -0.5 * (B + np.copysign(sq, B if B != 0 else 1.0))
            r1 = qq / A
            r2 = C / qq if qq != 0 else 0.0
            lines.append(r1 * l1 + l2)
            lines.append(r2 * l1 + l2)
        else:
            lines.append(l1)
            if abs(B) > tol * S:
                lines.append((-C / B) * l1 + l2)
    return [HPoint(l) for l in lines]


# ---------------------------------------------------------------------------
# dual second-order equation
# ---------------------------------------------------------------------------

def dual_ode_extract(f: Forcing, basepoint: float = 0.0, spreads=(0.5, 1.0),
                     h: float = 1e-4, targets=(3, 5), step: float = DEFAULT_STEP,
                     bound: float = DEFAULT_BOUND, tol: float = 1e-13) -> np.ndarray:
    """Sample the forcing of the dual second-order equation numerically.

    Solutions are coordinatized by their initial position a and slope b at
    u = basepoint.  For each target point (u, x) of the dynamical space the
    incidence set {(a, b) : x(u; a, b) = x} is a curve b(a); its second
    derivative b''(a), by central differences with step h, samples the dual
    forcing.  Returns an array with rows (a, b, b', b'').
    """
    du, dx = float(spreads[0]), float(spreads[1])
    n_u, n_x = targets
    u_targets = basepoint + du * np.linspace(0.4, 1.0, n_u)
    x_targets = np.linspace(-dx, dx, n_x)
    rows = []
    for u_t in u_targets:
        span = u_t - basepoint
        for x_t in x_targets:
            a_vals = x_t + np.array([-h, 0.0, h])
            b_vals = np.empty(3)
            for j, a in enumerate(a_vals):
                b = (x_t - a) / span
                b2 = b + max(1e-6, 1e-6 * abs(b))
                xa, _ = _integrate_to(f, basepoint, np.asarray(a), np.asarray(b), u_t, step, bound)
                xb, _ = _integrate_to(f, basepoint, np.asarray(a), np.asarray(b2), u_t, step, bound)
                fa, fb = float(xa) - x_t, float(xb) - x_t
                for _ in range(60):
                    den = fb - fa
                    if abs(den) <= 1e-300:
                        raise IllConditioned(
                            "solution family degenerate near (u, x) = (%g, %g)" % (u_t, x_t))
                    bn = b2 - fb * (b2 - b) / den
                    b, fa = b2, fb
                    b2 = bn
                    xn, _ = _integrate_to(f, basepoint, np.asarray(a), np.asarray(b2), u_t, step, bound)
                    fb = float(xn) - x_t
                    if abs(fb) <= tol * max(1.0, abs(x_t)) and abs(b2 - b) <= tol * max(1.0, abs(b2)):
                        break
                b_vals[j] = b2
            slope = (b_vals[2] - b_vals[0]) / (2 * h)
            second = (b_vals[2] - 2 * b_vals[1] + b_vals[0]) / (h * h)
            rows.append((a_vals[1], b_vals[1], slope, second))
    return np.array(rows)
