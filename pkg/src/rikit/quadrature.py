"""Integration of power-log atoms over subintervals of (0, a].

An atom is ``c * t**alpha * l(t)**beta * ll(t)**gamma * lll(t)**delta`` with
``l(t) = 1 + log(a/t)``, ``ll = 1 + log(l)``, ``lll = 1 + log(ll)``.

Three routes are used:

* pure powers (no log factors) are integrated in closed form, vectorised;
* rows touching the origin go through the substitution ``u = l(t)`` and, when
  the integrand still has a ``1/u`` factor, a further ``v = 1 + log(u)`` and so
  on; the last level is either an incomplete gamma function or an adaptive
  quadrature on a half line;
* bounded rows away from the origin use composite Gauss-Legendre in ``log t``
  on geometric subcells of ratio at most two.

Divergence can only happen at the origin and is decided exactly from the
exponents, so it is reported as a flag and never raised.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate as _spi

__all__ = [
    "GL_NODES",
    "atom_primitive_head",
    "integrate_rows",
    "integrate_callable",
    "log_level_integral",
]

GL_NODES = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_NODES)
_MAX_CELL_RATIO = 2.0


def _L(x):
    return 1.0 + math.log(x)


def log_level_integral(lam: float, exps, x1: float, x2: float) -> tuple[float, bool]:
    """Integral of ``exp(lam*(x-1)) * x**e0 * L(x)**e1 * L(L(x))**e2`` over [x1, x2].

    ``L(x) = 1 + log x`` and ``x2`` may be ``inf``. Returns ``(value, divergent)``.
    When ``lam == 0`` the substitution ``y = L(x)`` lowers the level by one.
    """
    exps = list(exps)
    while exps and exps[-1] == 0:
        exps.pop()
    if x2 <= x1:
        return 0.0, False
    if lam == 0:
        if not exps:
            return (math.inf, True) if math.isinf(x2) else (x2 - x1, False)
        y2 = math.inf if math.isinf(x2) else _L(x2)
        return log_level_integral(exps[0] + 1.0, exps[1:], _L(x1), y2)
    if math.isinf(x2) and lam > 0:
        return math.inf, True
    if not exps:
        hi = 0.0 if math.isinf(x2) else math.exp(lam * (x2 - 1.0))
        return (hi - math.exp(lam * (x1 - 1.0))) / lam, False
    if len(exps) == 1 and lam < 0:
        k = -lam
        s = exps[0] + 1.0
        upper = mpmath.inf if math.isinf(x2) else k * x2
        val = mpmath.exp(k) * mpmath.power(k, -s) * mpmath.gammainc(s, k * x1, upper)
        return float(val), False
    return _level_quad(lam, exps, x1, x2), False


def _level_quad(lam, exps, x1, x2):
    e = list(exps) + [0.0] * (3 - len(exps))

    def g(x):
        val = math.exp(lam * (x - 1.0))
        if e[0]:
            val *= x ** e[0]
        if e[1] or e[2]:
            lx = _L(x)
            if e[1]:
                val *= lx ** e[1]
            if e[2]:
                val *= _L(lx) ** e[2]
        return val

    total = 0.0
    lo = x1
    # Geometric blocks keep quad's interval bisection well conditioned.
    while True:
        hi = min(x2, max(2.0 * lo, lo + 4.0))
        if math.isinf(x2) and lo > 50.0 + 50.0 / max(abs(lam), 1e-3):
            v, _ = _spi.quad(g, lo, math.inf, epsabs=0.0, epsrel=1e-13, limit=400)
            total += v
            break
        v, _ = _spi.quad(g, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += v
        if hi >= x2:
            break
        lo = hi
    return total


def atom_primitive_head(c, alpha, beta, gamma, delta, lo, hi, a) -> tuple[float, bool]:
    """Exact-route integral of one atom over ``[lo, hi]`` with ``0 <= lo < hi <= a``."""
    if c == 0 or hi <= lo:
        return 0.0, False
    lam = -(alpha + 1.0)
    x1 = 1.0 + math.log(a / hi)
    x2 = math.inf if lo == 0 else 1.0 + math.log(a / lo)
    val, div = log_level_integral(lam, [beta, gamma, delta], x1, x2)
    if div:
        return math.copysign(math.inf, c), True
    return c * a ** (alpha + 1.0) * val, False


def _pure_power(c, lam, lo, hi):
    """Vectorised integral of ``c * t**(lam-1)`` over [lo, hi]."""
    out = np.zeros_like(c)
    div = np.zeros(c.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = lo > 0
        # lo > 0: c * lo**lam * expm1(lam * log(hi/lo)) / lam, stable as lam -> 0
        r = np.log(hi[pos] / lo[pos])
        lp = lam[pos]
        safe = np.where(lp == 0, 1.0, lp)
        val = np.where(lp == 0, r, lo[pos] ** lp * np.expm1(lp * r) / safe)
        out[pos] = c[pos] * val
        z = ~pos
        lz = lam[z]
        conv = lz > 0
        vz = np.where(conv, hi[z] ** np.where(conv, lz, 1.0) / np.where(conv, lz, 1.0), np.inf)
        out[z] = np.where(conv, c[z] * vz, np.copysign(np.inf, c[z]))
        div[z] = ~conv & (c[z] != 0)
    return out, div


def _gl_rows(c, al, be, ga, de, lo, hi, a):
    """Composite Gauss-Legendre in log t for rows with ``lo > 0``."""
    ratio = hi / lo
    nsub = np.maximum(1, np.ceil(np.log(ratio) / math.log(_MAX_CELL_RATIO) - 1e-12)).astype(int)
    idx = np.repeat(np.arange(len(c)), nsub)
    start = np.concatenate([[0], np.cumsum(nsub)[:-1]])
    j = np.arange(idx.size) - np.repeat(start, nsub)
    xlo = np.log(lo)[idx]
    width = (np.log(hi) - np.log(lo))[idx] / nsub[idx]
    x0 = xlo + j * width
    x = x0[:, None] + 0.5 * width[:, None] * (_GL_X[None, :] + 1.0)
    t = np.exp(x)
    l1 = 1.0 + np.log(a / t)
    logv = (al[idx, None] + 1.0) * x
    b, g, d = be[idx, None], ga[idx, None], de[idx, None]
    if np.any(b):
        logv = logv + b * np.log(l1)
    if np.any(g) or np.any(d):
        l2 = 1.0 + np.log(l1)
        logv = logv + g * np.log(l2)
        if np.any(d):
            logv = logv + d * np.log(1.0 + np.log(l2))
    vals = np.exp(logv) @ _GL_W * 0.5 * width
    return np.bincount(idx, weights=vals * c[idx], minlength=len(c))


def integrate_rows(c, alpha, beta, gamma, delta, lo, hi, a) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a batch of atoms, row ``i`` over ``[lo[i], hi[i]]``.

    Returns ``(values, divergent)``; divergent rows carry a signed infinity.
    """
    c = np.asarray(c, dtype=float)
    alpha, beta, gamma, delta, lo, hi = (
        np.broadcast_to(np.asarray(x, dtype=float), c.shape).copy()
        for x in (alpha, beta, gamma, delta, lo, hi)
    )
    out = np.zeros(c.shape)
    div = np.zeros(c.shape, dtype=bool)
    live = (hi > lo) & (c != 0)
    pure = live & (beta == 0) & (gamma == 0) & (delta == 0)
    if np.any(pure):
        v, d = _pure_power(c[pure], alpha[pure] + 1.0, lo[pure], hi[pure])
        out[pure], div[pure] = v, d
    gl = live & ~pure & (lo > 0)
    if np.any(gl):
        out[gl] = _gl_rows(c[gl], alpha[gl], beta[gl], gamma[gl], delta[gl], lo[gl], hi[gl], a)
    head = np.flatnonzero(live & ~pure & (lo == 0))
    for i in head:
        out[i], div[i] = atom_primitive_head(
            c[i], alpha[i], beta[i], gamma[i], delta[i], 0.0, hi[i], a
        )
    return out, div


def integrate_callable(func, lo: float, hi: float, a: float, tail_atom=None) -> float:
    """Integrate a vectorised callable over [lo, hi].

    Used for integrands that are not single atoms (sums of atoms raised to a
    power).  Bounded parts use the geometric Gauss-Legendre rule; when
    ``lo == 0`` the segment below ``hi * 1e-16`` is replaced by the exact
    integral of ``tail_atom`` (the dominant atom there), or dropped if none.
    """
    if hi <= lo:
        return 0.0
    total = 0.0
    if lo == 0:
        cut = hi * 1e-16
        if tail_atom is not None:
            v, d = atom_primitive_head(*tail_atom, 0.0, cut, a)
            if d:
                return v
            total += v
        lo = cut
    n = max(1, math.ceil(math.log(hi / lo) / math.log(_MAX_CELL_RATIO) - 1e-12))
    edges = np.geomspace(lo, hi, n + 1)
    x0 = np.log(edges[:-1])
    w = np.diff(np.log(edges))
    x = x0[:, None] + 0.5 * w[:, None] * (_GL_X[None, :] + 1.0)
    t = np.exp(x)
    vals = np.asarray(func(t.ravel()), dtype=float).reshape(t.shape) * t
    return total + float(np.sum((vals @ _GL_W) * 0.5 * w))
