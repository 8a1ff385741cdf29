"""Quasiconcave functions, slowly varying functions, weights and majorants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .funcrep import (
    FuncRep,
    GridSpec,
    Piece,
    PowerLogAtom,
    Symbolic,
    Tabulated,
    breakpoints,
    cumulative,
    evaluate,
    evaluate_left,
    integrate,
    limit_at_zero,
    power,
    restrict,
    to_symbolic,
)

__all__ = [
    "ConditionItem",
    "ConditionReport",
    "QuasiconcaveFn",
    "SlowlyVaryingFn",
    "Weight",
    "quasiconcave_envelope",
    "least_concave_majorant",
    "least_nondecreasing_majorant",
    "check_lambda_admissible",
    "fundamental_identity_check",
    "bounded_near_zero",
]

QC_RTOL = 1e-12


@dataclass(frozen=True)
class ConditionItem:
    name: str
    passed: bool | None
    constant: float | None = None
    note: str = ""

    def to_dict(self):
        d = {"name": self.name, "passed": self.passed}
        if self.constant is not None:
            d["constant"] = self.constant
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class ConditionReport:
    """Named checks, each with an optional empirical constant."""

    items: tuple[ConditionItem, ...] = ()
    floor: float | None = None

    @property
    def all_pass(self) -> bool:
        return all(it.passed for it in self.items)

    def __getitem__(self, name: str) -> ConditionItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def names(self):
        return [it.name for it in self.items]

    def to_dict(self):
        d = {"all_pass": self.all_pass, "items": [it.to_dict() for it in self.items]}
        if self.floor is not None:
            d["floor"] = self.floor
        return d


def _nodes(f: FuncRep, grid: GridSpec) -> np.ndarray:
    pts = np.concatenate([grid.points, breakpoints(f)]) if isinstance(f, Symbolic) else grid.points
    pts = np.unique(pts)
    return pts[(pts >= grid.floor) & (pts <= grid.a)]


# --------------------------------------------------------------------------
# quasiconcave functions


@dataclass(frozen=True)
class QuasiconcaveFn:
    """Positive, nondecreasing ``phi`` with ``phi(t)/t`` nonincreasing (checked on the grid)."""

    f: FuncRep
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        t = _nodes(self.f, self.grid)
        v = evaluate(self.f, t)
        if np.any(v <= 0):
            raise ValueError("quasiconcave function must be positive on (0, a]")
        if np.any(np.diff(v) < -QC_RTOL * v[1:]):
            raise ValueError("quasiconcave function must be nondecreasing")
        r = v / t
        if np.any(np.diff(r) > QC_RTOL * r[:-1]):
            raise ValueError("phi(t)/t must be nonincreasing")

    @property
    def a(self) -> float:
        return self.grid.a

    def __call__(self, t):
        return evaluate(self.f, t)

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.f, self.grid)

    def value_at_zero_plus(self) -> float:
        lim = limit_at_zero(to_symbolic(self.f))
        return float(lim.value) if lim.kind == "positive_finite" else 0.0


def quasiconcave_envelope(f: FuncRep, grid: GridSpec | None = None) -> QuasiconcaveFn:
    """Least quasiconcave majorant on the grid, ``sup_s f(s) min(1, t/s)``.

    Returns ``f`` itself when it is already quasiconcave; otherwise a
    tabulation whose nodes are the grid plus the breakpoints of ``f``.
    """
    grid = grid or GridSpec(f.a)
    try:
        return QuasiconcaveFn(f, grid)
    except ValueError:
        pass
    t = _nodes(f, grid)
    v = np.maximum(evaluate(f, t), np.maximum(evaluate_left(f, t), 0.0))
    up = np.maximum.accumulate(v)
    down = t * np.maximum.accumulate((v / t)[::-1])[::-1]
    env = np.maximum(up, down)
    if np.any(env <= 0):
        raise ValueError("function vanishes identically near the origin")
    tab = Tabulated(grid, env, t)
    differs = np.flatnonzero(np.abs(env - v) > QC_RTOL * v)
    k = int(differs[0]) if differs.size else len(t)
    if isinstance(f, Symbolic) and k >= 2:
        # keep the exact formula where the envelope coincides with f; the
        # head below the floor then stays exact for far-field asymptotics
        k = min(k, len(t) - 1)
        cut = float(t[k - 1])
        tail = [p for p in to_symbolic(tab).pieces if p.lo >= cut]
        sym = Symbolic(f.a, tuple(restrict(f, 0.0, cut).pieces) + tuple(tail))
        try:
            return QuasiconcaveFn(sym, grid)
        except ValueError:
            pass
    return QuasiconcaveFn(tab, grid)


def _upper_hull(x: np.ndarray, y: np.ndarray) -> list[int]:
    """Indices of the upper concave hull (monotone chain) of points sorted by x."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, m = hull[-2], hull[-1]
            cross = (x[m] - x[o]) * (y[i] - y[o]) - (y[m] - y[o]) * (x[i] - x[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def least_concave_majorant(phi: QuasiconcaveFn) -> QuasiconcaveFn:
    """Least concave majorant over the grid nodes.

    Between hull vertices the majorant is affine (stored exactly).  Below the
    first node it keeps ``phi`` itself, which is concave there for every
    power-log function of interest.  ``phi <= result <= 2 phi`` on the nodes.
    """
    t = phi.nodes
    v = phi(t)
    idx = _upper_hull(t, v)
    # The origin lies below every chord since phi(t)/t is nonincreasing, so
    # the first node is always a vertex.
    pieces = list(restrict(phi.f, 0.0, t[0]).pieces)
    for i0, i1 in zip(idx[:-1], idx[1:]):
        slope = (v[i1] - v[i0]) / (t[i1] - t[i0])
        c0 = v[i0] - slope * t[i0]
        atoms = tuple(at for at in (PowerLogAtom(c0), PowerLogAtom(slope, 1.0)) if at.coeff != 0)
        pieces.append(Piece(float(t[i0]), float(t[i1]), atoms))
    sym = Symbolic(phi.a, tuple(pieces))
    return QuasiconcaveFn(sym, phi.grid)


# --------------------------------------------------------------------------
# slowly varying functions


_EPSILONS = (0.5, 0.1, 0.01)


@dataclass(frozen=True)
class SlowlyVaryingFn:
    """Positive ``b`` with ``t^eps b`` increasing, ``t^-eps b`` decreasing near 0.

    ``t0`` records, per epsilon, the largest node below which both
    monotonicity properties hold on the grid.
    """

    b: FuncRep
    grid: GridSpec = field(default_factory=GridSpec)
    t0: dict = field(default_factory=dict, compare=False)
    exact: bool = False

    def __post_init__(self):
        t = _nodes(self.b, self.grid)
        v = evaluate(self.b, t)
        if np.any(v <= 0):
            raise ValueError("slowly varying function must be positive")
        sym = to_symbolic(self.b)
        exact = (
            isinstance(self.b, Symbolic)
            and len(sym.pieces) >= 1
            and sym.pieces[0].lo == 0
            and all(at.alpha == 0 for p in sym.pieces for at in p.atoms)
            and len(sym.pieces[0].atoms) == 1
        )
        t0 = {}
        if exact:
            # |d log b / d log t| <= (|beta| + |gamma| + |delta|) / l, so both
            # monotonicity properties hold once l(t) >= S / eps.
            at = sym.pieces[0].atoms[0]
            S = abs(at.beta) + abs(at.gamma) + abs(at.delta)
            for eps in _EPSILONS:
                lim = self.grid.a * math.exp(1.0 - S / eps) if S else self.grid.a
                t0[eps] = min(lim, sym.pieces[0].hi)
        else:
            lv, lt = np.log(v), np.log(t)
            for eps in _EPSILONS:
                ok = (np.diff(lv + eps * lt) >= -1e-12) & (np.diff(lv - eps * lt) <= 1e-12)
                bad = np.flatnonzero(~ok)
                k = int(bad[0]) if bad.size else len(t) - 1
                if k < 8:
                    if eps >= 0.1:
                        raise ValueError(f"not slowly varying on the grid (eps={eps})")
                    t0[eps] = None
                else:
                    t0[eps] = float(t[k])
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "exact", exact)

    def __call__(self, t):
        return evaluate(self.b, t)

    def power(self, alpha: float) -> "SlowlyVaryingFn":
        return SlowlyVaryingFn(power(self.b, alpha), self.grid)


# --------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weight:
    """Nonnegative weight with finite primitive ``V``."""

    v: FuncRep
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        sym = to_symbolic(self.v)
        if not sym.pieces or sym.pieces[0].lo > 0:
            raise ValueError("weight must be positive near the origin")
        if integrate(self.v, 0.0, sym.pieces[0].hi).divergent:
            raise ValueError("invalid weight: V(t) is infinite")
        if evaluate(self.v, self.grid.floor) <= 0:
            raise ValueError("weight must be positive near the origin")

    @property
    def a(self) -> float:
        return self.grid.a

    def __call__(self, t):
        return evaluate(self.v, t)

    def V(self, t):
        scalar = np.isscalar(t)
        out = cumulative(self.v, np.atleast_1d(np.asarray(t, dtype=float)))
        return float(out[0]) if scalar else out

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.v, self.grid)


def least_nondecreasing_majorant(v, grid: GridSpec | None = None) -> FuncRep:
    """``v~(t) = ess sup of v over (0, t)``: running maximum with left limits.

    Nondecreasing symbolic input is returned unchanged.  Otherwise each grid
    cell where ``v`` is rising above its past maximum keeps the formula of
    ``v``; elsewhere the cell carries the running maximum as a constant.
    """
    if isinstance(v, Weight):
        grid = grid or v.grid
        v = v.v
    grid = grid or GridSpec(v.a)
    sym = to_symbolic(v)
    t = _nodes(v, grid)
    right, left = evaluate(sym, t), evaluate_left(sym, t)
    if np.all(np.diff(right) >= 0) and np.all(left <= right):
        return v
    head = restrict(sym, 0.0, t[0])
    head_vals = evaluate(sym, np.geomspace(t[0] * 1e-6, t[0], 32, endpoint=False))
    head_rising = bool(np.all(np.diff(head_vals) >= 0))
    m = float(left[0]) if head_rising else float(max(np.max(head_vals), left[0]))
    pieces = list(head.pieces) if head_rising else [Piece(0.0, float(t[0]), (PowerLogAtom(m),))]
    for i in range(len(t) - 1):
        lo, hi = float(t[i]), float(t[i + 1])
        v_lo, v_hi = right[i], left[i + 1]
        m = max(m, left[i])
        mid = 0.5 * (lo + hi)
        src = next((p for p in sym.pieces if p.lo <= lo and hi <= p.hi), None)
        if src is not None and v_lo >= m and v_hi >= v_lo:
            pieces.append(Piece(lo, hi, src.atoms))
            m = v_hi
        else:
            m = max(m, v_lo, v_hi, float(evaluate(sym, mid)))
            pieces.append(Piece(lo, hi, (PowerLogAtom(m),)))
    return Symbolic(sym.a, tuple(pieces))


def check_lambda_admissible(q: float, v: Weight, grid: GridSpec | None = None) -> ConditionReport:
    """Conditions under which ``Lambda^q(v)`` is equivalent to an r.i. norm.

    The reported constant is the empirical sup of the ratio the condition
    bounds; it passes when the ratio stays bounded (finite, no growth toward
    the floor).
    """
    grid = grid or v.grid
    t = v.nodes
    t = t[t < v.a]
    V = v.V(t)
    items = []
    if q == 1:
        avg = V / t
        # (1/t)V(t) <= C (1/s)V(s) for s < t; as a function of s the ratio is
        # max over t > s of avg(t) / avg(s).
        ratio = np.maximum.accumulate(avg[::-1])[::-1] / avg
        c = float(np.max(ratio))
        items.append(ConditionItem("averages_nonincreasing", bounded_near_zero(t, ratio, grid), c))
    elif math.isinf(q):
        vt = least_nondecreasing_majorant(v, grid)
        vtv = evaluate(vt, t)
        finite = bool(np.all(np.isfinite(vtv)))
        inv = cumulative(power(vt, -1.0), t) if _single_atoms(vt) else _cum_recip(vt, t)
        ratio = vtv * inv / t
        c = float(np.max(ratio))
        items.append(ConditionItem("majorant_finite", finite))
        items.append(ConditionItem("sup_condition", bounded_near_zero(t, ratio, grid), c))
    else:
        qp = q / (q - 1.0)
        num = _cum_callable(lambda s: s**qp * v(s) * v.V(s) ** (-qp), t)
        rhs = t**qp * V ** (1.0 - qp)
        ratio = num / rhs
        c = float(np.max(ratio))
        items.append(ConditionItem("sawyer_condition", bounded_near_zero(t, ratio, grid), c))
    return ConditionReport(tuple(items), grid.floor)


def _single_atoms(f) -> bool:
    return all(len(p.atoms) <= 1 for p in to_symbolic(f).pieces)


def _cum_recip(f, t):
    return _cum_callable(lambda s: 1.0 / evaluate(f, s), t)


def _cum_callable(func, t):
    """Primitive of a vectorised callable at the nodes ``t``.

    The head (0, t[0]) comes from a power law fitted on the first decade and
    integrated exactly; cells use one vectorised Gauss-Legendre pass.
    """
    from .quadrature import GL_NODES  # noqa: F401
    import numpy.polynomial.legendre as _leg

    t = np.asarray(t, dtype=float)
    t0 = t[0]
    y = np.asarray(func(np.array([t0, 3.0 * t0])), dtype=float)
    s = math.log(y[1] / y[0]) / math.log(3.0) if np.all(y > 0) else 0.0
    head = y[0] * t0 / (s + 1.0) if s > -1 else math.inf
    if t.size == 1:
        return np.array([head])
    xg, wg = _leg.leggauss(20)
    lo, hi = np.log(t[:-1]), np.log(t[1:])
    w = hi - lo
    x = lo[:, None] + 0.5 * w[:, None] * (xg[None, :] + 1.0)
    tt = np.exp(x)
    vals = np.asarray(func(tt.ravel()), dtype=float).reshape(tt.shape) * tt
    cells = (vals @ wg) * 0.5 * w
    return head + np.concatenate([[0.0], np.cumsum(cells)])


def bounded_near_zero(t, ratio, grid: GridSpec) -> bool:
    """Empirical boundedness of a positive ratio sampled at nodes ``t``.

    Passes when the ratio is finite and its tabulated limit at the floor is
    not classified as infinite.
    """
    ratio = np.asarray(ratio, dtype=float)
    if not np.all(np.isfinite(ratio)):
        return False
    if np.any(ratio <= 0):
        return True
    tab = Tabulated(GridSpec(grid.a, float(t[0]), grid.points_per_decade), ratio, np.asarray(t))
    return limit_at_zero(tab).kind != "infinite"


def fundamental_identity_check(phi: FuncRep, phi_dual: FuncRep, grid: GridSpec | None = None) -> dict:
    """``max |phi(t) phi'(t) / t - 1|`` over the grid; flags growth toward 0."""
    grid = grid or GridSpec(phi.a)
    t = grid.points
    dev = np.abs(evaluate(phi, t) * evaluate(phi_dual, t) / t - 1.0)
    max_dev = float(np.max(dev))
    unbounded = bool(dev[0] > 1.0 and dev[0] >= np.max(dev[len(dev) // 2:]) * 10)
    return {"max_dev": max_dev, "unbounded_toward_zero": unbounded}
