"""Rearrangement-invariant norms on (0, a], fundamental functions, associates.

A :class:`NormSpec` is one of :class:`Lebesgue`, :class:`LorentzKaramata`,
:class:`Marcinkiewicz`, :class:`LorentzEndpoint`, :class:`ClassicalLambda`,
:class:`Sum`, :class:`Intersection` or :class:`EnlargedY`.  ``norm`` evaluates
any of them on a FuncRep; ``fundamental_atom`` gives a power-log atom
equivalent to the fundamental function near the origin, which is what the
inclusion and verdict logic works with.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import quadrature as _q
from .funcrep import (
    DEFAULT_RTOL,
    FuncRep,
    GridSpec,
    Piece,
    PowerLogAtom,
    Symbolic,
    Tabulated,
    add,
    asymptotic_primitive,
    atom,
    atom_limit_kind,
    breakpoints,
    derivative,
    dominant_atom,
    evaluate,
    evaluate_left,
    funcrep_from_json,
    funcrep_to_json,
    indicator,
    integrate,
    limit_at_zero,
    multiply,
    power,
    restrict,
    scale,
    step_function,
    to_symbolic,
)
from .rearrange import RearrangedFn, absolute, rearrange, star_star
from .scales import (
    ConditionItem,
    ConditionReport,
    QuasiconcaveFn,
    Weight,
    bounded_near_zero,
    check_lambda_admissible,
    least_concave_majorant,
    least_nondecreasing_majorant,
    quasiconcave_envelope,
)

__all__ = [
    "InadmissibleSpec",
    "Lebesgue",
    "LorentzKaramata",
    "Marcinkiewicz",
    "LorentzEndpoint",
    "ClassicalLambda",
    "Sum",
    "Intersection",
    "EnlargedY",
    "NormSpec",
    "lorentz_zygmund",
    "lz_admissibility",
    "norm",
    "norm_of_rearranged",
    "sum_norm",
    "sum_norm_bruteforce",
    "fundamental_function",
    "fundamental_atom",
    "associate_lower_bound",
    "exact_associate",
    "check_ri_axioms",
    "spec_from_json",
    "spec_to_json",
    "weighted_power_integral",
    "ess_sup",
]

INF = math.inf


class InadmissibleSpec(ValueError):
    """Parameters outside the range where the functional is an r.i. norm."""


def _fmt(x: float):
    return "inf" if math.isinf(x) else x


def _parse_ext(x) -> float:
    if x is None or (isinstance(x, str) and x.lower() in ("inf", "infinity", "oo")):
        return INF
    return float(x)


# --------------------------------------------------------------------------
# spec variants


@dataclass(frozen=True)
class Lebesgue:
    p: float
    a: float = 1.0

    def __post_init__(self):
        if not 1 <= self.p <= INF:
            raise InadmissibleSpec("Lebesgue exponent must lie in [1, inf]")


def _log_exponents(b: FuncRep) -> tuple[float, float, float] | None:
    """(beta, gamma, delta) when b is a single log-power atom on all of (0, a]."""
    if not isinstance(b, Symbolic) or len(b.pieces) != 1:
        return None
    p = b.pieces[0]
    if p.lo != 0 or p.hi < b.a or len(p.atoms) != 1 or p.atoms[0].alpha != 0:
        return None
    at = p.atoms[0]
    return (at.beta, at.gamma, at.delta)


def _b_atom(b: FuncRep) -> PowerLogAtom | None:
    ex = _log_exponents(b)
    if ex is None:
        return None
    return b.pieces[0].atoms[0]


def lz_admissibility(p: float, q: float, b: FuncRep, grid: GridSpec | None = None) -> ConditionReport:
    """Admissibility table for ``L^{p,q;b}``."""
    items = [ConditionItem("q_in_[1,inf]", 1 <= q <= INF)]
    b_at = _b_atom(b)
    if 1 < p < INF:
        items.append(ConditionItem("1<p<inf", True))
    elif p == 1 and q == 1:
        if b_at is not None:
            ok = atom_limit_kind(b_at) != "zero"
        else:
            grid = grid or GridSpec(b.a)
            t = grid.points
            v = evaluate(b, t)
            ratio = np.maximum.accumulate(v[::-1])[::-1] / v
            ok = bounded_near_zero(t, ratio, grid)
        items.append(ConditionItem("b_equivalent_to_nonincreasing", ok))
    elif math.isinf(p) and q < INF:
        w = multiply(atom(1.0, -1.0, a=b.a), power(b, q))
        items.append(ConditionItem("integral_t^-1_b^q_finite", not integrate(w).divergent))
    elif math.isinf(p) and math.isinf(q):
        if b_at is not None:
            ok = atom_limit_kind(b_at) != "infinite"
        else:
            ok = limit_at_zero(b).kind != "infinite"
        items.append(ConditionItem("b_bounded", ok))
    else:
        items.append(ConditionItem("p_q_combination", False,
                                   note="need 1<p<inf, p=q=1, or p=inf"))
    return ConditionReport(tuple(items))


@dataclass(frozen=True)
class LorentzKaramata:
    """``||t^{1/p-1/q} b(t) f*(t)||_{L^q}``."""

    p: float
    q: float
    b: FuncRep = None
    validate: bool = field(default=True, compare=False)
    report: ConditionReport | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", atom(1.0))
        if self.p <= 0 or self.q <= 0:
            raise InadmissibleSpec("p and q must be positive")
        rep = lz_admissibility(self.p, self.q, self.b) if self.q >= 1 else ConditionReport(
            (ConditionItem("q_in_[1,inf]", False),))
        object.__setattr__(self, "report", rep)
        if self.validate and not rep.all_pass:
            failed = [it.name for it in rep.items if not it.passed]
            raise InadmissibleSpec(f"Lorentz-Karamata parameters inadmissible: {failed}")

    @property
    def a(self) -> float:
        return self.b.a

    @property
    def log_exponents(self):
        return _log_exponents(self.b)


def lorentz_zygmund(p, q, alpha=0.0, beta=0.0, delta=0.0, a=1.0, validate=True) -> LorentzKaramata:
    """``L^{p,q;alpha,beta,delta}`` with ``b = l^alpha ll^beta lll^delta``."""
    return LorentzKaramata(_parse_ext(p), _parse_ext(q),
                           atom(1.0, 0.0, alpha, beta, delta, a=a), validate=validate)


def _as_qc(phi, grid=None) -> QuasiconcaveFn:
    if isinstance(phi, QuasiconcaveFn):
        return phi
    return quasiconcave_envelope(phi, grid or GridSpec(phi.a))


@dataclass(frozen=True)
class Marcinkiewicz:
    """``sup f**(t) phi(t)``.  ``origin`` tags toolkit-constructed spaces."""

    phi: QuasiconcaveFn
    origin: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_qc(self.phi))

    @property
    def a(self) -> float:
        return self.phi.a


@dataclass(frozen=True)
class LorentzEndpoint:
    """``integral of f* d(phi~)`` with ``phi~`` the least concave majorant."""

    phi: QuasiconcaveFn

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_qc(self.phi))

    @property
    def a(self) -> float:
        return self.phi.a

    @property
    def majorant(self) -> QuasiconcaveFn:
        cached = self.__dict__.get("_maj")
        if cached is None:
            cached = least_concave_majorant(self.phi)
            object.__setattr__(self, "_maj", cached)
        return cached


@dataclass(frozen=True)
class ClassicalLambda:
    """``(integral f*^q v)^{1/q}`` or ``ess sup f* v`` when q is infinite."""

    q: float
    v: Weight
    validate: bool = field(default=True, compare=False)
    report: ConditionReport | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.v, Weight):
            object.__setattr__(self, "v", Weight(self.v, GridSpec(self.v.a)))
        if self.q < 1:
            raise InadmissibleSpec("q must lie in [1, inf]")
        rep = check_lambda_admissible(self.q, self.v)
        object.__setattr__(self, "report", rep)
        if self.validate and not rep.all_pass:
            raise InadmissibleSpec("weight fails the Lambda^q admissibility condition")

    @property
    def a(self) -> float:
        return self.v.a


@dataclass(frozen=True)
class Sum:
    A: "NormSpec"
    B: "NormSpec"

    @property
    def a(self) -> float:
        return self.A.a


@dataclass(frozen=True)
class Intersection:
    A: "NormSpec"
    B: "NormSpec"

    @property
    def a(self) -> float:
        return self.A.a


@dataclass(frozen=True)
class EnlargedY:
    """The enlarged target of the Marcinkiewicz construction (see ``marc_enlarge``)."""

    params: object
    origin: dict | None = field(default=None, compare=False)

    @property
    def a(self) -> float:
        return self.params.a


NormSpec = Union[Lebesgue, LorentzKaramata, Marcinkiewicz, LorentzEndpoint, ClassicalLambda,
                 Sum, Intersection, EnlargedY]


# --------------------------------------------------------------------------
# integration helpers


def _step_power_integral(f: Symbolic, q: float, w: FuncRep | None) -> float | None:
    """Closed form for a step f against ``w = c t^e`` (or no weight); None otherwise."""
    if not f.is_step:
        return None
    c, e = 1.0, 0.0
    if w is not None:
        ws = to_symbolic(w)
        if len(ws.pieces) != 1 or ws.pieces[0].lo != 0 or ws.pieces[0].hi < f.a \
                or len(ws.pieces[0].atoms) != 1 or not ws.pieces[0].atoms[0].is_pure_power:
            return None
        c, e = ws.pieces[0].atoms[0].coeff, ws.pieces[0].atoms[0].alpha
    if e <= -1.0:
        return None
    total = 0.0
    for p in f.pieces:
        v = abs(p.constant_value)
        if v:
            total += v**q * c * (p.hi ** (e + 1.0) - p.lo ** (e + 1.0)) / (e + 1.0)
    return total


def weighted_power_integral(f: FuncRep, q: float, w: FuncRep | None = None) -> float:
    """``integral of |f|^q w`` over (0, a); ``inf`` when divergent."""
    f = to_symbolic(f)
    fast = _step_power_integral(f, q, w)
    if fast is not None:
        return fast
    single = Symbolic(f.a, tuple(p for p in f.pieces if len(p.atoms) == 1))
    multi = [p for p in f.pieces if len(p.atoms) > 1]
    total = 0.0
    if single.pieces:
        g = power(absolute(single), q)
        if w is not None:
            g = multiply(g, w)
        res = integrate(g)
        if res.divergent:
            return INF if res.value > 0 else 0.0
        total += res.value
    for p in multi:
        def func(t, p=p):
            vals = np.abs(p.value(t, f.a)) ** q
            return vals * evaluate(w, t) if w is not None else vals

        tail = None
        if p.lo == 0:
            dom = dominant_atom(p.atoms)
            tail_at = dom ** q if dom is not None else None
            if w is not None and tail_at is not None:
                wd = dominant_atom(to_symbolic(w).pieces[0].atoms)
                tail_at = tail_at * wd
            if tail_at is not None:
                tail = (abs(tail_at.coeff), *tail_at.exponents)
        total += _q.integrate_callable(func, p.lo, p.hi, f.a, tail)
        if math.isinf(total):
            return INF
    return total


def _nodes_for(grid: GridSpec, *fs) -> np.ndarray:
    pts = [grid.points]
    for f in fs:
        if f is not None:
            pts.append(breakpoints(f))
    t = np.unique(np.concatenate(pts))
    return t[(t >= grid.floor) & (t <= grid.a)]


def ess_sup(g: FuncRep, grid: GridSpec | None = None) -> float:
    """Essential sup of a nonnegative function: grid, breakpoints, left limits, origin."""
    grid = grid or GridSpec(g.a)
    t = _nodes_for(grid, g)
    vals = np.maximum(evaluate(g, t), evaluate_left(g, t))
    best = float(np.max(vals)) if vals.size else 0.0
    if isinstance(g, Symbolic) and g.pieces and g.pieces[0].lo == 0:
        lim = limit_at_zero(g)
        if lim.kind == "infinite":
            return INF
        if lim.kind == "positive_finite":
            best = max(best, float(lim.value))
        # below the floor the first piece may still rise toward a finite limit
        lo_t = np.geomspace(grid.floor * 1e-6, grid.floor, 16, endpoint=False)
        best = max(best, float(np.max(evaluate(g, lo_t))))
    return best


def _fstar(f: FuncRep, grid: GridSpec | None) -> RearrangedFn:
    return f if isinstance(f, RearrangedFn) else rearrange(f, grid)


# --------------------------------------------------------------------------
# norms


def norm(spec: NormSpec, f, grid: GridSpec | None = None) -> float:
    """Norm of ``f`` (FuncRep or RearrangedFn) in ``spec``; ``inf`` if divergent."""
    grid = grid or GridSpec(spec.a)
    fs = _fstar(f, grid)
    return norm_of_rearranged(spec, fs, grid)


def norm_of_rearranged(spec: NormSpec, fs: RearrangedFn, grid: GridSpec) -> float:
    f = fs.base
    if not to_symbolic(f).pieces:
        return 0.0
    if isinstance(spec, Lebesgue):
        if math.isinf(spec.p):
            return ess_sup(f, grid)
        return weighted_power_integral(f, spec.p) ** (1.0 / spec.p)
    if isinstance(spec, LorentzKaramata):
        p, q = spec.p, spec.q
        ip = 0.0 if math.isinf(p) else 1.0 / p
        if math.isinf(q):
            g = multiply(atom(1.0, ip, a=f.a), spec.b, f)
            return ess_sup(g, grid)
        w = multiply(atom(1.0, q * ip - 1.0, a=f.a), power(spec.b, q))
        return weighted_power_integral(f, q, w) ** (1.0 / q)
    if isinstance(spec, Marcinkiewicz):
        ss = star_star(fs, grid)
        if ss.divergent:
            return INF
        return ess_sup(multiply(ss.base, spec.phi.f), grid)
    if isinstance(spec, LorentzEndpoint):
        return _endpoint_norm(spec, f, grid)
    if isinstance(spec, ClassicalLambda):
        if math.isinf(spec.q):
            return ess_sup(multiply(f, spec.v.v), grid)
        return weighted_power_integral(f, spec.q, spec.v.v) ** (1.0 / spec.q)
    if isinstance(spec, Intersection):
        return max(norm_of_rearranged(spec.A, fs, grid), norm_of_rearranged(spec.B, fs, grid))
    if isinstance(spec, Sum):
        return sum_norm(spec, fs, grid)["value"]
    if isinstance(spec, EnlargedY):
        from .marc_enlarge import norm_Y

        return norm_Y(spec.params, fs)
    raise TypeError(f"unknown norm spec {type(spec).__name__}")


def _endpoint_norm(spec: LorentzEndpoint, f: FuncRep, grid: GridSpec) -> float:
    phit = spec.majorant
    sym = to_symbolic(f)
    if sym.is_step:
        # Stieltjes sum; phi~(0) = 0 so a jump at the origin is included.
        total = 0.0
        for p in sym.pieces:
            lo_val = float(phit(p.lo)) if p.lo > 0 else 0.0
            total += p.constant_value * (float(phit(p.hi)) - lo_val)
        return total
    jump = phit.value_at_zero_plus()
    head = 0.0
    if jump > 0:
        lim = limit_at_zero(sym)
        if lim.kind == "infinite":
            return INF
        head = jump * (lim.value or 0.0)
    res = integrate(multiply(sym, derivative(phit.f)))
    if res.divergent:
        return INF
    return head + res.value


# --------------------------------------------------------------------------
# sums


def _truncations(fs: Symbolic, s: float, use_left: bool):
    """Pieces of ``min(f*, c)`` and ``(f* - c)_+`` for ``c = f*(s)`` (or f*(s-))."""
    c = float(evaluate_left(fs, s) if use_left else evaluate(fs, s))
    low = add(scale(indicator(s, fs.a), c), restrict(fs, s, fs.a))
    high = add(restrict(fs, 0.0, s), scale(indicator(s, fs.a), -c))
    return low, _clip_nonneg(high)


def _clip_nonneg(f: Symbolic) -> Symbolic:
    # (f* - c) on (0, s) is nonnegative up to rounding; drop negative constants
    pieces = []
    for p in f.pieces:
        if p.is_constant and p.constant_value <= 0:
            continue
        pieces.append(p)
    return Symbolic(f.a, tuple(pieces))


def _sum_candidates(fs: Symbolic, grid: GridSpec, extra: int) -> np.ndarray:
    bp = breakpoints(fs)
    geo = np.geomspace(grid.floor, grid.a, extra + 2)[1:-1]
    s = np.unique(np.concatenate([bp, geo]))
    return s[(s > 0) & (s < fs.a)]


def sum_norm(spec: Sum, f, grid: GridSpec | None = None, extra_points: int = 12) -> dict:
    """Infimum of ``||g||_A + ||h||_B`` over the truncation and split families.

    Families, for every candidate ``s`` (breakpoints of f* plus geometric
    points): the level truncation ``min(f*, f*(s)) + (f* - f*(s))_+`` (right
    and left values) and the horizontal split ``f* chi_(0,s) + f* chi_(s,a)``,
    each with both assignments of the parts to A and B, plus the trivial
    decompositions.
    """
    grid = grid or GridSpec(spec.a)
    fs = _fstar(f, grid)
    sym = to_symbolic(fs.base)
    A, B = spec.A, spec.B
    best = {"value": min(norm_of_rearranged(A, fs, grid), norm_of_rearranged(B, fs, grid)),
            "family": "trivial", "s": None}
    if not sym.pieces:
        best["value"] = 0.0
        return best
    for s in _sum_candidates(sym, grid, extra_points):
        pairs = [("split", restrict(sym, 0.0, s), restrict(sym, s, sym.a))]
        for left in (False, True):
            lo, hi = _truncations(sym, s, left)
            pairs.append(("truncation_left" if left else "truncation", lo, hi))
        for name, g, h in pairs:
            ng = {X: norm(X, g, grid) for X in (A, B)} if g.pieces else {A: 0.0, B: 0.0}
            nh = {X: norm(X, h, grid) for X in (A, B)} if h.pieces else {A: 0.0, B: 0.0}
            for val in (ng[A] + nh[B], ng[B] + nh[A]):
                if val < best["value"]:
                    best = {"value": float(val), "family": name, "s": float(s)}
    return best


def sum_norm_bruteforce(spec: Sum, lengths, values, trials: int = 2000, seed: int = 0,
                        grid: GridSpec | None = None) -> float:
    """Oracle: best of random cellwise splits ``f = theta f + (1 - theta) f``."""
    rng = np.random.default_rng(seed)
    lengths = np.asarray(lengths, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    a = float(edges[-1])
    grid = grid or GridSpec(a)
    best = INF
    thetas = np.concatenate([rng.integers(0, 2, size=(trials // 2, len(values))).astype(float),
                             rng.random((trials - trials // 2, len(values)))])
    for th in thetas:
        g = step_function(edges, values * th, a)
        h = step_function(edges, values * (1 - th), a)
        ng = norm(spec.A, g, grid) if g.pieces else 0.0
        nh = norm(spec.B, h, grid) if h.pieces else 0.0
        best = min(best, ng + nh)
    return float(best)


# --------------------------------------------------------------------------
# fundamental functions


def fundamental_function(spec: NormSpec, grid: GridSpec | None = None) -> QuasiconcaveFn:
    """``t -> ||chi_(0,t)||`` as a quasiconcave function (exact where closed forms exist)."""
    grid = grid or GridSpec(spec.a)
    a = spec.a
    if isinstance(spec, Lebesgue):
        return QuasiconcaveFn(atom(1.0, 0.0 if math.isinf(spec.p) else 1.0 / spec.p, a=a), grid)
    if isinstance(spec, Marcinkiewicz):
        return spec.phi
    if isinstance(spec, LorentzEndpoint):
        return spec.majorant
    if isinstance(spec, LorentzKaramata):
        p, q = spec.p, spec.q
        ip = 0.0 if math.isinf(p) else 1.0 / p
        b_at = _b_atom(spec.b)
        if not math.isinf(q) and b_at is not None and b_at.is_constant and ip > 0:
            c = (b_at.coeff ** q * p / q) ** (1.0 / q)
            return QuasiconcaveFn(atom(c, ip, a=a), grid)
        t = grid.points
        if math.isinf(q):
            g = multiply(atom(1.0, ip, a=a), spec.b)
            vals = np.maximum.accumulate(np.maximum(evaluate(g, t), evaluate_left(g, t)))
        else:
            from .funcrep import cumulative

            w = multiply(atom(1.0, q * ip - 1.0, a=a), power(spec.b, q))
            vals = cumulative(w, t) ** (1.0 / q)
        return quasiconcave_envelope(Tabulated(grid, vals), grid)
    if isinstance(spec, ClassicalLambda):
        t = grid.points
        if math.isinf(spec.q):
            vt = least_nondecreasing_majorant(spec.v, grid)
            return quasiconcave_envelope(Tabulated(grid, evaluate(vt, t)), grid)
        return quasiconcave_envelope(Tabulated(grid, spec.v.V(t) ** (1.0 / spec.q)), grid)
    if isinstance(spec, Intersection):
        fa, fb = fundamental_function(spec.A, grid), fundamental_function(spec.B, grid)
        t = grid.points
        return quasiconcave_envelope(Tabulated(grid, np.maximum(fa(t), fb(t))), grid)
    if isinstance(spec, Sum):
        fa, fb = fundamental_function(spec.A, grid), fundamental_function(spec.B, grid)
        t = grid.points
        # inf over splits chi_(0,u) + chi_(u,t) of phi_A(u) + phi_B(t - u), u on the grid
        u = t[None, :]
        tt = t[:, None]
        mask = u < tt
        diff = np.where(mask, tt - u, tt)
        cand = np.where(mask, fa(np.where(mask, u, tt)) + fb(diff), np.inf)
        vals = np.minimum(np.minimum(fa(t), fb(t)), np.min(cand, axis=1))
        return quasiconcave_envelope(Tabulated(grid, vals), grid)
    if isinstance(spec, EnlargedY):
        from .marc_enlarge import fundamental_Y

        return fundamental_Y(spec.params, grid)
    raise TypeError(f"unknown norm spec {type(spec).__name__}")


def _atom_of(f: FuncRep) -> PowerLogAtom | None:
    sym = to_symbolic(f)
    if not sym.pieces or sym.pieces[0].lo > 0:
        return None
    return dominant_atom(sym.pieces[0].atoms)


def _slower(x: PowerLogAtom, y: PowerLogAtom) -> bool:
    """True when x is eventually smaller than y at the origin (ties: smaller coeff)."""
    kx = (-x.alpha, x.beta, x.gamma, x.delta)
    ky = (-y.alpha, y.beta, y.gamma, y.delta)
    return kx < ky or (kx == ky and x.coeff <= y.coeff)


def fundamental_atom(spec: NormSpec) -> PowerLogAtom | None:
    """Power-log atom equivalent (up to constants) to the fundamental function near 0."""
    if isinstance(spec, Lebesgue):
        return PowerLogAtom(1.0, 0.0 if math.isinf(spec.p) else 1.0 / spec.p)
    if isinstance(spec, LorentzKaramata):
        b = _b_atom(spec.b) or _atom_of(spec.b)
        if b is None:
            return None
        p, q = spec.p, spec.q
        if not math.isinf(p):
            return PowerLogAtom(b.coeff, 1.0 / p, b.beta, b.gamma, b.delta)
        if math.isinf(q):
            # sup_{s<t} b(s): b itself when b -> 0, else its positive limit
            kind = atom_limit_kind(b)
            return b if kind == "zero" else PowerLogAtom(b.coeff)
        prim = asymptotic_primitive(PowerLogAtom(b.coeff ** q, -1.0, q * b.beta, q * b.gamma,
                                                 q * b.delta))
        return prim ** (1.0 / q) if prim is not None else None
    if isinstance(spec, (Marcinkiewicz, LorentzEndpoint)):
        # a tabulated phi only has fitted cell atoms, too coarse for exponent logic
        return None if isinstance(spec.phi.f, Tabulated) else _atom_of(spec.phi.f)
    if isinstance(spec, ClassicalLambda):
        v = _atom_of(spec.v.v)
        if v is None:
            return None
        if math.isinf(spec.q):
            return v if atom_limit_kind(v) == "zero" else PowerLogAtom(v.coeff)
        prim = asymptotic_primitive(v)
        return prim ** (1.0 / spec.q) if prim is not None else None
    if isinstance(spec, (Sum, Intersection)):
        x, y = fundamental_atom(spec.A), fundamental_atom(spec.B)
        if x is None or y is None:
            return None
        small = x if _slower(x, y) else y
        big = y if small is x else x
        return small if isinstance(spec, Sum) else big
    if isinstance(spec, EnlargedY):
        from .marc_enlarge import fundamental_Y_atom

        return fundamental_Y_atom(spec.params)
    return None


# --------------------------------------------------------------------------
# associates


def exact_associate(spec: NormSpec) -> NormSpec | None:
    """Closed-form associate for Lebesgue and unweighted Lorentz specs, else None."""
    def conj(x):
        if x == 1:
            return INF
        if math.isinf(x):
            return 1.0
        return x / (x - 1.0)

    if isinstance(spec, Lebesgue):
        return Lebesgue(conj(spec.p), spec.a)
    if isinstance(spec, LorentzKaramata):
        b = _b_atom(spec.b)
        if b is not None and b.is_constant and b.coeff == 1.0 and 1 < spec.p < INF:
            return LorentzKaramata(conj(spec.p), conj(spec.q), atom(1.0, a=spec.a))
    return None


def _dictionary(a: float, grid: GridSpec, size: int):
    for s in np.geomspace(grid.floor * 10, a, max(2, size)):
        yield indicator(float(min(s, a)), a)
    for theta in (0.0, 0.25, 0.5, 0.75, 0.9):
        for kappa in (-1.0, 0.0, 1.0, 2.0):
            if theta == 0 and kappa <= 0:
                continue
            yield atom(1.0, -theta, kappa, a=a)


def associate_lower_bound(spec: NormSpec, f: FuncRep, dictionary_size: int = 32,
                          grid: GridSpec | None = None) -> dict:
    """``max_g integral f* g* / ||g||`` over a dictionary of nonincreasing g."""
    grid = grid or GridSpec(spec.a)
    fs = rearrange(f, grid)
    best, arg = 0.0, None
    for g in _dictionary(spec.a, grid, dictionary_size):
        ng = norm(spec, g, grid)
        if not (0 < ng < INF):
            continue
        pair = integrate(multiply(fs.base, g))
        val = INF if pair.divergent else pair.value / ng
        if val > best:
            best, arg = val, funcrep_to_json(g)
    return {"value": best, "argmax": arg}


# --------------------------------------------------------------------------
# axiom spot checks


def _random_steps(rng, n, a):
    edges = np.linspace(0.0, a, n + 1)
    heights = rng.choice([1e-3, 1.0, 1e3], size=n) * rng.random(n)
    heights[rng.random(n) < 0.3] = 0.0
    return edges, heights


def check_ri_axioms(spec: NormSpec, samples: int = 50, seed: int = 0, rtol: float = 1e-9,
                    cells: int = 8, grid: GridSpec | None = None) -> ConditionReport:
    """Randomised spot checks of the r.i. norm axioms on equal-cell step functions."""
    a = spec.a
    grid = grid or GridSpec(a)
    rng = np.random.default_rng(seed)
    homog = tri = lattice = fatou = shuffle = True
    worst_tri = 0.0
    witness = None
    p5 = 0.0
    for _ in range(samples):
        e, x = _random_steps(rng, cells, a)
        _, y = _random_steps(rng, cells, a)
        f, g = step_function(e, x, a), step_function(e, y, a)
        if not f.pieces:
            continue
        nf = norm(spec, f, grid)
        ng = norm(spec, g, grid) if g.pieces else 0.0
        c = float(rng.uniform(0.1, 10.0))
        if abs(norm(spec, step_function(e, c * x, a), grid) - c * nf) > 1e-12 * max(1.0, c * nf):
            homog = False
        nfg = norm(spec, step_function(e, x + y, a), grid)
        excess = nfg / (nf + ng) - 1.0 if nf + ng > 0 else 0.0
        if excess > rtol:
            tri = False
            if excess > worst_tri:
                worst_tri, witness = excess, {"f": list(map(float, x)), "g": list(map(float, y))}
        if nfg < nf * (1 - rtol):
            lattice = False
        # Fatou on the increasing truncations min(f, level)
        levels = np.sort(x[x > 0])
        seq = [norm(spec, step_function(e, np.minimum(x, lv), a), grid) for lv in levels]
        if any(b < a_ * (1 - rtol) for a_, b in zip(seq, seq[1:])) or abs(seq[-1] - nf) > rtol * nf:
            fatou = False
        perm = rng.permutation(cells)
        if abs(norm(spec, step_function(e, x[perm], a), grid) - nf) > 1e-12 * nf:
            shuffle = False
        if nf > 0:
            p5 = max(p5, float(np.sum(x * np.diff(e))) / nf)
    p4 = norm(spec, indicator(a, a), grid)
    items = (
        ConditionItem("P1_homogeneity", homog),
        ConditionItem("P1_triangle", tri, worst_tri if not tri else None,
                      json.dumps(witness) if witness else ""),
        ConditionItem("P2_lattice", lattice),
        ConditionItem("P3_fatou", fatou),
        ConditionItem("P4_indicator_finite", bool(np.isfinite(p4)), p4),
        ConditionItem("P5_local_L1", bool(np.isfinite(p5)), p5),
        ConditionItem("P6_rearrangement_invariance", shuffle),
    )
    return ConditionReport(items, grid.floor)


# --------------------------------------------------------------------------
# JSON


def spec_from_json(obj, a: float | None = None) -> NormSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    a = float(obj.get("a", a if a is not None else 1.0))
    kind = obj["kind"].lower().replace("-", "_")
    validate = bool(obj.get("validate", True))
    if kind == "lebesgue":
        return Lebesgue(_parse_ext(obj["p"]), a)
    if kind in ("lorentz", "lorentz_zygmund", "lz"):
        return lorentz_zygmund(obj["p"], obj.get("q", obj["p"]), obj.get("alpha", 0.0),
                               obj.get("beta", 0.0), obj.get("delta", 0.0), a, validate)
    if kind == "lorentz_karamata":
        b = funcrep_from_json(obj["b"]) if "b" in obj else atom(1.0, 0.0, obj.get("alpha", 0.0),
                                                                  obj.get("beta", 0.0),
                                                                  obj.get("delta", 0.0), a=a)
        return LorentzKaramata(_parse_ext(obj["p"]), _parse_ext(obj["q"]), b, validate)
    if kind == "marcinkiewicz":
        return Marcinkiewicz(funcrep_from_json(obj["phi"]), obj.get("origin"))
    if kind == "lorentz_endpoint":
        return LorentzEndpoint(funcrep_from_json(obj["phi"]))
    if kind == "classical_lambda":
        v = funcrep_from_json(obj["v"])
        return ClassicalLambda(_parse_ext(obj["q"]), Weight(v, GridSpec(v.a)), validate)
    if kind in ("sum", "intersection"):
        A, B = (spec_from_json(x, a) for x in obj["parts"])
        return Sum(A, B) if kind == "sum" else Intersection(A, B)
    if kind == "enlarged_y":
        from .marc_enlarge import params_from_json

        return EnlargedY(params_from_json(obj["params"]), obj.get("origin"))
    raise ValueError(f"unknown norm spec kind {obj['kind']!r}")


def spec_to_json(spec: NormSpec) -> dict:
    if isinstance(spec, Lebesgue):
        return {"kind": "lebesgue", "p": _fmt(spec.p), "a": spec.a}
    if isinstance(spec, LorentzKaramata):
        ex = spec.log_exponents
        if ex is not None and spec.b.pieces[0].atoms[0].coeff == 1.0:
            return {"kind": "lorentz_zygmund", "p": _fmt(spec.p), "q": _fmt(spec.q),
                    "alpha": ex[0], "beta": ex[1], "delta": ex[2], "a": spec.a}
        return {"kind": "lorentz_karamata", "p": _fmt(spec.p), "q": _fmt(spec.q),
                "b": funcrep_to_json(spec.b), "a": spec.a}
    if isinstance(spec, Marcinkiewicz):
        d = {"kind": "marcinkiewicz", "phi": funcrep_to_json(spec.phi.f), "a": spec.a}
        if spec.origin:
            d["origin"] = spec.origin
        return d
    if isinstance(spec, LorentzEndpoint):
        return {"kind": "lorentz_endpoint", "phi": funcrep_to_json(spec.phi.f), "a": spec.a}
    if isinstance(spec, ClassicalLambda):
        return {"kind": "classical_lambda", "q": _fmt(spec.q), "v": funcrep_to_json(spec.v.v),
                "a": spec.a}
    if isinstance(spec, (Sum, Intersection)):
        return {"kind": "sum" if isinstance(spec, Sum) else "intersection",
                "parts": [spec_to_json(spec.A), spec_to_json(spec.B)], "a": spec.a}
    if isinstance(spec, EnlargedY):
        from .marc_enlarge import params_to_json

        d = {"kind": "enlarged_y", "params": params_to_json(spec.params), "a": spec.a}
        if spec.origin:
            d["origin"] = spec.origin
        return d
    raise TypeError(type(spec).__name__)
