"""Nonincreasing rearrangement f*, maximal function f**, classical inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .funcrep import (
    DEFAULT_RTOL,
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
    multiply,
    to_symbolic,
)

__all__ = [
    "RearrangedFn",
    "absolute",
    "is_nonincreasing",
    "rearrange",
    "rearrange_steps",
    "star_star",
    "hardy_littlewood_check",
    "hardy_lemma_check",
]

_SAMPLES_PER_PIECE = 48


@dataclass(frozen=True)
class RearrangedFn:
    """A nonincreasing function on (0, a] (f* or f**).

    ``divergent`` marks f** of a function whose primitive is infinite at the
    origin; ``base`` is then meaningless.
    """

    base: FuncRep
    certified_nonincreasing: bool = True
    divergent: bool = False

    @property
    def a(self) -> float:
        return self.base.a

    def __call__(self, t):
        if self.divergent:
            return np.full(np.shape(t), math.inf) if np.ndim(t) else math.inf
        return evaluate(self.base, t)


def _piece_samples(p: Piece, a: float) -> np.ndarray:
    lo = p.lo if p.lo > 0 else p.hi * 1e-12
    if p.hi / lo > 4:
        return np.geomspace(lo, p.hi, _SAMPLES_PER_PIECE, endpoint=False)
    return np.linspace(lo, p.hi, _SAMPLES_PER_PIECE, endpoint=False)


def absolute(f: FuncRep) -> FuncRep:
    """``|f|``; pieces that change sign must be affine (split at the root)."""
    if isinstance(f, Tabulated):
        if np.all(f.values >= 0):
            return f
        return Tabulated(f.grid, np.abs(f.values), f.nodes)
    if f.is_step:
        if np.all(f._constants >= 0):
            return f
        return Symbolic(f.a, tuple(p if p.constant_value >= 0 else
                                   Piece(p.lo, p.hi, tuple(at.scaled(-1.0) for at in p.atoms))
                                   for p in f.pieces))
    pieces = []
    for p in f.pieces:
        if all(at.coeff >= 0 for at in p.atoms):
            pieces.append(p)
            continue
        vals = p.value(_piece_samples(p, f.a), f.a)
        if np.all(vals >= 0):
            pieces.append(p)
            continue
        if np.all(vals <= 0):
            pieces.append(Piece(p.lo, p.hi, tuple(at.scaled(-1.0) for at in p.atoms)))
            continue
        c0, c1 = _affine_coeffs(p)
        root = min(max(-c0 / c1, p.lo), p.hi)
        for lo, hi in ((p.lo, root), (root, p.hi)):
            if hi > lo:
                sign = 1.0 if c0 + c1 * 0.5 * (lo + hi) >= 0 else -1.0
                pieces.append(Piece(lo, hi, tuple(at.scaled(sign) for at in p.atoms)))
    return Symbolic(f.a, tuple(pieces))


def _affine_coeffs(p: Piece) -> tuple[float, float]:
    c0 = c1 = 0.0
    for at in p.atoms:
        if not at.is_pure_power or at.alpha not in (0.0, 1.0):
            raise ValueError("sign-changing piece is not affine")
        if at.alpha == 0.0:
            c0 += at.coeff
        else:
            c1 += at.coeff
    return c0, c1


def is_nonincreasing(f: FuncRep, rtol: float = 1e-12) -> bool:
    """Sampled check of monotonicity inside pieces and across breakpoints."""
    if isinstance(f, Tabulated):
        return bool(np.all(np.diff(f.values) <= rtol * np.abs(f.values[:-1])))
    if f.is_step:
        # exact: constants in order, a gap counts as the value 0
        seq, prev_hi = [], 0.0
        for p in f.pieces:
            if p.lo > prev_hi:
                seq.append(0.0)
            seq.append(p.constant_value)
            prev_hi = p.hi
        if prev_hi < f.a:
            seq.append(0.0)
        v = np.array(seq)
        return bool(np.all(np.diff(v) <= rtol * np.abs(v[:-1]) + 1e-300))
    pts = [np.array([])]
    for p in f.pieces:
        pts.append(_piece_samples(p, f.a))
        pts.append(np.array([p.hi]))
    t = np.unique(np.concatenate(pts))
    t = t[(t > 0) & (t <= f.a)]
    right = evaluate(f, t)
    left = evaluate_left(f, t)
    seq = np.empty(2 * t.size)
    seq[0::2], seq[1::2] = left, right
    return bool(np.all(np.diff(seq) <= rtol * np.abs(seq[:-1]) + 1e-300))


def rearrange_steps(lengths, values, a: float | None = None) -> Symbolic:
    """Rearrangement of a step function given by cell lengths and values.

    Cells are sorted by value, descending and stable; zero cells are dropped.
    """
    lengths = np.asarray(lengths, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    a = float(lengths.sum()) if a is None else a
    order = np.argsort(-values, kind="stable")
    edges = np.concatenate([[0.0], np.cumsum(lengths[order])])
    pieces = []
    for k, i in enumerate(order):
        v = values[i]
        if v == 0 or edges[k + 1] <= edges[k]:
            continue
        if pieces and pieces[-1].atoms[0].coeff == v:
            pieces[-1] = Piece(pieces[-1].lo, float(edges[k + 1]), pieces[-1].atoms)
        else:
            pieces.append(Piece(float(edges[k]), float(min(edges[k + 1], a)), (PowerLogAtom(v),)))
    return Symbolic(a, tuple(pieces))


def _affine_rearrangement(f: Symbolic) -> Symbolic:
    """Exact f* of a nonnegative piecewise-affine f via its distribution function."""
    segs = []
    for p in f.pieces:
        c0, c1 = _affine_coeffs(p)
        segs.append((p.lo, p.hi, c0 + c1 * p.lo, c0 + c1 * p.hi))
    levels = sorted({max(v, 0.0) for s in segs for v in s[2:]} | {0.0}, reverse=True)

    def mu(lam, strict):
        # |{f > lam}| (strict) or |{f >= lam}|
        tot = 0.0
        for lo, hi, v0, v1 in segs:
            if v0 == v1:
                if v0 > lam or (not strict and v0 >= lam):
                    tot += hi - lo
                continue
            frac = (v1 - lam) / (v1 - v0) if v1 < v0 else (lam - v0) / (v1 - v0)
            frac = min(max(frac, 0.0), 1.0)
            tot += (hi - lo) * (frac if v1 < v0 else 1.0 - frac)
        return tot

    pieces = []
    for i, lam in enumerate(levels):
        if lam == 0:
            break
        s0, s1 = mu(lam, True), mu(lam, False)
        if s1 > s0:
            pieces.append(Piece(s0, s1, (PowerLogAtom(lam),)))
        nxt = levels[i + 1]
        s2 = mu(nxt, True)
        if s2 > s1:
            slope = (nxt - lam) / (s2 - s1)
            atoms = [PowerLogAtom(lam - slope * s1)]
            if slope:
                atoms.append(PowerLogAtom(slope, 1.0))
            pieces.append(Piece(s1, s2, tuple(at for at in atoms if at.coeff != 0)))
    return Symbolic(f.a, tuple(p for p in pieces if p.atoms))


def _cell_means(f: Symbolic, edges: np.ndarray) -> np.ndarray:
    cum = cumulative(f, edges[1:])
    return np.diff(np.concatenate([[0.0], cum])) / np.diff(edges)


def rearrange(f: FuncRep, grid: GridSpec | None = None) -> RearrangedFn:
    """Nonincreasing rearrangement of ``|f|``.

    Already nonincreasing input is returned unchanged.  Step functions are
    sorted exactly; piecewise-affine functions are inverted through their
    distribution function.  Anything else is replaced by its cell means on
    the geometric grid (plus breakpoints) and sorted; a leading piece that
    dominates the rest is kept verbatim so singular behaviour at the origin
    survives.
    """
    f = absolute(f)
    if is_nonincreasing(f):
        return RearrangedFn(f, True)
    sym = to_symbolic(f)
    if sym.is_step:
        lengths = [p.hi - p.lo for p in sym.pieces]
        return RearrangedFn(rearrange_steps(lengths, [p.constant_value for p in sym.pieces], sym.a))
    if sym.is_affine:
        return RearrangedFn(_affine_rearrangement(sym))
    grid = grid or GridSpec(sym.a)
    edges = np.unique(np.concatenate([[0.0], grid.points, breakpoints(sym)]))
    head = None
    first = sym.pieces[0] if sym.pieces and sym.pieces[0].lo == 0 else None
    if first is not None:
        cut = min(first.hi, grid.floor)
        rest_max = np.max(evaluate(sym, edges[edges >= cut][1:]))
        head_f = Symbolic(sym.a, (Piece(0.0, cut, first.atoms),))
        if is_nonincreasing(head_f) and evaluate_left(sym, cut) >= rest_max:
            head = Piece(0.0, cut, first.atoms)
            edges = edges[edges >= cut]
    lo_edge = edges[0]
    if lo_edge > 0:
        means = np.diff(cumulative(sym, edges)) / np.diff(edges)
    else:
        means = _cell_means(sym, edges)
    steps = rearrange_steps(np.diff(edges), means, sym.a - lo_edge)
    shifted = tuple(Piece(p.lo + lo_edge, min(p.hi + lo_edge, sym.a), p.atoms) for p in steps.pieces)
    pieces = ((head,) if head is not None else ()) + shifted
    return RearrangedFn(Symbolic(sym.a, pieces), True)


def _step_power_primitive(p: Piece):
    """Primitive atoms of a piece made of pure powers with alpha != -1, else None."""
    prim = []
    for at in p.atoms:
        if not at.is_pure_power or at.alpha == -1.0:
            return None
        prim.append(PowerLogAtom(at.coeff / (at.alpha + 1.0), at.alpha + 1.0))
    return prim


def star_star(fstar: RearrangedFn, grid: GridSpec | None = None) -> RearrangedFn:
    """``f**(t) = (1/t) * integral of f* over (0, t)``.

    Symbolic when every piece consists of pure powers (closed-form
    primitives), otherwise tabulated on the grid plus breakpoints.
    """
    if fstar.divergent:
        return fstar
    f = to_symbolic(fstar.base)
    if not f.pieces:
        return RearrangedFn(f, True)
    if integrate(f, 0.0, f.pieces[0].hi).divergent:
        return RearrangedFn(f, True, divergent=True)
    prims = [_step_power_primitive(p) for p in f.pieces]
    if all(pr is not None for pr in prims):
        los = np.array([p.lo for p in f.pieces] + [f.pieces[-1].hi])
        F = np.concatenate([[0.0], cumulative(f, los[1:])])
        pieces = []
        prev_hi = 0.0
        for k, (p, pr) in enumerate(zip(f.pieces, prims)):
            if p.lo > prev_hi:
                # gap: f* vanishes, f** = F/t
                pieces.append(Piece(prev_hi, p.lo, (PowerLogAtom(F[k], -1.0),)))
            P_lo = sum(at.coeff * p.lo**at.alpha for at in pr) if p.lo > 0 else 0.0
            atoms = [PowerLogAtom(at.coeff, at.alpha - 1.0) for at in pr]
            const = F[k] - P_lo
            if const:
                atoms.append(PowerLogAtom(const, -1.0))
            pieces.append(Piece(p.lo, p.hi, _merge(atoms)))
            prev_hi = p.hi
        if prev_hi < f.a:
            pieces.append(Piece(prev_hi, f.a, (PowerLogAtom(F[-1], -1.0),)))
        return RearrangedFn(Symbolic(f.a, tuple(pieces)), True)
    grid = grid or GridSpec(f.a)
    nodes = np.unique(np.concatenate([grid.points, breakpoints(f)]))
    nodes = nodes[(nodes >= grid.floor) & (nodes <= f.a)]
    vals = cumulative(f, nodes) / nodes
    return RearrangedFn(Tabulated(grid, vals, nodes), True)


def _merge(atoms):
    acc: dict = {}
    for at in atoms:
        acc[at.exponents] = acc.get(at.exponents, 0.0) + at.coeff
    return tuple(PowerLogAtom(c, *e) for e, c in acc.items() if c != 0)


def hardy_littlewood_check(f: FuncRep, g: FuncRep, rtol: float = DEFAULT_RTOL) -> dict:
    """``integral |f g| <= integral f* g*``."""
    lhs = integrate(multiply(absolute(f), absolute(g)))
    rhs = integrate(multiply(rearrange(f).base, rearrange(g).base))
    if rhs.divergent:
        return {"lhs": lhs.value, "rhs": math.inf, "holds": True, "rhs_divergent": True}
    return {
        "lhs": lhs.value,
        "rhs": rhs.value,
        "holds": bool(lhs.value <= rhs.value * (1 + rtol) + 1e-300),
        "rhs_divergent": False,
    }


def hardy_lemma_check(f: FuncRep, g: FuncRep, h: RearrangedFn, rtol: float = DEFAULT_RTOL,
                      grid: GridSpec | None = None) -> dict:
    """Premise: primitives of f below those of g; conclusion: integral f h <= integral g h.

    The premise is checked on the grid and at all breakpoints; for step
    functions the primitives are affine in between, so this is exact.
    """
    grid = grid or GridSpec(f.a)
    pts = np.unique(np.concatenate([grid.points, breakpoints(f), breakpoints(g), [f.a]]))
    pts = pts[pts > 0]
    F, G = cumulative(f, pts), cumulative(g, pts)
    scale_ = np.maximum(np.abs(F), np.abs(G))
    premise = bool(np.all(F <= G + rtol * scale_))
    lhs = integrate(multiply(f, h.base)).value
    rhs = integrate(multiply(g, h.base)).value
    conclusion = bool(lhs <= rhs + rtol * max(abs(lhs), abs(rhs)))
    return {"premise_holds": premise, "conclusion_holds": conclusion, "lhs": lhs, "rhs": rhs}
