"""Functions on (0, a]: power-log atoms, piecewise sums of atoms, tabulations.

Every scalar function in the toolkit is a :class:`Symbolic` (finitely many
pieces, each a sum of :class:`PowerLogAtom`) or a :class:`Tabulated` (values on
a geometric grid, log-log linear in between).  Tabulations convert losslessly
to symbolic pieces because a log-log linear cell is a single power ``c t**s``.

Pieces are half-open ``[lo, hi)``; the last piece also owns ``t = a``.
Outside every piece the function is zero.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import mpmath
import numpy as np

from . import quadrature as _q

__all__ = [
    "DEFAULT_RTOL",
    "GridSpec",
    "PowerLogAtom",
    "Piece",
    "Symbolic",
    "Tabulated",
    "FuncRep",
    "IntegralResult",
    "LimitVerdict",
    "ell",
    "ell2",
    "ell3",
    "atom",
    "constant",
    "indicator",
    "step_function",
    "to_symbolic",
    "evaluate",
    "evaluate_left",
    "integrate",
    "cumulative",
    "tail_integrals",
    "multiply",
    "scale",
    "add",
    "power",
    "reciprocal",
    "derivative",
    "restrict",
    "breakpoints",
    "tabulate",
    "limit_at_zero",
    "dominant_atom",
    "atom_limit_kind",
    "asymptotic_primitive",
    "funcrep_from_json",
    "funcrep_to_json",
]

DEFAULT_RTOL = 1e-9
FLOOR_ENV = "RIKIT_GRID_FLOOR"


class DomainError(ValueError):
    """Evaluation point outside (0, a]."""


# --------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class GridSpec:
    """Geometric grid on [floor, a]."""

    a: float = 1.0
    floor: float | None = None
    points_per_decade: int = 64

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.floor is None:
            rel = float(os.environ.get(FLOOR_ENV, "1e-12"))
            object.__setattr__(self, "floor", rel * self.a)
        if not 0 < self.floor < self.a:
            raise ValueError("need 0 < floor < a")
        if self.points_per_decade < 8:
            raise ValueError("points_per_decade must be at least 8")

    @cached_property
    def points(self) -> np.ndarray:
        n = int(math.ceil(math.log10(self.a / self.floor) * self.points_per_decade)) + 1
        pts = np.geomspace(self.floor, self.a, n)
        pts[0], pts[-1] = self.floor, self.a
        pts.flags.writeable = False
        return pts

    @property
    def ratio(self) -> float:
        return 10.0 ** (1.0 / self.points_per_decade)

    def to_dict(self):
        return {"a": self.a, "floor": self.floor, "points_per_decade": self.points_per_decade}


# --------------------------------------------------------------------------
# atoms


def ell(t, a):
    """``l(t) = log(e a / t)``."""
    return 1.0 + np.log(a / np.asarray(t, dtype=float))


def ell2(t, a):
    return 1.0 + np.log(ell(t, a))


def ell3(t, a):
    return 1.0 + np.log(ell2(t, a))


@dataclass(frozen=True)
class PowerLogAtom:
    """``coeff * t**alpha * l**beta * ll**gamma * lll**delta``."""

    coeff: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0

    @property
    def exponents(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    @property
    def is_constant(self) -> bool:
        return self.exponents == (0.0, 0.0, 0.0, 0.0)

    @property
    def is_pure_power(self) -> bool:
        return self.beta == 0 and self.gamma == 0 and self.delta == 0

    def __call__(self, t, a: float):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(self.coeff))
        if self.coeff == 0:
            return out
        if self.alpha:
            out = out * t**self.alpha
        if self.beta or self.gamma or self.delta:
            l1 = ell(t, a)
            if self.beta:
                out = out * l1**self.beta
            if self.gamma or self.delta:
                l2 = 1.0 + np.log(l1)
                if self.gamma:
                    out = out * l2**self.gamma
                if self.delta:
                    out = out * (1.0 + np.log(l2)) ** self.delta
        return out

    def eval_mp(self, t, a):
        """Extended-range evaluation (``t`` may be far below the float range)."""
        t = mpmath.mpf(t)
        val = mpmath.mpf(self.coeff)
        if self.alpha:
            val *= t**self.alpha
        if self.beta or self.gamma or self.delta:
            l1 = 1 + mpmath.log(a / t)
            l2 = 1 + mpmath.log(l1)
            val *= l1**self.beta * l2**self.gamma * (1 + mpmath.log(l2)) ** self.delta
        return val

    def __mul__(self, other: "PowerLogAtom") -> "PowerLogAtom":
        return PowerLogAtom(
            self.coeff * other.coeff,
            self.alpha + other.alpha,
            self.beta + other.beta,
            self.gamma + other.gamma,
            self.delta + other.delta,
        )

    def __pow__(self, q: float) -> "PowerLogAtom":
        if self.coeff < 0 and q != int(q):
            raise ValueError("fractional power of a negative atom")
        return PowerLogAtom(
            self.coeff**q, self.alpha * q, self.beta * q, self.gamma * q, self.delta * q
        )

    def scaled(self, c: float) -> "PowerLogAtom":
        return PowerLogAtom(self.coeff * c, *self.exponents)

    def to_dict(self):
        return {"c": self.coeff, "alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "delta": self.delta}


def _merge_atoms(atoms: Iterable[PowerLogAtom]) -> tuple[PowerLogAtom, ...]:
    acc: dict[tuple, float] = {}
    for at in atoms:
        acc[at.exponents] = acc.get(at.exponents, 0.0) + at.coeff
    return tuple(PowerLogAtom(c, *e) for e, c in acc.items() if c != 0)


# --------------------------------------------------------------------------
# representations


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    atoms: tuple[PowerLogAtom, ...]

    def value(self, t, a):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for at in self.atoms:
            out = out + at(t, a)
        return out

    @property
    def is_constant(self) -> bool:
        return all(at.is_constant for at in self.atoms)

    @property
    def constant_value(self) -> float:
        return float(sum(at.coeff for at in self.atoms))


@dataclass(frozen=True)
class Symbolic:
    a: float
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        prev = 0.0
        for p in self.pieces:
            if not (prev <= p.lo < p.hi <= self.a * (1 + 1e-15)):
                raise ValueError(f"bad piece [{p.lo}, {p.hi}) on (0, {self.a}]")
            prev = p.hi

    @cached_property
    def _los(self) -> np.ndarray:
        return np.array([p.lo for p in self.pieces])

    @cached_property
    def _his(self) -> np.ndarray:
        return np.array([p.hi for p in self.pieces])

    @cached_property
    def is_step(self) -> bool:
        return all(p.is_constant for p in self.pieces)

    @cached_property
    def _constants(self) -> np.ndarray:
        return np.array([p.constant_value for p in self.pieces])

    @property
    def is_affine(self) -> bool:
        return all(
            at.is_pure_power and at.alpha in (0.0, 1.0) for p in self.pieces for at in p.atoms
        )


@dataclass(frozen=True)
class Tabulated:
    """Values at nodes, log-log linear in between.

    ``nodes`` defaults to the grid points; a cell with a non-positive endpoint
    value is interpolated linearly.  Below the first node the first cell is
    extended (as a power law when both endpoint values are positive).
    """

    grid: GridSpec
    values: np.ndarray
    nodes: np.ndarray | None = None

    def __post_init__(self):
        nodes = self.grid.points if self.nodes is None else np.asarray(self.nodes, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != nodes.shape:
            raise ValueError("values and nodes differ in length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("tabulated values must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "nodes", nodes)

    @property
    def a(self) -> float:
        return self.grid.a


FuncRep = Union[Symbolic, Tabulated]

_MAX_CELL_SLOPE = 60.0


def _cell_atoms(t0, t1, v0, v1) -> tuple[PowerLogAtom, ...]:
    if v0 > 0 and v1 > 0:
        s = math.log(v1 / v0) / math.log(t1 / t0)
        if abs(s) <= _MAX_CELL_SLOPE:
            if s == 0:
                return (PowerLogAtom(v0),)
            return (PowerLogAtom(v0 * t0 ** (-s), s),)
    slope = (v1 - v0) / (t1 - t0)
    return _merge_atoms([PowerLogAtom(v0 - slope * t0), PowerLogAtom(slope, 1.0)])


def _tab_to_symbolic(f: Tabulated) -> Symbolic:
    n, v = f.nodes, f.values
    pieces = []
    head = _cell_atoms(n[0], n[1], v[0], v[1]) if len(n) > 1 else (PowerLogAtom(v[0]),)
    if head:
        pieces.append(Piece(0.0, float(n[0]), head))
    for i in range(len(n) - 1):
        at = _cell_atoms(n[i], n[i + 1], v[i], v[i + 1])
        if at:
            pieces.append(Piece(float(n[i]), float(n[i + 1]), at))
    return Symbolic(f.a, tuple(pieces))


def to_symbolic(f: FuncRep) -> Symbolic:
    if isinstance(f, Symbolic):
        return f
    cached = getattr(f, "_sym_cache", None)
    if cached is None:
        cached = _tab_to_symbolic(f)
        object.__setattr__(f, "_sym_cache", cached)
    return cached


# --------------------------------------------------------------------------
# builders


def atom(c=1.0, alpha=0.0, beta=0.0, gamma=0.0, delta=0.0, a=1.0, lo=0.0, hi=None) -> Symbolic:
    """A single atom on ``[lo, hi)`` (default the whole interval)."""
    hi = a if hi is None else hi
    return Symbolic(a, (Piece(lo, hi, (PowerLogAtom(c, alpha, beta, gamma, delta),)),))


def constant(c: float, a: float = 1.0) -> Symbolic:
    return atom(c, a=a)


def indicator(s: float, a: float = 1.0, lo: float = 0.0) -> Symbolic:
    """Characteristic function of ``[lo, s)``."""
    if not 0 <= lo < s <= a:
        raise ValueError("need 0 <= lo < s <= a")
    return Symbolic(a, (Piece(lo, s, (PowerLogAtom(1.0),)),))


def step_function(edges: Sequence[float], values: Sequence[float], a: float | None = None) -> Symbolic:
    """Step function with ``values[i]`` on ``[edges[i], edges[i+1])``."""
    edges = [float(e) for e in edges]
    if len(edges) != len(values) + 1:
        raise ValueError("need len(edges) == len(values) + 1")
    a = edges[-1] if a is None else a
    pieces = tuple(
        Piece(edges[i], edges[i + 1], (PowerLogAtom(float(v)),) if v != 0 else ())
        for i, v in enumerate(values)
        if edges[i + 1] > edges[i]
    )
    return Symbolic(a, tuple(p for p in pieces if p.atoms))


# --------------------------------------------------------------------------
# evaluation


def _check_domain(t, a):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > a * (1 + 1e-12)):
        raise DomainError("evaluation point outside (0, a]")
    return t


def _eval_symbolic(f: Symbolic, t: np.ndarray, left: bool) -> np.ndarray:
    out = np.zeros(t.shape)
    if not f.pieces:
        return out
    if left:
        idx = np.searchsorted(f._his, t, side="left")
        idx_ok = idx < len(f.pieces)
        safe = np.where(idx_ok, idx, 0)
        inside = idx_ok & (t > f._los[safe])
    else:
        idx = np.searchsorted(f._los, t, side="right") - 1
        safe = np.where(idx >= 0, idx, 0)
        inside = (idx >= 0) & (t < f._his[safe])
        at_end = (t >= f.a) & (idx == len(f.pieces) - 1) & (f._his[-1] >= f.a)
        inside |= at_end
    for k in np.unique(safe[inside]):
        m = inside & (safe == k)
        out[m] = f.pieces[k].value(t[m], f.a)
    return out


def _eval_tabulated(f: Tabulated, t: np.ndarray) -> np.ndarray:
    n, v = f.nodes, f.values
    if len(n) == 1:
        return np.full(t.shape, v[0])
    i = np.clip(np.searchsorted(n, t, side="right") - 1, 0, len(n) - 2)
    t0, t1, v0, v1 = n[i], n[i + 1], v[i], v[i + 1]
    out = np.empty(t.shape)
    exact = t == t0
    out[exact] = v0[exact]
    pos = (v0 > 0) & (v1 > 0) & ~exact
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.log(v1[pos] / v0[pos]) / np.log(t1[pos] / t0[pos])
        out[pos] = v0[pos] * np.exp(s * np.log(t[pos] / t0[pos]))
    lin = ~pos & ~exact
    out[lin] = v0[lin] + (v1[lin] - v0[lin]) * (t[lin] - t0[lin]) / (t1[lin] - t0[lin])
    end = t >= n[-1]
    out[end] = v[-1]
    return out


def evaluate(f: FuncRep, t):
    """Pointwise value of ``f`` at ``t`` in (0, a] (scalar or array)."""
    scalar = np.isscalar(t)
    t = _check_domain(np.atleast_1d(t), f.a)
    out = _eval_symbolic(f, t, False) if isinstance(f, Symbolic) else _eval_tabulated(f, t)
    return float(out[0]) if scalar else out


def evaluate_left(f: FuncRep, t):
    """Left limit ``f(t-)``; equal to :func:`evaluate` except at jumps."""
    scalar = np.isscalar(t)
    t = _check_domain(np.atleast_1d(t), f.a)
    out = _eval_symbolic(f, t, True) if isinstance(f, Symbolic) else _eval_tabulated(f, t)
    return float(out[0]) if scalar else out


def evaluate_mp(f: Symbolic, t):
    """Extended-range evaluation of a symbolic function."""
    for p in f.pieces:
        if p.lo <= t < p.hi or (t == f.a and p.hi >= f.a):
            return mpmath.fsum(at.eval_mp(t, f.a) for at in p.atoms)
    if f.pieces and f.pieces[0].lo == 0 and 0 < t < f.pieces[0].hi:
        return mpmath.fsum(at.eval_mp(t, f.a) for at in f.pieces[0].atoms)
    return mpmath.mpf(0)


def breakpoints(f: FuncRep) -> np.ndarray:
    """Interior points where the representation changes formula."""
    if isinstance(f, Tabulated):
        return np.asarray(f.nodes)
    pts = {p.lo for p in f.pieces} | {p.hi for p in f.pieces}
    return np.array(sorted(x for x in pts if 0 < x < f.a))


# --------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class IntegralResult:
    value: float
    divergent: bool = False
    method: str = "exact"

    def __float__(self):
        return float(self.value)


def _rows(f: Symbolic, edges: np.ndarray):
    """Atoms of ``f`` restricted to consecutive cells of ``edges``.

    Returns arrays (cell index, c, alpha, beta, gamma, delta, lo, hi, piece index).
    """
    cells, cs, ex, los, his, pids = [], [], [], [], [], []
    for pid, p in enumerate(f.pieces):
        i0 = max(0, int(np.searchsorted(edges, p.lo, side="right")) - 1)
        for i in range(i0, len(edges) - 1):
            lo, hi = max(edges[i], p.lo), min(edges[i + 1], p.hi)
            if edges[i] >= p.hi:
                break
            if hi <= lo:
                continue
            for at in p.atoms:
                cells.append(i)
                cs.append(at.coeff)
                ex.append(at.exponents)
                los.append(lo)
                his.append(hi)
                pids.append(pid)
    ex = np.array(ex, dtype=float).reshape(-1, 4)
    return (np.array(cells, dtype=int), np.array(cs, dtype=float), ex,
            np.array(los), np.array(his), np.array(pids, dtype=int))


def _step_values(f: Symbolic, mids: np.ndarray) -> np.ndarray:
    """Values of a step function at interior points (0 in gaps)."""
    if not f.pieces:
        return np.zeros(mids.shape)
    k = np.searchsorted(f._los, mids, side="right") - 1
    kc = np.clip(k, 0, None)
    vals = f._constants[kc]
    return np.where((k >= 0) & (mids < f._his[kc]), vals, 0.0)


def _step_cell_integrals(f: Symbolic, edges: np.ndarray) -> np.ndarray:
    # constant pieces: value times overlap length, no quadrature
    inner = np.concatenate([f._los, f._his]) if f.pieces else np.empty(0)
    inner = inner[(inner > edges[0]) & (inner < edges[-1])]
    knots = np.unique(np.concatenate([edges, inner]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    cell = np.searchsorted(edges, mids, side="right") - 1
    return np.bincount(cell, weights=_step_values(f, mids) * np.diff(knots), minlength=len(edges) - 1)


def _cell_integrals(f: FuncRep, edges: np.ndarray):
    """Integral of ``f`` over each cell of ``edges`` plus divergence flags."""
    f = to_symbolic(f)
    ncell = len(edges) - 1
    if f.is_step:
        return _step_cell_integrals(f, edges), np.zeros(ncell, dtype=bool)
    cells, cs, ex, los, his, pids = _rows(f, edges)
    vals = np.zeros(ncell)
    div = np.zeros(ncell, dtype=bool)
    if cells.size == 0:
        return vals, div
    v, d = _q.integrate_rows(cs, ex[:, 0], ex[:, 1], ex[:, 2], ex[:, 3], los, his, f.a)
    if np.any(d):
        # The dominant atom of the piece decides the sign of a divergent sum.
        for cell in np.unique(cells[d]):
            m = cells == cell
            dom = dominant_atom([PowerLogAtom(c, *e) for c, e in zip(cs[m], ex[m])])
            vals[cell] = math.copysign(math.inf, dom.coeff if dom else 1.0)
            div[cell] = True
        ok = ~np.isin(cells, cells[d])
        vals += np.bincount(cells[ok], weights=v[ok], minlength=ncell)
    else:
        vals = np.bincount(cells, weights=v, minlength=ncell)
    return vals, div


def integrate(f: FuncRep, lo: float = 0.0, hi: float | None = None) -> IntegralResult:
    """Integral of ``f`` over ``[lo, hi]`` (default the whole interval)."""
    hi = f.a if hi is None else hi
    if not 0 <= lo <= hi <= f.a * (1 + 1e-12):
        raise DomainError("need 0 <= lo <= hi <= a")
    if hi == lo:
        return IntegralResult(0.0)
    vals, div = _cell_integrals(f, np.array([lo, hi], dtype=float))
    if div[0]:
        return IntegralResult(float(vals[0]), True)
    return IntegralResult(float(vals[0]))


def cumulative(f: FuncRep, points) -> np.ndarray:
    """``F(p) = integral of f over (0, p)`` for each point; ``inf`` where divergent."""
    points = np.asarray(points, dtype=float)
    edges = np.unique(np.concatenate([[0.0], points, breakpoints(f)]))
    edges = edges[edges <= points.max()] if points.size else edges
    vals, div = _cell_integrals(f, edges)
    csum = np.cumsum(vals)
    if np.any(div):
        first = np.argmax(div)
        csum[first:] = vals[first]
    out = np.concatenate([[0.0], csum])
    return out[np.searchsorted(edges, points)]


def tail_integrals(f: FuncRep, points) -> np.ndarray:
    """``integral of f over (p, a)`` for each point ``p > 0`` (always finite)."""
    points = np.asarray(points, dtype=float)
    if np.any(points <= 0):
        raise DomainError("tail integrals need p > 0")
    edges = np.unique(np.concatenate([points, breakpoints(f), [f.a]]))
    edges = edges[edges >= points.min()]
    vals, _ = _cell_integrals(f, edges)
    rev = np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])
    return rev[np.searchsorted(edges, points)]


# --------------------------------------------------------------------------
# algebra


def _common_edges(fs: Sequence[Symbolic]) -> np.ndarray:
    pts = {0.0, fs[0].a}
    for f in fs:
        for p in f.pieces:
            pts.add(p.lo)
            pts.add(p.hi)
    return np.array(sorted(pts))


def _piece_at(f: Symbolic, mid: float) -> Piece | None:
    if not f.pieces:
        return None
    k = int(np.searchsorted(f._los, mid, side="right")) - 1
    if k >= 0 and mid < f.pieces[k].hi:
        return f.pieces[k]
    return None


def _combine(fs: Sequence[FuncRep], op, step_op=None) -> Symbolic:
    syms = [to_symbolic(f) for f in fs]
    a = syms[0].a
    if any(abs(s.a - a) > 1e-12 * a for s in syms):
        raise ValueError("functions live on different intervals")
    edges = _common_edges(syms)
    if step_op is not None and all(f.is_step for f in syms):
        lo, hi = edges[:-1], edges[1:]
        keep = hi > lo
        lo, hi = lo[keep], hi[keep]
        vals = step_op([_step_values(f, 0.5 * (lo + hi)) for f in syms])
        return Symbolic(a, tuple(Piece(float(x), float(y), (PowerLogAtom(float(v)),))
                                 for x, y, v in zip(lo, hi, vals) if v != 0))
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        parts = [_piece_at(s, mid) for s in syms]
        atoms = op([p.atoms if p is not None else () for p in parts])
        if atoms:
            pieces.append(Piece(float(lo), float(hi), atoms))
    return Symbolic(a, tuple(pieces))


def multiply(*fs: FuncRep) -> Symbolic:
    def op(lists):
        acc = (PowerLogAtom(1.0),)
        for atoms in lists:
            acc = _merge_atoms(x * y for x in acc for y in atoms)
            if not acc:
                return ()
        return acc

    return _combine(fs, op, lambda vs: np.prod(vs, axis=0))


def add(*fs: FuncRep) -> Symbolic:
    return _combine(fs, lambda lists: _merge_atoms(at for atoms in lists for at in atoms),
                    lambda vs: np.sum(vs, axis=0))


def scale(f: FuncRep, c: float) -> Symbolic:
    f = to_symbolic(f)
    if c == 0:
        return Symbolic(f.a, ())
    return Symbolic(f.a, tuple(Piece(p.lo, p.hi, tuple(at.scaled(c) for at in p.atoms))
                               for p in f.pieces))


class NotSingleAtom(ValueError):
    """A piece holds several atoms where a single atom is required."""


def power(f: FuncRep, q: float) -> Symbolic:
    """``f**q`` for functions whose pieces are single atoms."""
    f = to_symbolic(f)
    pieces = []
    for p in f.pieces:
        if len(p.atoms) > 1:
            raise NotSingleAtom("power needs single-atom pieces")
        if p.atoms:
            pieces.append(Piece(p.lo, p.hi, (p.atoms[0] ** q,)))
    return Symbolic(f.a, tuple(pieces))


def reciprocal(f: FuncRep) -> Symbolic:
    """``1/f`` on the pieces of ``f`` (single-atom pieces, nonvanishing)."""
    f = to_symbolic(f)
    if not f.pieces or f.pieces[0].lo > 0 or any(
        f.pieces[i].hi < f.pieces[i + 1].lo for i in range(len(f.pieces) - 1)
    ) or f.pieces[-1].hi < f.a:
        raise ValueError("reciprocal needs a function without gaps")
    return power(f, -1.0)


def _atom_derivative(at: PowerLogAtom) -> list[PowerLogAtom]:
    # d/dt of t^al l^be ll^ga lll^de, using dl/dt = -1/t, dll/dt = -1/(t l), dlll/dt = -1/(t l ll)
    c, al, be, ga, de = at.coeff, *at.exponents
    out = []
    if al:
        out.append(PowerLogAtom(c * al, al - 1, be, ga, de))
    if be:
        out.append(PowerLogAtom(-c * be, al - 1, be - 1, ga, de))
    if ga:
        out.append(PowerLogAtom(-c * ga, al - 1, be - 1, ga - 1, de))
    if de:
        out.append(PowerLogAtom(-c * de, al - 1, be - 1, ga - 1, de - 1))
    return out


def derivative(f: FuncRep) -> Symbolic:
    """Pointwise derivative inside each piece (jumps are ignored)."""
    f = to_symbolic(f)
    pieces = []
    for p in f.pieces:
        atoms = _merge_atoms(d for at in p.atoms for d in _atom_derivative(at))
        if atoms:
            pieces.append(Piece(p.lo, p.hi, atoms))
    return Symbolic(f.a, tuple(pieces))


def restrict(f: FuncRep, lo: float, hi: float) -> Symbolic:
    """``f`` multiplied by the indicator of ``[lo, hi)``."""
    f = to_symbolic(f)
    pieces = []
    for p in f.pieces:
        l, h = max(lo, p.lo), min(hi, p.hi)
        if h > l:
            pieces.append(Piece(l, h, p.atoms))
    return Symbolic(f.a, tuple(pieces))


def tabulate(f: FuncRep, grid: GridSpec, extra=None) -> Tabulated:
    """Sample ``f`` on the grid (plus optional extra nodes)."""
    nodes = grid.points
    if extra is not None and len(extra):
        nodes = np.unique(np.concatenate([nodes, np.asarray(extra, dtype=float)]))
        nodes = nodes[(nodes >= grid.floor) & (nodes <= grid.a)]
    return Tabulated(grid, evaluate(f, nodes), None if extra is None else nodes)


# --------------------------------------------------------------------------
# asymptotics at the origin


def _growth_key(at: PowerLogAtom):
    # Larger key = faster growth as t -> 0+.
    return (-at.alpha, at.beta, at.gamma, at.delta)


def dominant_atom(atoms: Iterable[PowerLogAtom]) -> PowerLogAtom | None:
    """Atom that dominates a sum near the origin (cancellations merged first)."""
    merged = [at for at in _merge_atoms(atoms) if at.coeff != 0]
    if not merged:
        return None
    return max(merged, key=_growth_key)


def atom_limit_kind(at: PowerLogAtom | None) -> str:
    """``zero``, ``positive_finite`` (or negative), or ``infinite`` as t -> 0+."""
    if at is None or at.coeff == 0:
        return "zero"
    for k in _growth_key(at):
        if k > 0:
            return "infinite"
        if k < 0:
            return "zero"
    return "positive_finite"


def asymptotic_primitive(at: PowerLogAtom) -> PowerLogAtom | None:
    """Atom equivalent near 0 to ``t -> integral of at over (0, t)``; None if divergent."""
    c, al, be, ga, de = at.coeff, *at.exponents
    if al > -1:
        return PowerLogAtom(c / (al + 1), al + 1, be, ga, de)
    if al < -1:
        return None
    if be < -1:
        return PowerLogAtom(c / (-be - 1), 0.0, be + 1, ga, de)
    if be > -1:
        return None
    if ga < -1:
        return PowerLogAtom(c / (-ga - 1), 0.0, 0.0, ga + 1, de)
    if ga > -1:
        return None
    if de < -1:
        return PowerLogAtom(c / (-de - 1), 0.0, 0.0, 0.0, de + 1)
    return None


@dataclass(frozen=True)
class LimitVerdict:
    """Classification of ``lim_{t->0+}`` of a ratio.

    ``kind`` is one of zero, positive_finite, infinite, oscillating, inconclusive.
    """

    kind: str
    value: float | None = None
    liminf: float | None = None
    limsup: float | None = None
    method: str = "exponents"
    floor: float | None = None
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"kind": self.kind, "method": self.method}
        for k in ("value", "liminf", "limsup", "floor", "tolerance"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        if self.detail:
            d["detail"] = self.detail
        return d


def _symbolic_limit(f: Symbolic) -> LimitVerdict:
    if not f.pieces or f.pieces[0].lo > 0:
        return LimitVerdict("zero", 0.0)
    dom = dominant_atom(f.pieces[0].atoms)
    kind = atom_limit_kind(dom)
    value = dom.coeff if kind == "positive_finite" else (0.0 if kind == "zero" else None)
    return LimitVerdict(kind, value, detail={"dominant": dom.to_dict() if dom else None})


_SLOPE_TOL = 0.02


def _local_slopes(x, z, width):
    """Least-squares slopes of z against x on consecutive windows of ``width`` points."""
    out_s, out_c = [], []
    for i in range(0, len(x) - width + 1, max(1, width // 2)):
        xs, zs = x[i:i + width], z[i:i + width]
        A = np.vstack([xs, np.ones_like(xs)]).T
        (s, _), *_ = np.linalg.lstsq(A, zs, rcond=None)
        out_s.append(s)
        out_c.append(i + width // 2)
    return np.array(out_s), np.array(out_c)


def _extrapolated_exponent(x, z, corr):
    """Slope of z in x, extrapolated to corr -> 0 (linear in corr)."""
    s, centers = _local_slopes(x, z, max(8, len(x) // 10))
    c = corr[centers]
    if len(s) < 3 or np.ptp(c) == 0:
        return float(np.mean(s))
    A = np.vstack([c, np.ones_like(c)]).T
    (_, s0), *_ = np.linalg.lstsq(A, s, rcond=None)
    return float(s0)


def _oscillation(z, threshold):
    """Number of reversals of amplitude above ``threshold`` along z."""
    reversals, direction = 0, 0
    ext = z[0]
    for v in z[1:]:
        if direction >= 0 and v < ext - threshold:
            reversals += direction > 0
            direction, ext = -1, v
        elif direction <= 0 and v > ext + threshold:
            reversals += direction < 0
            direction, ext = 1, v
        elif (direction >= 0 and v > ext) or (direction < 0 and v < ext):
            ext = v
    return reversals


def _tabulated_limit(f: Tabulated, decades: float) -> LimitVerdict:
    n, v = f.nodes, f.values
    floor = float(n[0])
    sel = n <= floor * 10.0**decades
    t, y = n[sel], v[sel]
    base = dict(method=f"loglog-extrapolation[{decades:g} decades]", floor=floor,
                tolerance=_SLOPE_TOL)
    if len(t) < 16:
        return LimitVerdict("inconclusive", **base, detail={"reason": "too few nodes"})
    if np.all(y == 0):
        return LimitVerdict("zero", 0.0, **base)
    if np.any(y <= 0):
        if np.all(y <= 0) or np.min(y) == 0:
            return LimitVerdict("oscillating", liminf=float(y.min()), limsup=float(y.max()),
                                **base)
    z = np.log(y)
    if _oscillation(z[::-1], math.log(2.0)) >= 2:
        return LimitVerdict("oscillating", liminf=float(y.min()), limsup=float(y.max()), **base)
    a = f.a
    x = np.log(t)
    l1 = ell(t, a)
    l2 = 1.0 + np.log(l1)
    l3 = 1.0 + np.log(l2)
    levels = [(x, 1.0 / l1), (np.log(l1), 1.0 / l2), (np.log(l2), 1.0 / l3), (np.log(l3), 1.0 / l2)]
    # Log levels are fitted three ways: extrapolated in 1/l, extrapolated in
    # the level's own correction, and the raw mean slope.
    # A level decides only when both fits agree; mixed evidence makes the
    # final answer inconclusive rather than guessed.
    exps, uncertain = [], False
    for level, (xv, corr) in enumerate(levels):
        fits = [_extrapolated_exponent(xv, z, 1.0 / l1)]
        if level > 0:
            fits.append(_extrapolated_exponent(xv, z, corr))
            fits.append(float(_local_slopes(xv, z, len(xv))[0][0]))
        exps.append(fits)
        big = [abs(e) > _SLOPE_TOL for e in fits]
        if all(big) and all(e * fits[0] > 0 for e in fits):
            # t-exponent: positive means decay; log exponents: positive means growth.
            decays = (fits[0] > 0) == (level == 0)
            kind = "zero" if decays else "infinite"
            return LimitVerdict(kind, 0.0 if kind == "zero" else None, **base,
                                detail={"exponents": exps})
        uncertain |= any(big)
    if uncertain:
        return LimitVerdict("inconclusive", **base, detail={"exponents": exps})
    return LimitVerdict("positive_finite", float(y[0]), **base,
                        detail={"exponents": exps, "log_spread": float(np.ptp(z))})


def limit_at_zero(ratio: FuncRep, decades: float = 5.0) -> LimitVerdict:
    """Limit of ``ratio`` at the origin.

    Symbolic input: decided exactly by the dominant atom of the first piece
    (lexicographic on the exponents).  Tabulated input: log-log slopes over the
    ``decades`` nearest the floor, extrapolated level by level in ``1/l``,
    ``1/ll``, ``1/lll``; a sign change of the first significant exponent gives
    the verdict, swings larger than a factor 2 in both directions give
    ``oscillating``.
    """
    if isinstance(ratio, Symbolic):
        return _symbolic_limit(ratio)
    return _tabulated_limit(ratio, decades)


# --------------------------------------------------------------------------
# JSON


def funcrep_to_json(f: FuncRep) -> dict:
    if isinstance(f, Symbolic):
        return {
            "kind": "symbolic",
            "a": f.a,
            "pieces": [
                {"lo": p.lo, "hi": p.hi, "atoms": [at.to_dict() for at in p.atoms]}
                for p in f.pieces
            ],
        }
    d = {"kind": "tabulated", "a": f.a, "floor": f.grid.floor,
         "points_per_decade": f.grid.points_per_decade, "values": [float(x) for x in f.values]}
    if not np.array_equal(f.nodes, f.grid.points):
        d["nodes"] = [float(x) for x in f.nodes]
    return d


def funcrep_from_json(obj) -> FuncRep:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    a = float(obj.get("a", 1.0))
    if kind == "symbolic":
        pieces = []
        for p in obj["pieces"]:
            atoms = tuple(
                PowerLogAtom(float(x.get("c", 1.0)), float(x.get("alpha", 0.0)),
                             float(x.get("beta", 0.0)), float(x.get("gamma", 0.0)),
                             float(x.get("delta", 0.0)))
                for x in p["atoms"]
            )
            pieces.append(Piece(float(p["lo"]), float(p["hi"]), atoms))
        return Symbolic(a, tuple(pieces))
    if kind == "tabulated":
        grid = GridSpec(a, float(obj["floor"]), int(obj.get("points_per_decade", 64)))
        nodes = obj.get("nodes")
        return Tabulated(grid, np.asarray(obj["values"], dtype=float),
                         None if nodes is None else np.asarray(nodes, dtype=float))
    raise ValueError(f"unknown FuncRep kind {kind!r}")
