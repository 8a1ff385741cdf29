"""A target space strictly between a Marcinkiewicz space and everything with
a smaller fundamental function: the norm

    rho_Y(f) = sup_t (1/b(t)) integral_t^a f*(s) phi(s)/tau(s) ds,
    b(t) = 1 + integral_t^a 1/tau,

its hypotheses, the dual functional sigma (as a lower bound), the supremum
operator ``T_xi``, and the witness family whose tail norms stay above 1/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .funcrep import (
    DomainError,
    FuncRep,
    GridSpec,
    Piece,
    PowerLogAtom,
    Symbolic,
    Tabulated,
    atom,
    breakpoints,
    constant,
    cumulative,
    dominant_atom,
    evaluate,
    evaluate_left,
    funcrep_from_json,
    funcrep_to_json,
    indicator,
    integrate,
    multiply,
    reciprocal,
    restrict,
    tail_integrals,
    to_symbolic,
)
from .norms import EnlargedY, ess_sup
from .rearrange import RearrangedFn, is_nonincreasing, rearrange, star_star
from .scales import (
    ConditionItem,
    ConditionReport,
    QuasiconcaveFn,
    SlowlyVaryingFn,
    bounded_near_zero,
    quasiconcave_envelope,
)

__all__ = [
    "MarcEnlargeParams",
    "UnsupportedCase",
    "make_params",
    "preset",
    "check_conditions",
    "norm_Y",
    "fundamental_Y",
    "fundamental_Y_atom",
    "fundamental_bound",
    "sup_operator_Txi",
    "nonincreasing_equivalence_constant",
    "sigma_lower_bound",
    "witness_sequence",
    "marcinkiewicz_sup_form",
    "noncompactness_certificate",
    "params_to_json",
    "params_from_json",
    "enlarged_space",
]


class UnsupportedCase(ValueError):
    """Parameters outside the preset tables."""


def _b_closed_form(tau: FuncRep) -> Symbolic | None:
    """``1 + integral_t^a 1/tau`` in closed form for ``tau = t``, ``t l``, ``t l ll`` (times c)."""
    sym = to_symbolic(tau)
    if len(sym.pieces) != 1 or sym.pieces[0].lo != 0 or len(sym.pieces[0].atoms) != 1:
        return None
    at = sym.pieces[0].atoms[0]
    c = 1.0 / at.coeff
    level = {(1.0, 0.0, 0.0, 0.0): 1, (1.0, 1.0, 0.0, 0.0): 2, (1.0, 1.0, 1.0, 0.0): 3}.get(
        (at.alpha, at.beta, at.gamma, at.delta))
    if level is None:
        return None
    # d/dt of l, ll, lll is -1/t, -1/(t l), -1/(t l ll), and each equals 1 at t = a
    exps = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)][level]
    atoms = [PowerLogAtom(c, 0.0, *exps)]
    if c != 1.0:
        atoms.append(PowerLogAtom(1.0 - c))
    return Symbolic(sym.a, (Piece(0.0, sym.a, tuple(atoms)),))


@dataclass(frozen=True)
class MarcEnlargeParams:
    """``(phi, tau, b, xi)``; ``b`` is always derived from ``tau``."""

    phi: QuasiconcaveFn
    tau: FuncRep
    xi: FuncRep
    b: FuncRep
    grid: GridSpec
    label: str = ""
    b_exact: bool = False
    b_deviation: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def a(self) -> float:
        return self.grid.a

    def b_value(self, t):
        """``1 + integral_t^a 1/tau`` at arbitrary ``t`` in (0, a]."""
        if self.b_exact:
            return evaluate(self.b, t)
        scalar = np.isscalar(t)
        out = 1.0 + tail_integrals(reciprocal(self.tau), np.atleast_1d(np.asarray(t, dtype=float)))
        return float(out[0]) if scalar else out

    def tail_recip_tau(self, t):
        return self.b_value(t) - 1.0

    @property
    def weight(self) -> Symbolic:
        """``phi / tau``."""
        return multiply(self.phi.f, reciprocal(self.tau))


def make_params(phi, tau: FuncRep, xi: FuncRep, grid: GridSpec | None = None, label: str = "",
                meta: dict | None = None) -> MarcEnlargeParams:
    a = phi.a
    grid = grid or GridSpec(a)
    if not isinstance(phi, QuasiconcaveFn):
        phi = quasiconcave_envelope(phi, grid)
    t = grid.points
    numeric = 1.0 + tail_integrals(reciprocal(tau), t)
    closed = _b_closed_form(tau)
    if closed is not None:
        dev = float(np.max(np.abs(evaluate(closed, t) / numeric - 1.0)))
        if dev > 1e-9:
            raise ValueError(f"closed-form b disagrees with the primitive of 1/tau ({dev:.3g})")
        b, exact = closed, True
    else:
        b, exact, dev = Tabulated(grid, numeric), False, 0.0
    return MarcEnlargeParams(phi, tau, xi, b, grid, label, exact, dev, dict(meta or {}))


def _ell_atom(a, alpha=0.0, beta=0.0, gamma=0.0, delta=0.0, c=1.0):
    return atom(c, alpha, beta, gamma, delta, a=a)


def preset(case: str, sp=None, p: float | None = None, alpha: float | None = None,
           beta: float | None = None, a: float = 1.0, grid: GridSpec | None = None) -> MarcEnlargeParams:
    """Parameter quadruples.

    ``case="i"``: ``phi = t^alpha l^beta``, ``tau = t``, ``xi = t^-alpha l^-beta``.
    ``case="ii"``: ``phi = l^beta`` (beta < 0), ``tau = t l``, ``xi = l^(1-beta)``.
    ``case="lz"``: the weak Lorentz-Zygmund table for ``W^m L^{p,inf;alpha}`` with
    ``a = sp.mass_nu``; rows ``p < n/m``, ``p = n/m, alpha < 1``, ``p = n/m, alpha = 1``.
    """
    case = str(case).lower()
    if case == "i":
        alpha = 0.5 if alpha is None else float(alpha)
        beta = 1.0 if beta is None else float(beta)
        if not 0 < alpha < 1:
            raise UnsupportedCase("preset (i) needs alpha in (0, 1)")
        phi = _ell_atom(a, alpha, beta)
        return make_params(phi, _ell_atom(a, 1.0), _ell_atom(a, -alpha, -beta), grid,
                           f"i:alpha={alpha},beta={beta}", {"case": "i", "alpha": alpha, "beta": beta})
    if case == "ii":
        beta = -1.0 if beta is None else float(beta)
        if not beta < 0:
            raise UnsupportedCase("preset (ii) needs beta < 0")
        return make_params(_ell_atom(a, 0.0, beta), _ell_atom(a, 1.0, 1.0),
                           _ell_atom(a, 0.0, 1.0 - beta), grid, f"ii:beta={beta}",
                           {"case": "ii", "beta": beta})
    if case == "lz":
        if sp is None or p is None or alpha is None:
            raise UnsupportedCase("preset lz needs Sobolev parameters, p and alpha")
        a = float(sp.mass_nu)
        n, m, d = sp.n, sp.m, sp.d
        crit = n / m
        meta = {"case": "lz", "p": p, "alpha": alpha, "n": n, "m": m, "d": d}
        if 1 < p < crit:
            sig = (n - m * p) / (d * p)
            row = "p<n/m"
            phi, tau, xi = _ell_atom(a, sig, alpha), _ell_atom(a, 1.0), _ell_atom(a, -sig, -alpha)
        elif p == crit and alpha < 1:
            row = "p=n/m,alpha<1"
            phi, tau, xi = (_ell_atom(a, 0.0, alpha - 1.0), _ell_atom(a, 1.0, 1.0),
                            _ell_atom(a, 0.0, 2.0 - alpha))
        elif p == crit and alpha == 1:
            row = "p=n/m,alpha=1"
            phi, tau, xi = (_ell_atom(a, 0.0, 0.0, -1.0), _ell_atom(a, 1.0, 1.0, 1.0),
                            _ell_atom(a, 0.0, 1.0, 2.0))
        else:
            raise UnsupportedCase("need p in (1, n/m), or p = n/m with alpha <= 1")
        meta["row"] = row
        return make_params(phi, tau, xi, grid or GridSpec(a), f"lz:{row}", meta)
    raise UnsupportedCase(f"unknown preset {case!r}")


# --------------------------------------------------------------------------
# conditions


def _nodes(p: MarcEnlargeParams, *fs) -> np.ndarray:
    g = p.grid
    pts = [g.points] + [breakpoints(f) for f in fs if f is not None]
    t = np.unique(np.concatenate(pts))
    return t[(t >= g.floor) & (t < g.a)]


def check_conditions(p: MarcEnlargeParams) -> ConditionReport:
    """Every hypothesis, each with the empirical sup of the ratio it bounds."""
    grid = p.grid
    t = _nodes(p)
    phi_v = p.phi(t)
    items = []

    cum = cumulative(reciprocal(p.phi.f), t)
    r = phi_v * cum / t
    items.append(ConditionItem("recip_phi_average_bounded", bounded_near_zero(t, r, grid), float(np.max(r))))

    cum = cumulative(p.weight, t)
    r = cum / phi_v
    ok = bool(np.all(np.isfinite(r))) and bounded_near_zero(t, r, grid)
    items.append(ConditionItem("phi_over_tau_integrable", ok, float(np.max(r))))

    tail = p.tail_recip_tau(np.array([grid.floor]))
    items.append(ConditionItem("b_finite", bool(np.all(np.isfinite(tail)))))

    items.append(ConditionItem("recip_tau_not_integrable", integrate(reciprocal(p.tau)).divergent))

    try:
        sv = SlowlyVaryingFn(p.b, grid)
        items.append(ConditionItem("b_slowly_varying", True, note=f"t0={sv.t0}"))
    except ValueError as exc:
        items.append(ConditionItem("b_slowly_varying", False, note=str(exc)))
    items.append(ConditionItem("b_matches_primitive", p.b_deviation <= 1e-9, p.b_deviation))

    xi_v = evaluate(p.xi, t)
    items.append(ConditionItem("xi_positive", bool(np.all(xi_v > 0) and np.all(np.isfinite(xi_v)))))
    c_xi = nonincreasing_equivalence_constant(p.xi, grid)
    items.append(ConditionItem("xi_equivalent_to_nonincreasing", math.isfinite(c_xi), c_xi))

    Xi = cumulative(p.xi, t)
    r = evaluate(p.tau, t) / phi_v / Xi
    ok = bounded_near_zero(t, r, grid) and bounded_near_zero(t, 1.0 / r, grid)
    items.append(ConditionItem("tau_over_phi_matches_xi_primitive", ok, float(max(np.max(r), np.max(1.0 / r)))))

    xb = multiply(p.xi, p.b) if isinstance(p.b, Symbolic) else multiply(p.xi, to_symbolic(p.b))
    num = cumulative(xb, t)
    den = xi_v * cumulative(p.b, t)
    r = num / den
    items.append(ConditionItem("xi_b_average_bounded", bounded_near_zero(t, r, grid), float(np.max(r))))
    return ConditionReport(tuple(items), grid.floor)


def nonincreasing_equivalence_constant(f: FuncRep, grid: GridSpec) -> float:
    """``sup_{s<t} f(t)/f(s)`` on the grid (1 for nonincreasing f); inf if unbounded."""
    t = grid.points
    v = np.maximum(evaluate(f, t), evaluate_left(f, t))
    ratio = np.maximum.accumulate(v[::-1])[::-1] / evaluate(f, t)
    if not bounded_near_zero(t, ratio, grid):
        return math.inf
    return float(np.max(ratio))


# --------------------------------------------------------------------------
# the norm and its fundamental function


def _fstar(f, grid):
    return f if isinstance(f, RearrangedFn) else rearrange(f, grid)


def norm_Y(p: MarcEnlargeParams, f, grid: GridSpec | None = None) -> float:
    """``sup over grid t (and breakpoints) of (1/b(t)) integral_t^a f* phi/tau``."""
    grid = grid or p.grid
    fs = _fstar(f, grid)
    base = to_symbolic(fs.base)
    if not base.pieces:
        return 0.0
    g = multiply(base, p.weight)
    pts = np.unique(np.concatenate([grid.points, breakpoints(base)]))
    t = pts[(pts >= grid.floor) & (pts < p.a)]
    tails = tail_integrals(g, t)
    if np.all(np.isinf(tails)):
        return math.inf
    vals = tails / p.b_value(t)
    return float(np.max(vals[np.isfinite(vals)]))


def fundamental_Y(p: MarcEnlargeParams, grid: GridSpec | None = None) -> QuasiconcaveFn:
    """``phi_Y(t) = sup_{u <= t} (P(u) - P(t)) / b(u)`` with ``P`` the tail of phi/tau."""
    grid = grid or p.grid
    t = grid.points
    P = tail_integrals(p.weight, t)
    bu = p.b_value(t)
    n = len(t)
    vals = np.empty(n)
    idx = np.arange(n)
    for start in range(0, n, 256):  # row blocks bound memory at 256 n
        rows = idx[start:start + 256]
        diff = (P[None, :] - P[rows, None]) / bu[None, :]  # [t row, u]
        vals[rows] = np.max(np.where(idx[None, :] <= rows[:, None], diff, 0.0), axis=1)
    vals = np.maximum(vals, 1e-300)
    return quasiconcave_envelope(Tabulated(grid, vals), grid)


def fundamental_Y_atom(p: MarcEnlargeParams) -> PowerLogAtom | None:
    """Atom equivalent to ``phi/b`` near 0 (upper bound of ``phi_Y`` up to constants)."""
    phi_sym = to_symbolic(p.phi.f)
    if not phi_sym.pieces or phi_sym.pieces[0].lo > 0 or not p.b_exact:
        return None
    ph = dominant_atom(phi_sym.pieces[0].atoms)
    bd = dominant_atom(to_symbolic(p.b).pieces[0].atoms)
    return ph * bd ** -1.0


def fundamental_bound(p: MarcEnlargeParams, grid: GridSpec | None = None) -> dict:
    """``sup phi_Y b / phi`` on the grid and the ratio verdict for ``phi_Y/phi``."""
    from .funcrep import limit_at_zero

    grid = grid or p.grid
    phY = fundamental_Y(p, grid)
    t = grid.points
    r = phY(t) * p.b_value(t) / p.phi(t)
    at = fundamental_Y_atom(p)
    ph = dominant_atom(to_symbolic(p.phi.f).pieces[0].atoms)
    if at is not None and ph is not None:
        from .funcrep import atom_limit_kind

        kind, method = atom_limit_kind(at * ph ** -1.0), "symbolic: phi_Y/phi <~ 1/b"
    else:
        kind, method = limit_at_zero(Tabulated(grid, phY(t) / p.phi(t))).kind, "tabulated"
    return {"sup_phiY_b_over_phi": float(np.max(r)), "finite": bool(np.all(np.isfinite(r))),
            "ratio_limit": kind, "method": method}


# --------------------------------------------------------------------------
# supremum operator and sigma


def sup_operator_Txi(xi: FuncRep, h, grid: GridSpec | None = None) -> RearrangedFn:
    """``T_xi h(t) = xi(t) sup_{u in [t, a)} h*(u)/xi(u)`` by one backward pass.

    On each cell the output is exact when ``h*/xi`` is monotone there (it is
    ``h*`` where the ratio decreases past the running max, ``xi`` times a
    constant where it increases); mixed cells use the cell-level sup.
    """
    grid = grid or GridSpec(xi.a)
    hs = to_symbolic(_fstar(h, grid).base)
    a = xi.a
    pts = np.unique(np.concatenate([grid.points, breakpoints(hs), breakpoints(xi)]))
    t = pts[(pts >= grid.floor) & (pts <= a)]
    xs = to_symbolic(xi)
    rt = evaluate(hs, t) / evaluate(xs, t)
    lt = evaluate_left(hs, t) / evaluate_left(xs, t)
    mid_t = np.sqrt(t[:-1] * t[1:])
    mid = evaluate(hs, mid_t) / evaluate(xs, mid_t)
    pieces = []
    M = 0.0  # sup of the ratio over [t[i+1], a)
    for i in range(len(t) - 2, -1, -1):
        lo, hi = float(t[i]), float(t[i + 1])
        r0, r1, rm = rt[i], lt[i + 1], mid[i]
        if r0 >= rm >= r1 and r1 >= M:
            # ratio nonincreasing and above the running max: T h = h*
            src = restrict(hs, lo, hi).pieces
            pieces.extend(src)
            M = max(M, r0)
        elif r0 <= rm <= r1 or r0 >= rm >= r1:
            M = max(M, r0, r1)
            pieces.extend(_scaled_pieces(xs, lo, hi, M))
        else:
            M = max(M, r0, r1, rm)
            pieces.extend(_scaled_pieces(xs, lo, hi, M))
    # head (0, floor): keep h* when the ratio keeps decreasing toward 0 above M
    t0 = float(t[0])
    probe = np.geomspace(t0 * 1e-6, t0, 8, endpoint=False)
    ratio_head = evaluate(hs, probe) / evaluate(xs, probe)
    if np.all(np.diff(ratio_head) <= 0) and ratio_head[-1] >= M:
        pieces.extend(restrict(hs, 0.0, t0).pieces)
    else:
        M = max(M, float(np.max(ratio_head)))
        pieces.extend(_scaled_pieces(xs, 0.0, t0, M))
    pieces = [pc for pc in pieces if pc.atoms]
    pieces.sort(key=lambda pc: pc.lo)
    out = Symbolic(a, tuple(pieces))
    return RearrangedFn(out, certified_nonincreasing=is_nonincreasing(out))


def _scaled_pieces(xs: Symbolic, lo: float, hi: float, c: float):
    if c == 0:
        return []
    return [Piece(pc.lo, pc.hi, tuple(at.scaled(c) for at in pc.atoms))
            for pc in restrict(xs, lo, hi).pieces]


def sigma_lower_bound(p: MarcEnlargeParams, f, dictionary_size: int = 24,
                      grid: GridSpec | None = None) -> dict:
    """Lower bound on sigma(f) over normalised indicators ``chi_(0,s) / ||chi_(0,s)||_{L^{1,1;b}}``."""
    grid = grid or p.grid
    fs = to_symbolic(_fstar(f, grid).base)
    if not fs.pieces:
        return {"value": 0.0, "argmax_s": None, "ratio_to_norm_Y": None}
    t = grid.points
    Xi = cumulative(p.xi, t)
    b_sym = p.b if isinstance(p.b, Symbolic) else to_symbolic(p.b)
    best, arg = 0.0, None
    for s in np.geomspace(grid.floor * 100, p.a, dictionary_size):
        s = float(min(s, p.a))
        nb = float(cumulative(b_sym, np.array([s]))[0])
        g = constant(1.0 / nb, p.a) if s >= p.a else restrict(constant(1.0 / nb, p.a), 0.0, s)
        Tg = sup_operator_Txi(p.xi, RearrangedFn(g), grid).base
        H = cumulative(Tg, t) / Xi
        val = integrate(multiply(fs, Tabulated(grid, np.maximum(H, 1e-300)))).value
        if val > best:
            best, arg = val, s
    nY = norm_Y(p, f, grid)
    return {"value": float(best), "argmax_s": arg,
            "ratio_to_norm_Y": float(best / nY) if nY > 0 and math.isfinite(nY) else None}


# --------------------------------------------------------------------------
# witnesses


def witness_sequence(p: MarcEnlargeParams, k: int, grid: GridSpec | None = None) -> Symbolic:
    """``f_k* = chi_(0,1/k)/phi(1/k) + chi_[1/k,a)/phi``."""
    grid = grid or p.grid
    s = 1.0 / k
    if not grid.floor < s < p.a:
        raise DomainError(f"1/k = {s:.3g} outside (floor, a) = ({grid.floor:.3g}, {p.a:.3g})")
    head = Piece(0.0, s, (PowerLogAtom(1.0 / float(p.phi(s))),))
    tail = restrict(reciprocal(p.phi.f), s, p.a).pieces
    return Symbolic(p.a, (head,) + tuple(tail))


def marcinkiewicz_sup_form(phi: QuasiconcaveFn, f, grid: GridSpec | None = None) -> float:
    """``sup_t f*(t) phi(t)`` (equivalent to the M_phi norm under conB)."""
    grid = grid or phi.grid
    fs = _fstar(f, grid)
    return ess_sup(multiply(fs.base, phi.f), grid)


def _least_k(pred, lo_t: float, hi_t: float) -> float | None:
    """Largest t in [lo_t, hi_t] with ``pred(t)`` (pred holds for all smaller t)."""
    if not pred(lo_t):
        return None
    if pred(hi_t):
        return hi_t
    a, b = math.log(lo_t), math.log(hi_t)
    for _ in range(200):
        m = 0.5 * (a + b)
        if pred(math.exp(m)):
            a = m
        else:
            b = m
    return math.exp(a)


def noncompactness_certificate(p: MarcEnlargeParams, deltas, grid: GridSpec | None = None,
                               tol: float = 1e-6) -> dict:
    """For each delta, the least k with 1/k < delta and the two tail conditions, then
    ``||f_k* chi_(0,delta)||_Y`` compared with 1/4."""
    grid = grid or p.grid
    out = []
    for delta in deltas:
        delta = float(delta)
        if not 0 < delta < p.a:
            raise ValueError("delta must lie in (0, a)")
        B = lambda t: float(p.tail_recip_tau(t))  # noqa: E731
        Bd = B(delta)
        pred = lambda t: t < delta and p.b_value(t) <= 2 * B(t) and B(t) >= 2 * Bd  # noqa: E731
        t_star = _least_k(pred, grid.floor, delta * (1 - 1e-12))
        rec = {"delta": delta, "floor": grid.floor}
        if t_star is None:
            rec.update(status="inconclusive at this floor", k=None, value=None, passed=None)
            out.append(rec)
            continue
        k = math.ceil(1.0 / t_star)
        while not pred(1.0 / k):
            k += max(1, k // 10**9)
        s = 1.0 / k
        if s <= grid.floor:
            rec.update(status="inconclusive at this floor", k=k, value=None, passed=None)
            out.append(rec)
            continue
        fk = witness_sequence(p, k, grid)
        g = restrict(fk, 0.0, delta)
        val = norm_Y(p, RearrangedFn(g), grid)
        at_k = B(s) - Bd
        rec.update(status="ok", k=k, one_over_k=s, value=val,
                   lower_chain=at_k / p.b_value(s), eq3=bool(p.b_value(s) <= 2 * B(s)),
                   eq4=bool(B(s) >= 2 * Bd), passed=bool(val >= 0.25 - tol))
        out.append(rec)
    decided = [r for r in out if r["passed"] is not None]
    return {"label": p.label, "bound": 0.25, "tol": tol, "items": out,
            "all_pass": bool(decided) and len(decided) == len(out) and all(r["passed"] for r in decided),
            "inconclusive": any(r["passed"] is None for r in out)}


# --------------------------------------------------------------------------
# JSON and spec glue


def params_to_json(p: MarcEnlargeParams) -> dict:
    d = {"a": p.a, "label": p.label, "phi": funcrep_to_json(p.phi.f), "tau": funcrep_to_json(p.tau),
         "xi": funcrep_to_json(p.xi), "grid": p.grid.to_dict()}
    if p.meta:
        d["meta"] = p.meta
    return d


def params_from_json(obj) -> MarcEnlargeParams:
    if "preset" in obj:
        pr = obj["preset"]
        return preset(pr.get("case", "i"), p=pr.get("p"), alpha=pr.get("alpha"),
                      beta=pr.get("beta"), a=float(obj.get("a", 1.0)))
    g = obj.get("grid", {})
    grid = GridSpec(float(obj["a"]), g.get("floor"), int(g.get("points_per_decade", 64)))
    return make_params(funcrep_from_json(obj["phi"]), funcrep_from_json(obj["tau"]),
                       funcrep_from_json(obj["xi"]), grid, obj.get("label", ""), obj.get("meta"))


def enlarged_space(p: MarcEnlargeParams) -> EnlargedY:
    return EnlargedY(p, origin={"construction": "marc_enlarge", "label": p.label})
