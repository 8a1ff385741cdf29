"""Concave minorants oscillating against a concave majorant, and the enlarged
Marcinkiewicz target they produce.

Given a concave ``phi`` with ``phi(0+) = 0`` and ``t/phi(t) -> 0`` the
construction finds knots ``t_1 = a > tau_1 > t_2 > tau_2 > ...`` and the
piecewise-linear ``psi`` interpolating ``phi`` at the ``t_k``.  Along the
knots ``psi/phi = 1``; at the ``tau_k`` it is at most ``2^-k``.

The knots decay super-exponentially (``log t_k`` is quadratic in ``k``), so
the search runs in extended precision on the geometric grid continued past
the float floor.  ``PsiConstruction.psi`` is the float realization: exact on
every cell whose knots are representable, ``phi`` itself below the deepest
representable knot (which keeps it concave and below ``phi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np

from .funcrep import (
    GridSpec,
    Piece,
    PowerLogAtom,
    Symbolic,
    atom_limit_kind,
    dominant_atom,
    evaluate,
    evaluate_mp,
    funcrep_to_json,
    restrict,
    to_symbolic,
)
from .norms import Marcinkiewicz
from .scales import ConditionItem, ConditionReport, QuasiconcaveFn, least_concave_majorant

__all__ = [
    "HypothesisViolated",
    "PsiConstruction",
    "construct_psi",
    "verify_psi",
    "enlarged_marcinkiewicz_target",
    "psi_table",
]

MP_DPS = 40
# deepest knot kept in the float realization
FLOAT_KNOT_MIN = 1e-280
# virtual grid depth when no floor is imposed: a * 10^-MAX_DECADES
MAX_DECADES = 100_000


class HypothesisViolated(ValueError):
    """A hypothesis of a construction fails; ``condition`` names it."""

    def __init__(self, condition: str, message: str):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class PsiConstruction:
    phi: Symbolic
    t_seq: tuple
    tau_seq: tuple
    psi: object
    levels: int
    requested: int
    grid: GridSpec
    search_floor: float | None = None
    piecewise: bool = True
    notes: tuple = field(default=(), compare=False)

    @property
    def a(self) -> float:
        return self.grid.a

    def phi_mp(self, t):
        return evaluate_mp(self.phi, t)

    def slope(self, k: int):
        """Secant slope of phi on [t_{k+1}, t_k] (1-based k)."""
        t0, t1 = self.t_seq[k], self.t_seq[k - 1]
        return (self.phi_mp(t1) - self.phi_mp(t0)) / (t1 - t0)

    def psi_mp(self, t):
        t = mpmath.mpf(t)
        if not self.piecewise:
            return evaluate_mp(to_symbolic(self.psi), t)
        ts = self.t_seq
        for k in range(1, len(ts)):
            if ts[k] < t <= ts[k - 1]:
                return self.phi_mp(ts[k]) + self.slope(k) * (t - ts[k])
        return self.phi_mp(t)

    def to_dict(self) -> dict:
        s = lambda x: mpmath.nstr(x, 17, min_fixed=-5, max_fixed=5)  # noqa: E731
        with mpmath.workdps(MP_DPS):
            knots = [{"t": s(t), "psi": s(self.psi_mp(t))} for t in self.t_seq]
            log10_t = [float(mpmath.log10(t)) for t in self.t_seq]
        return {
            "levels": self.levels,
            "requested": self.requested,
            "a": self.a,
            "search_floor": self.search_floor,
            "t_seq": [s(t) for t in self.t_seq],
            "tau_seq": [s(t) for t in self.tau_seq],
            "log10_t_seq": log10_t,
            "psi_knots": knots,
            "notes": list(self.notes),
        }


def _as_phi(phi) -> tuple[Symbolic, GridSpec, list[str]]:
    notes = []
    if isinstance(phi, QuasiconcaveFn):
        grid, f = phi.grid, phi.f
    else:
        grid, f = GridSpec(phi.a), phi
    sym = to_symbolic(f)
    t = grid.points
    v = evaluate(sym, t)
    slopes = np.diff(v) / np.diff(t)
    if np.any(np.diff(slopes) > 1e-9 * np.abs(slopes[1:])):
        sym = to_symbolic(least_concave_majorant(QuasiconcaveFn(sym, grid)).f)
        notes.append("phi replaced by its least concave majorant")
    return sym, grid, notes


def _check_hypotheses(phi: Symbolic) -> None:
    # both limits are decided by the dominant atom of the piece at the origin
    head = dominant_atom(phi.pieces[0].atoms) if phi.pieces and phi.pieces[0].lo == 0 else None
    kind = atom_limit_kind(head) if head is not None else "zero"
    if kind != "zero":
        raise HypothesisViolated("phi_vanishes_at_zero",
                                 f"hypotheses violated: phi(t) -> 0 fails ({kind})")
    kind = atom_limit_kind(PowerLogAtom(1.0, 1.0) * head ** -1.0)
    if kind != "zero":
        raise HypothesisViolated("t_over_phi_vanishes",
                                 f"hypotheses violated: t/phi(t) -> 0 fails ({kind})")


def _largest_grid_point(pred, a, log_r, j_start, j_max):
    """Largest ``a r^-j`` (``j >= j_start``, ``j <= j_max``) with ``pred``; pred monotone in j."""
    point = lambda j: a * mpmath.exp(-j * log_r)  # noqa: E731
    if j_start > j_max:
        return None, None
    if pred(point(j_start)):
        return j_start, point(j_start)
    lo, step = j_start, 1
    hi = None
    while hi is None:
        j = min(lo + step, j_max)
        if pred(point(j)):
            hi = j
        elif j == j_max:
            return None, None
        else:
            lo, step = j, step * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(point(mid)):
            hi = mid
        else:
            lo = mid
    return hi, point(hi)


def construct_psi(phi, K: int = 10, floor: float | None = None,
                  points_per_decade: int | None = None) -> PsiConstruction:
    """Run the inductive knot search; LARGEST admissible grid point at each step.

    ``floor=None`` continues the geometric grid in extended precision (down to
    ``a 10^-100000``); a float floor yields a partial construction when it is
    reached before ``K`` levels.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    sym, grid, notes = _as_phi(phi)
    _check_hypotheses(sym)
    a = grid.a
    ppd = points_per_decade or grid.points_per_decade
    with mpmath.workdps(MP_DPS):
        am = mpmath.mpf(a)
        log_r = mpmath.log(10) / ppd
        j_max = int(math.ceil(math.log10(a / floor) * ppd)) if floor else MAX_DECADES * ppd
        f = lambda t: evaluate_mp(sym, t)  # noqa: E731
        jj = lambda t: int(mpmath.floor(mpmath.log(am / t) / log_r)) + 1  # noqa: E731
        t_seq = [am]
        tau_seq = []
        j_t = 0
        for k in range(1, K + 1):
            tk = t_seq[-1]
            thr = 2 ** (k + 1) * f(tk) / tk
            # tau_k: largest grid point < t_k / 2 with phi(tau)/tau > thr
            j_tau, tau = _largest_grid_point(lambda s: f(s) / s > thr, am, log_r,
                                             max(jj(tk / 2), j_t + 1), j_max)
            if tau is None:
                notes.append(f"grid floor reached while searching tau_{k}")
                break
            ftau = f(tau)
            bound = ftau / 2 ** (k + 1)

            def ok(s, tau=tau, ftau=ftau, bound=bound, thr=thr):
                fs = f(s)
                return (ftau - fs) / (tau - s) > thr and fs <= bound

            j_next, t_next = _largest_grid_point(ok, am, log_r, j_tau + 1, j_max)
            if t_next is None:
                notes.append(f"grid floor reached while searching t_{k + 1}")
                break
            tau_seq.append(tau)
            t_seq.append(t_next)
            j_t = j_next
        levels = len(tau_seq)
        c = PsiConstruction(sym, tuple(t_seq), tuple(tau_seq), None, levels, K, grid, floor,
                            True, tuple(notes))
        psi = _float_realization(c)
    c = replace(c, psi=psi)
    _assert_invariants(c)
    return c


def _float_realization(c: PsiConstruction) -> QuasiconcaveFn:
    ts = [float(t) for t in c.t_seq]
    pieces = []
    deepest = ts[0]
    for k in range(1, len(ts)):
        lo, hi = ts[k], ts[k - 1]
        if lo < FLOAT_KNOT_MIN:
            break
        s = float(c.slope(k))
        c0 = float(c.phi_mp(c.t_seq[k]) - c.slope(k) * c.t_seq[k])
        atoms = tuple(at for at in (PowerLogAtom(c0), PowerLogAtom(s, 1.0)) if at.coeff != 0)
        pieces.append(Piece(lo, hi, atoms))
        deepest = lo
    head = list(restrict(c.phi, 0.0, deepest).pieces)
    sym = Symbolic(c.a, tuple(head + sorted(pieces, key=lambda p: p.lo)))
    return QuasiconcaveFn(sym, c.grid)


def _assert_invariants(c: PsiConstruction) -> None:
    rep = verify_psi(c.phi, c)
    # a partial construction (floor reached) is a legitimate result
    bad = [it.name for it in rep.items if it.passed is False and it.name != "levels_reached"]
    if bad:
        raise AssertionError(f"construction invariants violated: {bad}")


def verify_psi(phi, c: PsiConstruction) -> ConditionReport:
    """Every per-level invariant plus the finite-level liminf/limsup certificates."""
    sym = to_symbolic(phi.f if isinstance(phi, QuasiconcaveFn) else phi)
    c = replace(c, phi=sym)
    items = []
    with mpmath.workdps(MP_DPS):
        f = c.phi_mp
        ts, taus = c.t_seq, c.tau_seq
        K = len(taus)
        items.append(ConditionItem("t1_equals_a", ts[0] == mpmath.mpf(c.a)))
        inter = all(ts[k + 1] < taus[k] < ts[k] for k in range(K))
        items.append(ConditionItem("interleaving", inter))
        items.append(ConditionItem("tau_below_half", all(taus[k] < ts[k] / 2 for k in range(K))))
        p1 = p2 = True
        for i in range(K):
            k = i + 1
            tk, tk1, tau = ts[i], ts[i + 1], taus[i]
            lhs = (f(tau) - f(tk1)) / (tau - tk1)
            rhs = 2 ** (k + 1) * (f(tk) - f(tk1)) / (tk - tk1)
            p1 = p1 and lhs > rhs
            p2 = p2 and f(tk1) <= f(tau) / 2 ** (k + 1)
        items.append(ConditionItem("property1_secant", p1))
        items.append(ConditionItem("property2_decay", p2))
        knot_dev = max(abs(c.psi_mp(t) / f(t) - 1) for t in ts)
        items.append(ConditionItem("psi_equals_phi_at_knots", knot_dev <= mpmath.mpf(10) ** -25,
                                   float(knot_dev)))
        below = all(c.psi_mp(t) <= f(t) * (1 + mpmath.mpf(10) ** -25) for t in taus)
        tg = c.grid.points
        psi_v, phi_v = evaluate(c.psi.f if isinstance(c.psi, QuasiconcaveFn) else c.psi, tg), \
            evaluate(sym, tg)
        below = below and bool(np.all(psi_v <= phi_v * (1 + 1e-12)))
        items.append(ConditionItem("psi_le_phi", below))
        slopes = [c.slope(k) for k in range(1, len(ts))] if c.piecewise else []
        conc = all(s1 >= s0 for s0, s1 in zip(slopes, slopes[1:]))
        dt = np.diff(tg)
        d = np.diff(psi_v) / dt
        # float cross-check only: second differences of rounded values carry
        # noise ~ eps |psi| (1/dt0 + 1/dt1); the exact slope test above is authoritative
        noise = 8 * np.finfo(float).eps * np.abs(psi_v[1:-1]) * (1 / dt[:-1] + 1 / dt[1:])
        conc = conc and bool(np.all(np.diff(d) <= 1e-6 * np.abs(d[1:]) + noise))
        items.append(ConditionItem("psi_concave", conc))
        items.append(ConditionItem("psi_nondecreasing", bool(np.all(np.diff(psi_v) >= -1e-12 * psi_v[1:]))))
        up = [c.psi_mp(t) / f(t) for t in ts]
        items.append(ConditionItem("limsup_certificate",
                                   all(abs(r - 1) <= mpmath.mpf(10) ** -25 for r in up),
                                   float(min(up))))
        low = [c.psi_mp(taus[i]) / f(taus[i]) * 2 ** (i + 1) for i in range(K)]
        items.append(ConditionItem("liminf_certificate", bool(K) and all(x <= 1 for x in low),
                                   float(max(low)) if low else None,
                                   "max over k of 2^k psi(tau_k)/phi(tau_k)"))
        items.append(ConditionItem("levels_reached", c.levels >= c.requested, float(c.levels),
                                   "inconclusive at this floor" if c.levels < c.requested else ""))
    return ConditionReport(tuple(items), c.search_floor)


def enlarged_marcinkiewicz_target(c: PsiConstruction) -> tuple[Marcinkiewicz, dict]:
    """``M_psi`` plus the report certifying ``M_phi`` strictly inside and no almost compactness."""
    rep = verify_psi(c.phi, c)
    psi = c.psi if isinstance(c.psi, QuasiconcaveFn) else QuasiconcaveFn(c.psi, c.grid)
    with mpmath.workdps(MP_DPS):
        origin = {"construction": "psi", "levels": c.levels,
                  "phi": funcrep_to_json(c.phi),
                  "log10_t_knots": [float(mpmath.log10(t)) for t in c.t_seq],
                  "log10_tau": [float(mpmath.log10(t)) for t in c.tau_seq],
                  "limsup_certificate": rep["limsup_certificate"].passed}
    spec = Marcinkiewicz(psi, origin=origin)
    with mpmath.workdps(MP_DPS):
        # f* = 1/psi: sup-form norms sup f* psi = 1 and sup f* phi >= phi/psi at tau_k
        gaps = [c.phi_mp(t) / c.psi_mp(t) for t in c.tau_seq]
        witness_phi = float(max(gaps)) if gaps else None
        growth = all(g >= 2 ** (i + 1) for i, g in enumerate(gaps))
    report = {
        "conditions": rep.to_dict(),
        "inclusion_M_phi_in_M_psi": rep["psi_le_phi"].passed,
        "strict_inclusion": rep["liminf_certificate"].passed,
        "not_almost_compact": rep["limsup_certificate"].passed,
        "membership_witness": {
            "f_star": "1/psi",
            "sup_form_norm_M_psi": 1.0,
            "sup_form_norm_M_phi_lower_bound": witness_phi,
            "phi_over_psi_at_tau_k_at_least_2^k": growth,
        },
        "verdict": "noncompact" if rep["limsup_certificate"].passed else "unknown",
    }
    return spec, report


def psi_table(c: PsiConstruction, grid: GridSpec | None = None) -> list[tuple[float, float, float, float]]:
    """Rows ``(t, phi, psi, psi/phi)`` on the grid."""
    grid = grid or c.grid
    t = grid.points
    phi_v = evaluate(c.phi, t)
    psi_v = evaluate(c.psi.f, t)
    return [(float(x), float(p), float(q), float(q / p)) for x, p, q in zip(t, phi_v, psi_v)]
