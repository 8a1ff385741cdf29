"""Enlarging a space by a sum ``Z1 + Z2``.

The two hypotheses are ``phi_Z2 / phi_Z1 -> 0`` and ``Z1`` not contained in
``Z2``.  Inclusion between Lorentz-Zygmund, Lebesgue and classical Lambda
specs is decided from the power-log asymptotics of their weights:

* ``q1 <= q2``: ``Z1 in Z2`` iff ``phi_Z2 / phi_Z1`` stays bounded;
* ``q1 > q2``, ``q1`` finite: iff ``integral (W/V)^{q1/(q1-q2)} v`` converges;
* ``q1 = inf > q2``: iff ``integral v~^{-q2} w`` converges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counterexample import HypothesisViolated
from .funcrep import (
    GridSpec,
    PowerLogAtom,
    Tabulated,
    asymptotic_primitive,
    atom,
    atom_limit_kind,
    evaluate,
    limit_at_zero,
    to_symbolic,
)
from .norms import (
    ClassicalLambda,
    Lebesgue,
    LorentzKaramata,
    NormSpec,
    Sum,
    _atom_of,
    _b_atom,
    fundamental_atom,
    fundamental_function,
    lorentz_zygmund,
    spec_to_json,
)
from .scales import (
    ConditionItem,
    ConditionReport,
    Weight,
    check_lambda_admissible,
    least_nondecreasing_majorant,
)

__all__ = [
    "SumSpacePlan",
    "inclusion_verdict",
    "ratio_kind",
    "plan_sum_enlargement",
    "check_lambda_sum_conditions",
    "check_sup_sum_conditions",
    "lz_noncompact_target",
    "lz_weights",
]

_EXP_DIGITS = 12


def _clean(at: PowerLogAtom) -> PowerLogAtom:
    # exponents built from 1/q - 1/s etc. must cancel to an exact zero
    return PowerLogAtom(at.coeff, *(round(x, _EXP_DIGITS) + 0.0 for x in at.exponents))


def _kind(at: PowerLogAtom | None) -> str:
    return atom_limit_kind(None if at is None else _clean(at))


def _diverges(at: PowerLogAtom) -> bool:
    """``integral_0 at`` infinite."""
    return asymptotic_primitive(_clean(at)) is None


# --------------------------------------------------------------------------
# Lambda form


@dataclass(frozen=True)
class _LambdaForm:
    """``Lambda^q(v)`` near the origin; for ``q = inf`` ``v`` is the sup weight ``v~``."""

    q: float
    v: PowerLogAtom


def _sup_weight(at: PowerLogAtom) -> PowerLogAtom:
    # least nondecreasing majorant near 0: the atom itself if it vanishes, else its level
    return at if _kind(at) == "zero" else PowerLogAtom(at.coeff)


def _lambda_form(spec: NormSpec) -> _LambdaForm | None:
    if isinstance(spec, Lebesgue):
        return _LambdaForm(spec.p, PowerLogAtom(1.0))
    if isinstance(spec, LorentzKaramata):
        b = _b_atom(spec.b)
        if b is None:
            return None
        ip = 0.0 if math.isinf(spec.p) else 1.0 / spec.p
        if math.isinf(spec.q):
            return _LambdaForm(math.inf, _sup_weight(PowerLogAtom(b.coeff, ip, b.beta, b.gamma,
                                                                  b.delta)))
        q = spec.q
        return _LambdaForm(q, PowerLogAtom(b.coeff ** q, q * ip - 1.0, q * b.beta, q * b.gamma,
                                           q * b.delta))
    if isinstance(spec, ClassicalLambda):
        v = _atom_of(spec.v.v)
        if v is None:
            return None
        return _LambdaForm(spec.q, _sup_weight(v) if math.isinf(spec.q) else v)
    return None


def ratio_kind(num: NormSpec, den: NormSpec, grid: GridSpec | None = None) -> dict:
    """Limit at 0 of ``phi_num / phi_den``: exponents when both are atoms, else tabulated."""
    x, y = fundamental_atom(num), fundamental_atom(den)
    if x is not None and y is not None:
        r = _clean(x * y ** -1.0)
        return {"kind": _kind(r), "method": "exponents", "ratio_atom": r.to_dict()}
    grid = grid or GridSpec(num.a)
    t = grid.points
    ratio = fundamental_function(num, grid)(t) / fundamental_function(den, grid)(t)
    v = limit_at_zero(Tabulated(grid, ratio))
    return {"kind": v.kind, "method": v.method, "floor": grid.floor}


def inclusion_verdict(Z1: NormSpec, Z2: NormSpec) -> dict:
    """Decide ``Z1 subset Z2`` near the origin; ``included`` is None when undecided."""
    f1, f2 = _lambda_form(Z1), _lambda_form(Z2)
    if f1 is None or f2 is None:
        return {"included": None, "rule": "unsupported spec pair"}
    p1, p2 = fundamental_atom(Z1), fundamental_atom(Z2)
    if f1.q <= f2.q:
        if p1 is None or p2 is None:
            return {"included": None, "rule": "fundamental functions not power-log"}
        kind = _kind(p2 * p1 ** -1.0)
        return {"included": kind != "infinite", "rule": "q1<=q2: phi_Z2/phi_Z1 bounded",
                "ratio_kind": kind}
    if math.isinf(f1.q):
        integrand = _clean(f1.v ** -f2.q * f2.v)
        rule = "q1=inf>q2: integral v1~^-q2 w"
    else:
        V, W = asymptotic_primitive(f1.v), asymptotic_primitive(f2.v)
        if V is None or W is None:
            return {"included": None, "rule": "weight primitive infinite"}
        integrand = _clean((W * V ** -1.0) ** (f1.q / (f1.q - f2.q)) * f1.v)
        rule = "q1>q2: integral (W/V)^{q1/(q1-q2)} v"
    div = _diverges(integrand)
    return {"included": not div, "rule": rule, "integrand": integrand.to_dict(),
            "integral": "divergent" if div else "convergent"}


# --------------------------------------------------------------------------
# sum plan


def _ac_associate(Z1: NormSpec) -> bool | None:
    # recorded per scale, not computed: Lorentz-Zygmund with q > 1
    if isinstance(Z1, LorentzKaramata) and _b_atom(Z1.b) is not None:
        return Z1.q > 1
    if isinstance(Z1, Lebesgue):
        return Z1.p > 1
    return None


@dataclass(frozen=True)
class SumSpacePlan:
    Z1: NormSpec
    Z2: NormSpec
    Y: Sum
    conditions: ConditionReport
    flags: dict = field(default_factory=dict)

    def duality_constant(self, grid: GridSpec | None = None) -> float:
        """C with ``max(phi_Z1', phi_Z2') phi_Y / t`` in ``[1/C, C]`` on the grid."""
        grid = grid or GridSpec(self.Y.a)
        t = grid.points
        f1 = fundamental_function(self.Z1, grid)(t)
        f2 = fundamental_function(self.Z2, grid)(t)
        fy = fundamental_function(self.Y, grid)(t)
        r = np.maximum(t / f1, t / f2) * fy / t
        return float(max(np.max(r), 1.0 / np.min(r)))

    def to_dict(self) -> dict:
        return {"Z1": spec_to_json(self.Z1), "Z2": spec_to_json(self.Z2),
                "Y": spec_to_json(self.Y), "conditions": self.conditions.to_dict(),
                "flags": dict(self.flags)}


def plan_sum_enlargement(Z1: NormSpec, Z2: NormSpec, grid: GridSpec | None = None) -> SumSpacePlan:
    """Check ``phi_Z2/phi_Z1 -> 0`` and ``Z1`` not inside ``Z2``; Y = Z1 + Z2."""
    rk = ratio_kind(Z2, Z1, grid)
    inc = inclusion_verdict(Z1, Z2)
    items = (
        ConditionItem("ratio_zero", rk["kind"] == "zero", note=f"{rk['kind']} ({rk['method']})"),
        ConditionItem("not_included", inc["included"] is False, note=inc["rule"]),
    )
    rep = ConditionReport(items, grid.floor if grid else None)
    for it in items:
        if not it.passed:
            raise HypothesisViolated(it.name, f"sum enlargement hypothesis fails: {it.name} [{it.note}]")
    flags = {"embedding_holds": True, "ratio_zero": True, "not_almost_compact": True,
             "associate_absolutely_continuous": _ac_associate(Z1),
             "ratio": rk, "inclusion": inc}
    return SumSpacePlan(Z1, Z2, Sum(Z1, Z2), rep, flags)


# --------------------------------------------------------------------------
# weight conditions for Lambda sums


def _tail_divergent(g, t, grid) -> tuple[bool | None, str]:
    """Divergence of ``integral_0 g`` from tail integrals on the grid."""
    xg, wg = np.polynomial.legendre.leggauss(20)
    lo, hi = np.log(t[:-1]), np.log(t[1:])
    w = hi - lo
    x = lo[:, None] + 0.5 * w[:, None] * (xg[None, :] + 1.0)
    tt = np.exp(x)
    cells = (np.asarray(g(tt.ravel())).reshape(tt.shape) * tt) @ wg * 0.5 * w
    tails = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])[:-1]
    v = limit_at_zero(Tabulated(GridSpec(float(t[-1]), float(t[0])), tails, t[:-1]))
    if v.kind == "infinite":
        return True, v.method
    if v.kind == "positive_finite":
        return False, v.method
    return None, v.method


def _weight_atom(w: Weight) -> PowerLogAtom | None:
    sym = to_symbolic(w.v)
    if len(sym.pieces) == 1 and len(sym.pieces[0].atoms) == 1 and sym.pieces[0].lo == 0:
        return sym.pieces[0].atoms[0]
    return None


def check_lambda_sum_conditions(q: float, v: Weight, r: float, w: Weight, grid: GridSpec | None = None
                ) -> ConditionReport:
    """Sawyer admissibility of v, ``W^{1/r}/V^{1/q} -> 0``, ``integral (W/V)^{q/(q-r)} v = inf``."""
    if not 1 <= r < q < math.inf:
        raise ValueError("need 1 <= r < q < inf")
    grid = grid or v.grid
    adm = check_lambda_admissible(q, v, grid)
    adm_item = adm.items[0]
    va, wa = _weight_atom(v), _weight_atom(w)
    E = q / (q - r)
    if va is not None and wa is not None:
        V, W = asymptotic_primitive(va), asymptotic_primitive(wa)
        ratio = _clean(W ** (1.0 / r) * V ** (-1.0 / q))
        kind = _kind(ratio)
        integrand = _clean((W * V ** -1.0) ** E * va)
        div = _diverges(integrand)
        ratio_item = ConditionItem("ratio_zero", kind == "zero", note=f"{kind} (exponents)")
        div_item = ConditionItem("divergence", div,
                                 note=f"integrand {integrand.to_dict()} (exponents)")
    else:
        t = grid.points[grid.points < grid.a]
        Vt, Wt = v.V(t), w.V(t)
        lv = limit_at_zero(Tabulated(GridSpec(grid.a, float(t[0])), Wt ** (1 / r) / Vt ** (1 / q), t))
        ratio_item = ConditionItem("ratio_zero", lv.kind == "zero", note=f"{lv.kind} ({lv.method})")
        div, method = _tail_divergent(lambda s: (w.V(s) / v.V(s)) ** E * v(s), t, grid)
        div_item = ConditionItem("divergence", div, note=f"tail integrals ({method})")
    return ConditionReport((ConditionItem("sawyer_condition", adm_item.passed, adm_item.constant),
                            ratio_item, div_item), grid.floor)


def check_sup_sum_conditions(v: Weight, r: float, w: Weight, grid: GridSpec | None = None) -> ConditionReport:
    """``v~(a) < inf``, the averaging condition, ``W^{1/r}/v~ -> 0``, ``||1/v~||_{Lambda^r(w)} = inf``."""
    if not 1 <= r < math.inf:
        raise ValueError("need 1 <= r < inf")
    grid = grid or v.grid
    va = _weight_atom(v)
    if va is not None:
        bounded = _kind(va) != "infinite"
    else:
        bounded = limit_at_zero(v.v).kind != "infinite"
    if not bounded:
        fail = ConditionItem("vtilde_finite", False, note="v unbounded near 0")
        rest = [ConditionItem(n, False, note="skipped: v~ infinite")
                for n in ("sup_condition", "ratio_zero", "recip_not_in_Lambda_r_w")]
        return ConditionReport((fail, *rest), grid.floor)
    vt = least_nondecreasing_majorant(v, grid)
    vta = float(evaluate(vt, grid.a))
    sup = check_lambda_admissible(math.inf, Weight(vt, grid), grid)["sup_condition"]
    wa = _weight_atom(w)
    if va is not None and wa is not None:
        vs = _sup_weight(va)
        W = asymptotic_primitive(wa)
        kind = _kind(W ** (1.0 / r) * vs ** -1.0)
        integrand = _clean(vs ** -r * wa)
        div = _diverges(integrand)
        ratio_item = ConditionItem("ratio_zero", kind == "zero", note=f"{kind} (exponents)")
        div_item = ConditionItem("recip_not_in_Lambda_r_w", div,
                                 note=f"integrand {integrand.to_dict()} (exponents)")
    else:
        t = grid.points[grid.points < grid.a]
        vtt = evaluate(vt, t)
        lv = limit_at_zero(Tabulated(GridSpec(grid.a, float(t[0])), w.V(t) ** (1 / r) / vtt, t))
        ratio_item = ConditionItem("ratio_zero", lv.kind == "zero", note=f"{lv.kind} ({lv.method})")
        div, method = _tail_divergent(lambda s: evaluate(vt, s) ** -r * w(s), t, grid)
        div_item = ConditionItem("recip_not_in_Lambda_r_w", div, note=f"tail integrals ({method})")
    return ConditionReport((ConditionItem("vtilde_finite", math.isfinite(vta), vta),
                            ConditionItem("sup_condition", sup.passed, sup.constant),
                            ratio_item, div_item), grid.floor)


# --------------------------------------------------------------------------
# Lorentz-Zygmund instantiation


def lz_weights(spec: LorentzKaramata, grid: GridSpec | None = None) -> Weight:
    """``v = t^{q/p-1} b^q`` so that ``||f||_{L^{p,q;b}} = ||f||_{Lambda^q(v)}``."""
    b = _b_atom(spec.b)
    if b is None or math.isinf(spec.q):
        raise ValueError("need a single log-power b and finite q")
    ip = 0.0 if math.isinf(spec.p) else 1.0 / spec.p
    q = spec.q
    v = atom(b.coeff ** q, q * ip - 1.0, q * b.beta, q * b.gamma, q * b.delta, a=spec.a)
    return Weight(v, grid or GridSpec(spec.a))


def _lz_row(sp, p: float, q: float, alpha: float, s: float):
    """Row label and the second summand Z for the sum target."""
    from .sobolev_embed import UnsupportedCase

    n, m, d, a = sp.n, sp.m, sp.d, float(sp.mass_nu)
    iq = 0.0 if math.isinf(q) else 1.0 / q
    if not (q > 1 and 1 <= s < q):
        raise UnsupportedCase("need q in (1, inf] and s in [1, q)")
    crit = n / m
    if 1 < p < crit:
        return "p<n/m", lorentz_zygmund(d * p / (n - m * p), s, alpha + iq - 1.0 / s, a=a)
    if math.isclose(p, crit, rel_tol=0, abs_tol=1e-12):
        if alpha < 1 - iq - 1e-12:
            return "p=n/m,alpha<1-1/q", lorentz_zygmund("inf", s, alpha - 1.0 + iq - 1.0 / s,
                                                        iq - 1.0 / s, a=a)
        if math.isclose(alpha, 1 - iq, rel_tol=0, abs_tol=1e-12):
            return "p=n/m,alpha=1-1/q", lorentz_zygmund("inf", s, -1.0 / s, iq - 1.0 / s - 1.0,
                                                        iq - 1.0 / s, a=a)
    raise UnsupportedCase("need p in (1, n/m), or p = n/m with alpha <= 1 - 1/q")


def lz_noncompact_target(sp, p: float, q: float, alpha: float, s: float,
                         grid: GridSpec | None = None, weight_checks: bool = True) -> dict:
    """The sum target for ``W^m L^{p,q;alpha}`` and its certificates."""
    from .sobolev_embed import optimal_target_preset

    q = math.inf if isinstance(q, str) else float(q)
    row, Z2 = _lz_row(sp, float(p), q, float(alpha), float(s))
    YX = Z1 = optimal_target_preset(sp, lorentz_zygmund(p, q, alpha, a=sp.mass_omega))
    plan = plan_sum_enlargement(Z1, Z2, grid)
    report = {
        "row": row,
        "Y_X": spec_to_json(YX),
        "ratio_zero_certificate": plan.flags["ratio"],
        "non_inclusion_certificate": plan.flags["inclusion"],
        "associate_absolutely_continuous": plan.flags["associate_absolutely_continuous"],
        "strict_inclusion_Y_X_in_Y": True,
        "verdict": "noncompact",
    }
    if weight_checks and not math.isinf(q):
        g = grid or GridSpec(Z1.a)
        rep = check_lambda_sum_conditions(q, lz_weights(Z1, g), s, lz_weights(Z2, g), g)
        report["weight_conditions"] = rep.to_dict()
    return {"Y": plan.Y, "plan": plan, "report": report}
