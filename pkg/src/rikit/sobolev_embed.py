"""Sobolev embeddings ``W^m X(Omega) -> Y(closure Omega, nu)`` for a d-Ahlfors nu.

The reduction kernel, the optimal-domain functional, the supremum operator
``T_{d,m,n}``, the quoted optimal-target tables, and a verdict engine that
answers only when one of its rules applies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .funcrep import (
    DEFAULT_RTOL,
    FuncRep,
    GridSpec,
    Piece,
    PowerLogAtom,
    Symbolic,
    Tabulated,
    atom,
    evaluate,
    funcrep_from_json,
    multiply,
    tail_integrals,
    to_symbolic,
)
from .marc_enlarge import UnsupportedCase, check_conditions, sup_operator_Txi
from .norms import (
    EnlargedY,
    Intersection,
    Lebesgue,
    LorentzEndpoint,
    LorentzKaramata,
    Marcinkiewicz,
    NormSpec,
    Sum,
    _b_atom,
    lorentz_zygmund,
    norm,
    spec_to_json,
)
from .rearrange import RearrangedFn, is_nonincreasing, rearrange

__all__ = [
    "SobolevParams",
    "Verdict",
    "UnsupportedCase",
    "OutOfCriterion",
    "reduction_kernel",
    "optimal_domain_norm",
    "T_dmn",
    "is_T_bounded_known",
    "optimal_target_preset",
    "endpoint_target_preset",
    "compactness_verdict",
    "mutual_optimality_check",
    "verdict_sweep",
    "lz_params",
]

_EDGE = 1e-12


class OutOfCriterion(ValueError):
    """The compactness criterion does not apply (target is L^inf)."""

    condition = "target_not_L_infinity"


@dataclass(frozen=True)
class SobolevParams:
    n: int
    m: int
    d: float
    mass_nu: float = 1.0
    mass_omega: float = 1.0
    beta: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2 or int(self.m) != self.m or self.m < 1:
            raise ValueError("need integers n >= 2, m >= 1")
        if not self.m < self.n:
            raise ValueError("need m < n")
        if not self.n - self.m <= self.d <= self.n:
            raise ValueError("need d in [n - m, n]")
        if not (self.mass_nu > 0 and self.mass_omega > 0):
            raise ValueError("masses must be positive")
        object.__setattr__(self, "beta", (self.n - self.m) / self.d)

    @property
    def critical_p(self) -> float:
        return self.n / self.m

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "d": self.d, "mass_nu": self.mass_nu,
                "mass_omega": self.mass_omega, "beta": self.beta}


# --------------------------------------------------------------------------
# reduction kernel, optimal domain, T


def _to_t(sp: SobolevParams, x: float) -> float:
    """Inverse of ``x = |Omega| (t/nu)^{n/d}``."""
    return sp.mass_nu * (x / sp.mass_omega) ** (sp.d / sp.n)


def _x_power_atom(sp: SobolevParams, e: float, c: float) -> PowerLogAtom:
    """``c x^e`` as an atom in t."""
    k = sp.n / sp.d
    return PowerLogAtom(c * sp.mass_omega ** e * sp.mass_nu ** (-e * k), e * k)


def _exact_kernel(sp: SobolevParams, fs: Symbolic) -> Symbolic | None:
    if any(not at.is_pure_power for p in fs.pieces for at in p.atoms):
        return None
    mn = sp.m / sp.n
    K = (sp.mass_nu / sp.mass_omega) ** mn
    n_over_d = sp.n / sp.d
    pieces = []
    C = 0.0  # G at the right end of the current piece
    for p in sorted(fs.pieces, key=lambda pc: pc.lo, reverse=True):
        atoms = []
        full = 0.0
        for at in p.atoms:
            e = at.alpha + mn
            if e != 0:
                # integral_x^hi c u^{e-1} du = c (hi^e - x^e) / e
                atoms.append(_x_power_atom(sp, e, -at.coeff / e))
                const = at.coeff * p.hi ** e / e
                lo_val = at.coeff * (p.hi ** e - p.lo ** e) / e if p.lo > 0 or e > 0 else math.inf
            else:
                # c (log hi - log x), log(|Omega|/x) = (n/d)(l_nu(t) - 1)
                atoms.append(PowerLogAtom(at.coeff * n_over_d, 0.0, 1.0))
                const = at.coeff * (math.log(p.hi / sp.mass_omega) - n_over_d)
                lo_val = at.coeff * math.log(p.hi / p.lo) if p.lo > 0 else math.inf
            atoms.append(PowerLogAtom(const))
            full += lo_val
        atoms.append(PowerLogAtom(C))
        merged = Symbolic(sp.mass_nu, (Piece(0.0, sp.mass_nu, tuple(atoms)),)).pieces[0].atoms
        lo_t = 0.0 if p.lo == 0 else _to_t(sp, p.lo)
        hi_t = sp.mass_nu if p.hi >= fs.a else _to_t(sp, p.hi)
        pieces.append(Piece(lo_t, hi_t, tuple(a_.scaled(K) for a_ in merged if a_.coeff != 0)))
        C += full
    return Symbolic(sp.mass_nu, tuple(reversed(pieces)))


def reduction_kernel(sp: SobolevParams, f, grid: GridSpec | None = None) -> FuncRep:
    """``Rf(t) = integral_{nu^{1-n/d} t^{n/d}}^{nu} f*(|Omega| s/nu) s^{m/n-1} ds`` on (0, nu]."""
    fs = f if isinstance(f, RearrangedFn) else rearrange(f, GridSpec(sp.mass_omega))
    base = to_symbolic(fs.base)
    if not base.pieces:
        return Symbolic(sp.mass_nu, ())
    out = _exact_kernel(sp, base)
    if out is None:
        # log-log interpolation error scales like the squared cell width
        g0 = grid or GridSpec(sp.mass_nu)
        grid = GridSpec(g0.a, g0.floor, max(g0.points_per_decade, 256))
        t = grid.points
        x = np.minimum(sp.mass_omega * (t / sp.mass_nu) ** (sp.n / sp.d), sp.mass_omega)
        g = multiply(base, atom(1.0, sp.m / sp.n - 1.0, a=sp.mass_omega))
        vals = tail_integrals(g, x) * (sp.mass_nu / sp.mass_omega) ** (sp.m / sp.n)
        out = Tabulated(grid, np.maximum(vals, 0.0))
    if not is_nonincreasing(out, rtol=1e-9):
        raise AssertionError("reduction kernel output must be nonincreasing")
    return out


def T_dmn(sp: SobolevParams, f, grid: GridSpec | None = None) -> RearrangedFn:
    """``t^{beta-1} sup_{s in [t, nu)} s^{1-beta} f*(s)`` with ``beta = (n-m)/d``."""
    grid = grid or GridSpec(sp.mass_nu)
    xi = atom(1.0, sp.beta - 1.0, a=sp.mass_nu)
    return sup_operator_Txi(xi, f, grid)


def lz_params(spec: NormSpec) -> tuple[float, float, float, float, float] | None:
    """``(p, q, alpha, beta, delta)`` for Lebesgue and unit-coefficient LZ specs."""
    if isinstance(spec, Lebesgue):
        return (spec.p, spec.p, 0.0, 0.0, 0.0)
    if isinstance(spec, LorentzKaramata):
        ex = spec.log_exponents
        b = _b_atom(spec.b)
        if ex is None or b.coeff != 1.0:
            return None
        return (spec.p, spec.q, *ex)
    return None


def is_T_bounded_known(sp: SobolevParams, Y: NormSpec) -> str:
    """``bounded`` / ``unbounded`` / ``unknown`` for T on the associate of Y."""
    return _T_rule(sp, Y)["status"]


def _T_rule(sp: SobolevParams, Y: NormSpec) -> dict:
    if math.isclose(sp.d, sp.n - sp.m):
        return {"status": "bounded", "reason": "d = n - m: T is the identity"}
    if isinstance(Y, (Intersection, Sum)):
        a, b = _T_rule(sp, Y.A), _T_rule(sp, Y.B)
        if a["status"] == b["status"] == "bounded":
            return {"status": "bounded", "reason": "bounded on the associates of both parts"}
        return {"status": "unknown", "reason": "componentwise rule inconclusive",
                "parts": [a, b]}
    lz = lz_params(Y)
    if lz is None:
        return {"status": "unknown", "reason": "no boundedness rule for this scale"}
    p, q, alpha, beta, delta = lz
    crit = sp.d / (sp.n - sp.m)
    if p > crit + _EDGE:
        return {"status": "bounded", "reason": f"p > d/(n-m) = {crit:g}"}
    if abs(p - crit) <= _EDGE:
        if q == 1 and (beta, delta) == (0.0, 0.0):
            ok = alpha >= 0
            return {"status": "bounded" if ok else "unbounded",
                    "reason": "p = d/(n-m), q = 1: needs alpha >= 0", "edge_case_q1": True}
        if q == 1:
            return {"status": "unknown", "reason": "p = d/(n-m), q = 1 with iterated logs",
                    "edge_case_q1": True}
        return {"status": "unbounded", "reason": "p = d/(n-m) with q > 1"}
    return {"status": "unbounded", "reason": f"p < d/(n-m) = {crit:g}"}


def mutual_optimality_check(sp: SobolevParams, Y: NormSpec) -> dict:
    rule = _T_rule(sp, Y)
    mo = {"bounded": True, "unbounded": False}.get(rule["status"])
    return {"mutually_optimal": mo, "reason": rule["reason"], "rule": rule}


def optimal_domain_norm(sp: SobolevParams, Y: NormSpec, f, grid: GridSpec | None = None) -> dict:
    """``||Rf||_Y``; it is the optimal-domain norm exactly when T is bounded on Y'."""
    Rf = reduction_kernel(sp, f, grid)
    value = 0.0 if not to_symbolic(Rf).pieces else norm(Y, Rf, grid or GridSpec(sp.mass_nu))
    rule = _T_rule(sp, Y)
    return {"value": float(value), "T_bounded": rule["status"], "reason": rule["reason"],
            "is_optimal_domain_norm": rule["status"] == "bounded"}


# --------------------------------------------------------------------------
# tables


def _table_params(sp: SobolevParams, X: NormSpec):
    lz = lz_params(X)
    if lz is None:
        raise UnsupportedCase("domain must be a Lebesgue or Lorentz-Zygmund space")
    p, q, alpha, beta, delta = lz
    if beta or delta:
        raise UnsupportedCase("domain with iterated logarithms is outside the tables")
    return p, q, alpha


def optimal_target_preset(sp: SobolevParams, X: NormSpec) -> NormSpec:
    """Optimal target for ``X = L^{p,q;alpha}`` with ``q in (1, inf]`` (weak table: q = inf)."""
    p, q, alpha = _table_params(sp, X)
    n, m, d, a = sp.n, sp.m, sp.d, sp.mass_nu
    if not q > 1:
        raise UnsupportedCase("tables cover q in (1, inf]")
    iq = 0.0 if math.isinf(q) else 1.0 / q
    crit = n / m
    if 1 < p < crit - _EDGE:
        return lorentz_zygmund(d * p / (n - m * p), q, alpha, a=a)
    if abs(p - crit) <= _EDGE:
        if alpha < 1 - iq - _EDGE:
            return lorentz_zygmund("inf", q, alpha - 1.0, a=a)
        if abs(alpha - (1 - iq)) <= _EDGE:
            return lorentz_zygmund("inf", q, -iq, -1.0, a=a)
    raise UnsupportedCase("need p in (1, n/m), or p = n/m with alpha <= 1 - 1/q")


def endpoint_target_preset(sp: SobolevParams, p, q, alpha: float) -> dict:
    """Mutually optimal ``X``, ``Y_X = L^{p,1;alpha} cap Z`` and the endpoint space ``Lambda_psi``."""
    from .sum_spaces import inclusion_verdict, ratio_kind

    p = math.inf if isinstance(p, str) else float(p)
    q = math.inf if isinstance(q, str) else float(q)
    n, m, d, a = sp.n, sp.m, sp.d, sp.mass_nu
    crit = d / (n - m)
    if not p > crit:
        raise UnsupportedCase(f"need p in (d/(n-m), inf] = ({crit:g}, inf]")
    if not q > 1:
        raise UnsupportedCase("need q in (1, inf]")
    iq = 0.0 if math.isinf(q) else 1.0 / q
    if math.isinf(p):
        if not alpha + 1 < 0:
            raise UnsupportedCase("p = inf needs alpha + 1 < 0")
        Lpsi = lorentz_zygmund("inf", 1, alpha, a=a)
        Z = lorentz_zygmund("inf", q, alpha + 1 - iq, 1 - iq, a=a)
        psi = PowerLogAtom(1.0, 0.0, alpha + 1)
        X = {"kind": "intersection", "parts": [
            spec_to_json(lorentz_zygmund(n / m, 1, alpha + 1, a=sp.mass_omega)),
            {"kind": "reduction_functional", "q": "inf" if math.isinf(q) else q,
             "weight": {"alpha": -iq, "beta": alpha + 1 - iq, "gamma": 1 - iq}}]}
        row = "p=inf"
    else:
        Lpsi = lorentz_zygmund(p, 1, alpha, a=a)
        Z = lorentz_zygmund(p, q, alpha + 1 - iq, a=a)
        psi = PowerLogAtom(1.0, 1.0 / p, alpha)
        P = n * p / (d + m * p)
        X = spec_to_json(Intersection(lorentz_zygmund(P, 1, alpha, a=sp.mass_omega),
                                      lorentz_zygmund(P, q, alpha + 1 - iq, a=sp.mass_omega)))
        row = "p<inf"
    YX = Intersection(Lpsi, Z)
    inc = inclusion_verdict(Z, Lpsi)
    report = {
        "row": row,
        "psi": psi.to_dict(),
        "mutual_optimality": mutual_optimality_check(sp, YX),
        "ratio_psi_over_phi_Y_X": ratio_kind(Lpsi, YX),
        "ratio_psi_over_phi_Z": ratio_kind(Lpsi, Z),
        "Y_X_into_Lambda_psi": True,
        "Z_not_in_Lambda_psi": inc,
    }
    v = compactness_verdict(sp, None, Lpsi, Y_X=YX)
    report["verdict"] = v.kind
    return {"X": X, "Y_X": YX, "Z": Z, "Lambda_psi": Lpsi, "report": report,
            "verdict": v}


# --------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Verdict:
    kind: str  # compact | noncompact | unknown
    reason: str
    certificate: dict = field(default_factory=dict)
    floor: float | None = None
    rtol: float | None = None

    def to_dict(self) -> dict:
        return {"verdict": self.kind, "reason": self.reason, "certificate": self.certificate,
                "floor": self.floor, "rtol": self.rtol}


def _key(spec: NormSpec) -> str:
    return json.dumps(spec_to_json(spec), sort_keys=True)


def _is_L_inf(Y: NormSpec) -> bool:
    if isinstance(Y, Lebesgue):
        return math.isinf(Y.p)
    lz = lz_params(Y)
    return lz is not None and math.isinf(lz[0]) and math.isinf(lz[1]) and lz[2:] == (0.0, 0.0, 0.0)


def _marcinkiewicz_type(S: NormSpec) -> bool:
    if isinstance(S, Marcinkiewicz):
        return True
    lz = lz_params(S)
    return lz is not None and math.isinf(lz[1])


def _endpoint_type(S: NormSpec) -> bool:
    if isinstance(S, LorentzEndpoint):
        return True
    lz = lz_params(S)
    return lz is not None and lz[1] == 1


def _degenerate(sp: SobolevParams, X: NormSpec) -> bool | None:
    from .sum_spaces import inclusion_verdict

    ref = lorentz_zygmund(sp.critical_p, 1, a=X.a)
    return inclusion_verdict(X, ref)["included"]


def _psi_knot_certificate(Y: Marcinkiewicz, rtol: float) -> dict | None:
    """``psi(t_k) = phi(t_k)`` and ``psi(tau_k) <= 2^-k phi(tau_k)`` at float-representable knots."""
    o = Y.origin or {}
    if o.get("construction") != "psi" or "phi" not in o:
        return None
    phi = funcrep_from_json(o["phi"])
    tk = [10.0 ** x for x in o.get("log10_t_knots", []) if x > -280]
    tau = [(k, 10.0 ** x) for k, x in enumerate(o.get("log10_tau", []), start=1) if x > -280]
    hits = [float(Y.phi(t) / evaluate(phi, t)) for t in tk]
    dips = [float(Y.phi(t) / evaluate(phi, t)) * 2.0 ** k for k, t in tau]
    return {"knots_checked": len(hits), "limsup_ratio_at_knots": max(hits) if hits else None,
            "knots_equal": bool(hits) and all(abs(h - 1) <= rtol for h in hits),
            "max_2^k_ratio_at_tau": max(dips) if dips else None,
            "dips_ok": all(x <= 1 + rtol for x in dips),
            "extended_precision_certificate": o.get("limsup_certificate")}


def compactness_verdict(sp: SobolevParams, X: NormSpec | None, Y: NormSpec,
                        Y_X: NormSpec | None = None, grid: GridSpec | None = None,
                        rtol: float = DEFAULT_RTOL) -> Verdict:
    """Compactness of ``W^m X -> Y`` from the rule chain; Unknown outside it."""
    from .sum_spaces import inclusion_verdict, plan_sum_enlargement, ratio_kind
    from .counterexample import HypothesisViolated

    grid = grid or GridSpec(sp.mass_nu)
    mk = lambda kind, reason, cert=None: Verdict(kind, reason, cert or {}, grid.floor, rtol)  # noqa: E731
    if _is_L_inf(Y):
        raise OutOfCriterion("target L^inf is outside the compactness criterion")
    if Y_X is None:
        if X is None:
            raise ValueError("need a domain or its optimal target")
        if _degenerate(sp, X):
            return mk("unknown", "X lies in L^{n/m,1}: the optimal target is L^inf",
                      {"degenerate": True})
        try:
            Y_X = optimal_target_preset(sp, X)
        except UnsupportedCase as exc:
            return mk("unknown", f"optimal target not in the preset tables: {exc}")
    yx = spec_to_json(Y_X)

    # rule 1: the fundamental ratio does not vanish
    knots = _psi_knot_certificate(Y, rtol) if isinstance(Y, Marcinkiewicz) else None
    if knots is not None:
        ok = knots["knots_equal"] or bool(knots["extended_precision_certificate"])
        rk = {"kind": "oscillating" if ok else "inconclusive", "method": "construction knots",
              "limsup": 1.0 if ok else None, "knots": knots}
    else:
        rk = ratio_kind(Y, Y_X, grid)
    cert = {"Y_X": yx, "ratio": rk}
    if rk["kind"] in ("positive_finite", "infinite", "oscillating"):
        if _key(Y) == _key(Y_X):
            return mk("noncompact", "ratio ≡ 1", cert)
        reason = {"positive_finite": "phi_Y/phi_Y_X tends to a positive limit",
                  "oscillating": "limsup phi_Y/phi_Y_X > 0",
                  "infinite": "phi_Y/phi_Y_X unbounded: the embedding itself fails"}[rk["kind"]]
        return mk("noncompact", reason, cert)

    # rule 2: constructions with a non-almost-compact certificate
    if isinstance(Y, Sum):
        for A, B in ((Y.A, Y.B), (Y.B, Y.A)):
            if _key(A) == _key(Y_X):
                try:
                    plan = plan_sum_enlargement(A, B, grid)
                except HypothesisViolated as exc:
                    cert["sum_plan_failure"] = exc.condition
                    continue
                cert["sum_plan"] = plan.to_dict()
                return mk("noncompact", "Y = Y_X + Z with phi_Z/phi_Y_X -> 0 and Y_X not in Z", cert)
    if isinstance(Y, EnlargedY) and _marcinkiewicz_type(Y_X):
        from .norms import fundamental_atom

        conds = check_conditions(Y.params)
        phi_at = to_symbolic(Y.params.phi.f).pieces[0].atoms
        ya = fundamental_atom(Y_X)
        same = ratio_kind(Marcinkiewicz(Y.params.phi), Y_X, grid)["kind"] == "positive_finite" \
            if ya is not None and phi_at else False
        cert["conditions"] = conds.to_dict()
        cert["phi_equivalent_to_phi_Y_X"] = same
        if conds.all_pass and same:
            return mk("noncompact", "Y enlarges M_phi with phi ~ phi_Y_X and all hypotheses hold",
                      cert)
    if isinstance(Y_X, Intersection):
        for A, B in ((Y_X.A, Y_X.B), (Y_X.B, Y_X.A)):
            if _key(A) == _key(Y):
                inc = inclusion_verdict(B, A)
                cert["other_part_in_Y"] = inc
                if inc["included"] is False:
                    return mk("noncompact", "Y_X = Y cap Z with Z not in Y", cert)

    # rules 3 and 4: vanishing ratio with endpoint Y_X or Marcinkiewicz Y
    if rk["kind"] == "zero":
        if _endpoint_type(Y_X):
            return mk("compact", "Y_X is a Lorentz endpoint space and phi_Y/phi_Y_X -> 0", cert)
        if _marcinkiewicz_type(Y) and not (isinstance(Y, Marcinkiewicz) and Y.origin):
            return mk("compact", "Y is a Marcinkiewicz space and phi_Y/phi_Y_X -> 0", cert)
    return mk("unknown", "no rule of the chain applies", cert)


def verdict_sweep(sp: SobolevParams, ps, alphas, q, s: float = 1.0,
                  grid: GridSpec | None = None) -> list[dict]:
    """Verdicts for Y = Y_X and the sum enlargement over a (p, alpha) lattice."""
    from .sum_spaces import lz_noncompact_target

    rows = []
    for p in ps:
        for alpha in alphas:
            X = lorentz_zygmund(p, q, alpha, a=sp.mass_omega)
            base = {"p": float(p), "alpha": float(alpha), "q": q if isinstance(q, str) else float(q)}
            try:
                YX = optimal_target_preset(sp, X)
            except UnsupportedCase as exc:
                rows.append({**base, "target": "-", "verdict": "unsupported", "reason": str(exc)})
                continue
            v = compactness_verdict(sp, X, YX, grid=grid)
            rows.append({**base, "target": "Y_X", "verdict": v.kind, "reason": v.reason})
            try:
                Y = lz_noncompact_target(sp, p, q, alpha, s, grid, weight_checks=False)["Y"]
            except UnsupportedCase as exc:
                rows.append({**base, "target": "sum", "verdict": "unsupported", "reason": str(exc)})
                continue
            v = compactness_verdict(sp, X, Y, grid=grid)
            rows.append({**base, "target": "sum", "verdict": v.kind, "reason": v.reason})
    return rows
