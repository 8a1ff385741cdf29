from __future__ import annotations

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import GridSpec, atom, constant, evaluate, indicator, step_function
from rikit.norms import Lebesgue, Marcinkiewicz, Sum, lorentz_zygmund
from rikit.rearrange import rearrange
from rikit.sobolev_embed import (
    OutOfCriterion,
    SobolevParams,
    T_dmn,
    UnsupportedCase,
    compactness_verdict,
    endpoint_target_preset,
    is_T_bounded_known,
    optimal_domain_norm,
    optimal_target_preset,
    reduction_kernel,
    verdict_sweep,
)


@pytest.mark.parametrize("args", [(1, 1, 1), (3, 3, 3), (3, 1, 1.5), (3, 1, 3.5), (2.5, 1, 2)])
def test_params_validation(args):
    with pytest.raises(ValueError):
        SobolevParams(*args)


def test_beta():
    assert SobolevParams(3, 1, 2.5).beta == pytest.approx(0.8)


@pytest.mark.parametrize("nu,om", [(1.0, 1.0), (2.0, 3.0)])
def test_kernel_of_constant(nu, om):
    sp = SobolevParams(3, 1, 2.5, nu, om)
    Rf = reduction_kernel(sp, constant(1.0, a=om))
    t = np.array([1e-6, 0.1, 0.7]) * nu
    x = om * (t / nu) ** (sp.n / sp.d)
    want = (nu / om) ** (1 / 3) * 3.0 * (om ** (1 / 3) - x ** (1 / 3))
    assert np.allclose(evaluate(Rf, t), want, rtol=1e-12)


def test_kernel_of_log_against_mpmath():
    sp = SobolevParams(3, 1, 2.5)
    Rf = reduction_kernel(sp, atom(1.0, 0.0, 1.0))
    for t in (1e-4, 0.05, 0.5):
        x = t ** (3 / 2.5)
        with mpmath.workdps(30):
            ref = mpmath.quad(lambda s: (1 - mpmath.log(s)) * s ** (mpmath.mpf(1) / 3 - 1), [x, 1])
        assert float(evaluate(Rf, t)) == pytest.approx(float(ref), rel=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=7))
def test_T_is_identity_when_beta_one(vals):
    sp = SobolevParams(3, 1, 2.0)
    f = step_function(np.linspace(0, 1, len(vals) + 1), vals)
    g = GridSpec(1.0, 1e-6, 16)
    assert np.array_equal(T_dmn(sp, f, g)(g.points), rearrange(f, g)(g.points))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=2, max_size=7))
def test_T_bounds(vals):
    # f* <= T f <= (nu/t)^{1-b} f*(0), and t^{1-b} T f(t) is nonincreasing
    sp = SobolevParams(3, 1, 2.5)
    f = step_function(np.linspace(0, 1, len(vals) + 1), vals)
    g = GridSpec(1.0, 1e-6, 16)
    t = g.points
    fs = rearrange(f, g)
    Tf = T_dmn(sp, f, g)(t)
    assert np.all(Tf >= fs(t) * (1 - 1e-12))
    assert np.all(Tf <= t ** (sp.beta - 1) * max(vals) * (1 + 1e-12))
    u = t ** (1 - sp.beta) * Tf
    assert np.all(np.diff(u) <= 1e-12 * u[:-1])


def test_T_of_indicator():
    sp = SobolevParams(3, 1, 2.5)
    s = 0.25
    t = np.array([1e-4, 0.01, 0.1, 0.2])
    got = T_dmn(sp, indicator(s))(t)
    assert np.allclose(got, (s / t) ** (1 - sp.beta), rtol=1e-12)
    assert T_dmn(sp, indicator(s))(np.array([0.5]))[0] == 0.0


@pytest.mark.parametrize("Y,status", [
    (Lebesgue(2.0), "bounded"),
    (Lebesgue(1.2), "unbounded"),
    (lorentz_zygmund(1.25, 1, 0.5), "bounded"),
    (lorentz_zygmund(1.25, 1, -0.5), "unbounded"),
    (lorentz_zygmund(1.25, 2), "unbounded"),
    (lorentz_zygmund(1.25, 1, 0.0, 1.0), "unknown"),
    (Marcinkiewicz(atom(1.0, 0.5)), "unknown"),
])
def test_T_boundedness_rule(Y, status):
    # d/(n-m) = 1.25 for (5, 1, 5)
    assert is_T_bounded_known(SobolevParams(5, 1, 5.0), Y) == status


def test_identity_case_always_bounded():
    assert is_T_bounded_known(SobolevParams(3, 1, 2.0), Lebesgue(1.0)) == "bounded"


def test_optimal_domain_norm_reports_rule():
    sp = SobolevParams(5, 1, 5.0)
    r = optimal_domain_norm(sp, Lebesgue(2.0), indicator(0.5))
    assert r["is_optimal_domain_norm"] and r["value"] > 0


def test_optimal_target_presets():
    sp = SobolevParams(3, 1, 2.5)
    Y = optimal_target_preset(sp, lorentz_zygmund(1.5, 2, 0.5))
    assert (Y.p, Y.q) == (pytest.approx(2.5 * 1.5 / 1.5), 2.0)
    Y = optimal_target_preset(sp, lorentz_zygmund(3, 2, 0.0))
    assert Y.p == float("inf") and Y.log_exponents[0] == pytest.approx(-1.0)
    for X in (lorentz_zygmund(3, 2, 0.9), lorentz_zygmund(1.5, 1), lorentz_zygmund(1.5, 2, 0.0, 1.0)):
        with pytest.raises(UnsupportedCase):
            optimal_target_preset(sp, X)


def test_verdict_self_target_noncompact():
    sp = SobolevParams(3, 1, 2.5)
    X = lorentz_zygmund(1.5, 2, 0.5)
    v = compactness_verdict(sp, X, optimal_target_preset(sp, X))
    assert v.kind == "noncompact" and v.reason == "ratio ≡ 1"


def test_verdict_L_infinity_out_of_criterion():
    sp = SobolevParams(3, 1, 2.5)
    with pytest.raises(OutOfCriterion):
        compactness_verdict(sp, Lebesgue(1.5), Lebesgue(float("inf")))


def test_verdict_compact_marcinkiewicz():
    # Y_X = L^{inf,2;-1} has phi ~ l^{-1/2}; t^{0.6} l^{-1} vanishes faster
    sp = SobolevParams(3, 1, 2.5)
    v = compactness_verdict(sp, lorentz_zygmund(3, 2, 0.0), Marcinkiewicz(atom(1.0, 0.6, -1.0)))
    assert v.kind == "compact"


def test_verdict_sum_target_noncompact():
    sp = SobolevParams(3, 1, 2.5)
    X = lorentz_zygmund(1.5, 2, 0.5)
    YX = optimal_target_preset(sp, X)
    v = compactness_verdict(sp, X, Sum(YX, lorentz_zygmund(2.5, 1, 0.0)))
    assert v.kind == "noncompact" and "sum_plan" in v.certificate


def test_verdict_degenerate_domain_unknown():
    sp = SobolevParams(3, 1, 2.5)
    v = compactness_verdict(sp, lorentz_zygmund(3, 1), Lebesgue(2.0))
    assert v.kind == "unknown" and v.certificate.get("degenerate")


@pytest.mark.parametrize("p,q,alpha,row", [(4, 2, 0.5, "p<inf"), ("inf", 3, -2.0, "p=inf")])
def test_endpoint_presets(p, q, alpha, row):
    out = endpoint_target_preset(SobolevParams(3, 1, 2.5), p, q, alpha)
    rep = out["report"]
    assert rep["row"] == row
    assert rep["mutual_optimality"]["mutually_optimal"] is True
    assert rep["Z_not_in_Lambda_psi"]["included"] is False
    assert rep["verdict"] == "noncompact"


def test_endpoint_preset_rejections():
    sp = SobolevParams(3, 1, 2.5)
    with pytest.raises(UnsupportedCase):
        endpoint_target_preset(sp, 1.2, 2, 0.0)
    with pytest.raises(UnsupportedCase):
        endpoint_target_preset(sp, "inf", 2, -0.5)


def test_sweep_rows():
    rows = verdict_sweep(SobolevParams(3, 1, 2.5), [1.5, 3.0], [0.0, 0.5], 2.0)
    assert len(rows) == 8
    assert all(r["verdict"] == "noncompact" for r in rows)
    assert {r["target"] for r in rows} == {"Y_X", "sum"}
