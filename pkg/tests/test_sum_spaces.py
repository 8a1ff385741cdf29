from __future__ import annotations

import math

import pytest

from rikit.counterexample import HypothesisViolated
from rikit.funcrep import atom
from rikit.norms import Lebesgue, Sum, lorentz_zygmund
from rikit.scales import Weight
from rikit.sobolev_embed import SobolevParams, UnsupportedCase
from rikit.sum_spaces import (
    check_lambda_sum_conditions,
    check_sup_sum_conditions,
    inclusion_verdict,
    lz_noncompact_target,
    plan_sum_enlargement,
    ratio_kind,
)


@pytest.mark.parametrize("Z1,Z2,expected", [
    (Lebesgue(4.0), Lebesgue(2.0), True),
    (Lebesgue(2.0), Lebesgue(4.0), False),
    (lorentz_zygmund(2, 1), lorentz_zygmund(2, 2), True),
    (lorentz_zygmund(2, 2), lorentz_zygmund(2, 1), False),
    (lorentz_zygmund(2, "inf"), lorentz_zygmund(2, 1, -1.0), False),
    (lorentz_zygmund(2, 2, 1.0), lorentz_zygmund(2, 2), True),
])
def test_inclusion_verdicts(Z1, Z2, expected):
    assert inclusion_verdict(Z1, Z2)["included"] is expected


def test_ratio_kinds():
    assert ratio_kind(Lebesgue(2.0), Lebesgue(4.0))["kind"] == "zero"
    assert ratio_kind(Lebesgue(4.0), Lebesgue(2.0))["kind"] == "infinite"
    assert ratio_kind(lorentz_zygmund(2, 1), lorentz_zygmund(2, 3))["kind"] == "positive_finite"


def test_plan_for_weak_type_plus_log_lorentz():
    Z1, Z2 = lorentz_zygmund(2, "inf"), lorentz_zygmund(2, 1, -1.0)
    plan = plan_sum_enlargement(Z1, Z2)
    assert plan.conditions.all_pass
    assert plan.Y == Sum(Z1, Z2)
    # phi_Y ~ phi_Z1 = t^{1/2}, and the associate is a Lorentz space with q = 1
    assert 1.0 <= plan.duality_constant() < 4.0
    assert plan.flags["associate_absolutely_continuous"] is True


@pytest.mark.parametrize("Z1,Z2,cond", [
    (Lebesgue(2.0), Lebesgue(2.0), "ratio_zero"),
    (Lebesgue(4.0), Lebesgue(2.0), "not_included"),
])
def test_plan_rejections(Z1, Z2, cond):
    with pytest.raises(HypothesisViolated) as exc:
        plan_sum_enlargement(Z1, Z2)
    assert exc.value.condition == cond


@pytest.mark.parametrize("p,q,alpha,row", [
    (1.5, 2, 0.5, "p<n/m"),
    (1.5, "inf", 0.5, "p<n/m"),
    (3, 2, 0.0, "p=n/m,alpha<1-1/q"),
    (3, 2, 0.5, "p=n/m,alpha=1-1/q"),
    (3, "inf", 1.0, "p=n/m,alpha=1-1/q"),
])
def test_lz_noncompact_target_rows(p, q, alpha, row):
    sp = SobolevParams(3, 1, 2.5)
    out = lz_noncompact_target(sp, p, q, alpha, 1.0)
    rep = out["report"]
    assert rep["row"] == row and rep["verdict"] == "noncompact"
    assert rep["ratio_zero_certificate"]["kind"] == "zero"
    assert rep["non_inclusion_certificate"]["included"] is False
    if q != "inf":
        assert all(it["passed"] for it in rep["weight_conditions"]["items"])


def test_lz_noncompact_target_unsupported():
    sp = SobolevParams(3, 1, 2.5)
    with pytest.raises(UnsupportedCase):
        lz_noncompact_target(sp, 3, 2, 0.9, 1.0)
    with pytest.raises(UnsupportedCase):
        lz_noncompact_target(sp, 1.5, 2, 0.0, 2.0)


def test_lambda_sum_conditions_for_powers():
    # v = t^{-1/2} (q = 2, L^{4,2}); w = t^{0}ℓ^{-2} (r = 1)
    rep = check_lambda_sum_conditions(2.0, Weight(atom(1.0, -0.5)), 1.0, Weight(atom(1.0, 0.0, -2.0)))
    assert rep["sawyer_condition"].passed
    assert rep["ratio_zero"].passed


def test_lambda_sum_conditions_argument_errors():
    v = Weight(atom(1.0, -0.5))
    for q, r in [(2.0, 2.0), (math.inf, 1.0), (2.0, 0.5)]:
        with pytest.raises(ValueError):
            check_lambda_sum_conditions(q, v, r, v)
    with pytest.raises(ValueError):
        check_sup_sum_conditions(v, math.inf, v)


def test_sup_sum_conditions_unbounded_v():
    rep = check_sup_sum_conditions(Weight(atom(1.0, -0.5)), 1.0, Weight(atom(1.0, 0.0)))
    assert rep["vtilde_finite"].passed is False


def test_lambda_sum_conditions_constant_v():
    # V = t, W ~ 2 t^{1/2} l^{-2}: W/V^{1/2} -> 0, but (W/V)^2 ~ 4 t^{-1} l^{-4} is integrable
    rep = check_lambda_sum_conditions(2.0, Weight(atom(1.0, 0.0)), 1.0, Weight(atom(1.0, -0.5, -2.0)))
    assert rep["ratio_zero"].passed is True
    assert rep["divergence"].passed is False


def test_lambda_sum_conditions_equal_weights():
    # W = V: the ratio V^{1/r - 1/q} vanishes; V^{q/(q-r)} v is integrable
    v = Weight(atom(1.0, 0.0))
    rep = check_lambda_sum_conditions(2.0, v, 1.0, v)
    assert rep["ratio_zero"].passed is True
    assert rep["divergence"].passed is False
