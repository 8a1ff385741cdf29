from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import GridSpec, atom, evaluate, step_function
from rikit.marc_enlarge import (
    UnsupportedCase,
    check_conditions,
    fundamental_bound,
    marcinkiewicz_sup_form,
    noncompactness_certificate,
    norm_Y,
    params_from_json,
    params_to_json,
    preset,
    sup_operator_Txi,
    witness_sequence,
)
from rikit.rearrange import rearrange

CONDITIONS = {"recip_phi_average_bounded", "phi_over_tau_integrable", "b_finite",
              "recip_tau_not_integrable", "tau_over_phi_matches_xi_primitive", "xi_b_average_bounded"}


@pytest.fixture(scope="module")
def p_i():
    return preset("i", alpha=0.5, beta=1.0)


def test_condition_names_and_pass(p_i):
    rep = check_conditions(p_i)
    assert CONDITIONS <= set(rep.names())
    assert rep.all_pass


def test_preset_ii_conditions():
    assert check_conditions(preset("ii", beta=-1.0)).all_pass


@pytest.mark.parametrize("k", [10, 100, 1000])
def test_witness_sup_form_is_one(p_i, k):
    assert marcinkiewicz_sup_form(p_i.phi, witness_sequence(p_i, k)) == pytest.approx(1.0, abs=1e-9)


def test_fundamental_bound_finite(p_i):
    fb = fundamental_bound(p_i)
    assert fb["finite"] and fb["ratio_limit"] == "zero"


def test_certificate_quarter(p_i):
    cert = noncompactness_certificate(p_i, [0.1, 0.01])
    assert cert["all_pass"]
    assert all(it["value"] >= 0.25 for it in cert["items"])


def test_certificate_inconclusive_at_coarse_floor():
    p = preset("i", alpha=0.5, beta=1.0, grid=GridSpec(1.0, 1e-3))
    cert = noncompactness_certificate(p, [0.01], p.grid)
    assert cert["inconclusive"]
    assert cert["items"][0]["status"] == "inconclusive at this floor"


def test_unsupported_presets():
    with pytest.raises(UnsupportedCase):
        preset("i", alpha=1.5)
    with pytest.raises(UnsupportedCase):
        preset("ii", beta=0.5)
    with pytest.raises(UnsupportedCase):
        preset("lz")


def test_params_json_round_trip(p_i):
    again = params_from_json(params_to_json(p_i))
    t = np.array([1e-5, 0.3])
    assert np.allclose(again.phi(t), p_i.phi(t))
    assert np.allclose(evaluate(again.xi, t), evaluate(p_i.xi, t))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=2, max_size=8))
def test_sup_operator_with_constant_xi_is_identity(vals):
    f = step_function(np.linspace(0, 1, len(vals) + 1), vals)
    g = GridSpec(1.0, 1e-6, 16)
    out = sup_operator_Txi(atom(1.0, 0.0), f, g)
    assert np.array_equal(out(g.points), rearrange(f, g)(g.points))


def test_norm_Y_dominates_quarter_of_witness_tail(p_i):
    fk = witness_sequence(p_i, 1000)
    assert norm_Y(p_i, fk) > 0.25
