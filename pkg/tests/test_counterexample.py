from __future__ import annotations

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.counterexample import (
    HypothesisViolated,
    construct_psi,
    enlarged_marcinkiewicz_target,
    psi_table,
    verify_psi,
)
from rikit.funcrep import atom, constant


@pytest.fixture(scope="module")
def sqrt_construction():
    phi = atom(1.0, 0.5)
    return phi, construct_psi(phi, K=8)


def test_all_certificates(sqrt_construction):
    phi, c = sqrt_construction
    rep = verify_psi(phi, c)
    assert rep.all_pass, rep.to_dict()
    assert c.levels == 8


def test_knots_interleave_and_psi_touches_phi(sqrt_construction):
    phi, c = sqrt_construction
    with mpmath.workdps(60):
        for k, tau in enumerate(c.tau_seq, start=1):
            assert c.t_seq[k] < tau < c.t_seq[k - 1] / 2
            assert c.psi_mp(tau) <= c.phi_mp(tau) / 2**k
        for t in c.t_seq:
            assert abs(c.psi_mp(t) / c.phi_mp(t) - 1) < mpmath.mpf(10) ** -25


def test_psi_below_phi_on_grid(sqrt_construction):
    _, c = sqrt_construction
    rows = np.array(psi_table(c))
    assert np.all(rows[:, 3] <= 1 + 1e-12)
    assert np.all(np.diff(rows[:, 2]) >= -1e-12 * rows[1:, 2])


@settings(max_examples=6, deadline=None)
@given(st.floats(0.1, 0.9))
def test_construction_for_powers(sig):
    phi = atom(1.0, round(sig, 3))
    c = construct_psi(phi, K=5)
    assert verify_psi(phi, c).all_pass


def test_partial_construction_at_float_floor():
    phi = atom(1.0, 0.5)
    c = construct_psi(phi, K=10, floor=1e-8)
    rep = verify_psi(phi, c)
    assert c.levels < 10
    assert rep["levels_reached"].passed is False
    assert any("floor" in n for n in c.notes)


@pytest.mark.parametrize("phi,cond", [
    (constant(1.0), "phi_vanishes_at_zero"),
    (atom(1.0, 1.0), "t_over_phi_vanishes"),
])
def test_hypotheses_named(phi, cond):
    with pytest.raises(HypothesisViolated) as exc:
        construct_psi(phi, K=3)
    assert exc.value.condition == cond


def test_enlarged_target_report(sqrt_construction):
    _, c = sqrt_construction
    spec, report = enlarged_marcinkiewicz_target(c)
    assert report["verdict"] == "noncompact"
    assert report["inclusion_M_phi_in_M_psi"] and report["strict_inclusion"]
    assert report["membership_witness"]["phi_over_psi_at_tau_k_at_least_2^k"]
    assert spec.origin["construction"] == "psi"
    assert len(spec.origin["log10_tau"]) == c.levels
