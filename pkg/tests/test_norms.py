from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import GridSpec, Tabulated, atom, indicator, step_function
from rikit.norms import (
    InadmissibleSpec,
    Intersection,
    Lebesgue,
    LorentzEndpoint,
    Marcinkiewicz,
    Sum,
    check_ri_axioms,
    exact_associate,
    fundamental_atom,
    fundamental_function,
    lorentz_zygmund,
    norm,
    spec_from_json,
    spec_to_json,
    sum_norm,
)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 7.0])
def test_lebesgue_indicator(p):
    assert norm(Lebesgue(p), indicator(0.2)) == pytest.approx(0.2 ** (1 / p), rel=1e-12)
    assert norm(Lebesgue(math.inf), indicator(0.2)) == 1.0


@pytest.mark.parametrize("p,q,gamma", [(2.0, 1.0, 0.2), (3.0, 2.0, 0.1), (1.5, 4.0, 0.3)])
def test_lorentz_power_closed_form(p, q, gamma):
    # ||t^-gamma||_{p,q} = (q/p - q gamma)^{-1/q}
    val = norm(lorentz_zygmund(p, q), atom(1.0, -gamma))
    assert val == pytest.approx((q / p - q * gamma) ** (-1.0 / q), rel=1e-10)


def test_lorentz_zygmund_log_weight_against_mpmath():
    # ||chi_(0,s)||_{L^{2,2;1}} = (integral_0^s l(t)^2 dt)^{1/2}
    s = 0.3
    with mpmath.workdps(30):
        ref = float(mpmath.sqrt(mpmath.quad(lambda u: s * mpmath.exp(-u) * (1 + mpmath.log(1 / s) + u) ** 2,
                                            [0, mpmath.inf])))
    assert norm(lorentz_zygmund(2, 2, 1.0), indicator(s)) == pytest.approx(ref, rel=1e-10)


def test_inadmissible_lorentz():
    for args in [(0.5, 1), ("inf", 2, 0.0), (2, 0.5)]:
        with pytest.raises(InadmissibleSpec):
            lorentz_zygmund(*args)


def test_marcinkiewicz_and_endpoint_fundamental_functions():
    phi = atom(1.0, 0.5)
    M, L = Marcinkiewicz(phi), LorentzEndpoint(phi)
    for s in (1e-6, 0.01, 0.7):
        assert norm(M, indicator(s)) == pytest.approx(s**0.5, rel=1e-14)
    # the concave majorant is exact at grid nodes and chordal in between
    g = GridSpec(1.0)
    for s in g.points[[5, 300, -10]]:
        assert norm(L, indicator(float(s))) == pytest.approx(float(s) ** 0.5, rel=1e-14)
    assert norm(L, indicator(0.7)) == pytest.approx(0.7**0.5, rel=1e-4)


def test_tabulated_matches_symbolic_norm():
    g = GridSpec(1.0, 1e-10, 128)
    f = atom(1.0, -0.25)
    tab = Tabulated(g, g.points**-0.25)
    for spec in (Lebesgue(2.0), lorentz_zygmund(3, 1)):
        assert norm(spec, tab, g) == pytest.approx(norm(spec, f, g), rel=1e-4)


steps = st.lists(st.integers(0, 16), min_size=2, max_size=6)


@settings(max_examples=20, deadline=None)
@given(steps)
def test_sum_and_intersection_sandwich(vals):
    f = step_function(np.linspace(0, 1, len(vals) + 1), np.array(vals) / 4.0)
    A, B = Lebesgue(2.0), lorentz_zygmund(4, 1)
    nA, nB = norm(A, f), norm(B, f)
    assert sum_norm(Sum(A, B), f)["value"] <= min(nA, nB) * (1 + 1e-12)
    assert norm(Intersection(A, B), f) == max(nA, nB)


def test_ri_axioms_for_lebesgue():
    assert check_ri_axioms(Lebesgue(2.0)).all_pass


def test_exact_associates():
    assert exact_associate(Lebesgue(3.0)) == Lebesgue(1.5)
    assp = exact_associate(lorentz_zygmund(2, "inf"))
    assert (assp.p, assp.q) == (2.0, 1.0)


def test_fundamental_function_and_atom():
    spec = lorentz_zygmund(2, 2, 1.0)
    at = fundamental_atom(spec)
    assert (at.alpha, at.beta) == (0.5, 1.0)
    phi = fundamental_function(Lebesgue(4.0))
    assert phi(0.0625) == pytest.approx(0.5)


@pytest.mark.parametrize("spec", [
    Lebesgue(2.0),
    lorentz_zygmund(3, 2, 0.5, -1.0),
    Sum(Lebesgue(2.0), lorentz_zygmund(4, 1)),
    Intersection(Lebesgue(2.0), lorentz_zygmund(2, "inf", 1.0)),
    Marcinkiewicz(atom(1.0, 0.5)),
])
def test_spec_json_round_trip(spec):
    again = spec_from_json(spec_to_json(spec))
    assert spec_to_json(again) == spec_to_json(spec)
