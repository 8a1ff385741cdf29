from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import (
    DomainError,
    GridSpec,
    PowerLogAtom,
    Tabulated,
    asymptotic_primitive,
    atom,
    atom_limit_kind,
    cumulative,
    evaluate,
    funcrep_from_json,
    funcrep_to_json,
    indicator,
    integrate,
    limit_at_zero,
    multiply,
    step_function,
    tail_integrals,
)

exps = st.floats(-2.0, 2.0, allow_nan=False).map(lambda x: round(x, 3))


def _mp_integral(c, alpha, beta, a=1.0):
    # t = a e^{-u} removes the endpoint singularity
    with mpmath.workdps(30):
        f = lambda u: c * a ** (alpha + 1) * mpmath.exp(-u * (alpha + 1)) * (1 + u) ** beta  # noqa: E731
        return float(mpmath.quad(f, [0, 1, mpmath.inf]))


def test_grid_floor_relative_to_a(monkeypatch):
    monkeypatch.setenv("RIKIT_GRID_FLOOR", "1e-6")
    g = GridSpec(4.0)
    assert g.floor == pytest.approx(4e-6)
    assert g.points[0] == g.floor and g.points[-1] == 4.0
    assert np.all(np.diff(g.points) > 0)


def test_grid_rejects_bad_floor():
    with pytest.raises(ValueError):
        GridSpec(1.0, 2.0)


@given(exps, exps, exps, exps)
def test_atom_product_adds_exponents(a1, b1, a2, b2):
    x, y = PowerLogAtom(2.0, a1, b1), PowerLogAtom(0.5, a2, b2)
    z = x * y
    assert z.coeff == 1.0
    assert z.alpha == a1 + a2 and z.beta == b1 + b2
    t = np.array([1e-3, 0.2, 0.9])
    assert np.allclose(z(t, 1.0), x(t, 1.0) * y(t, 1.0), rtol=1e-12)


@pytest.mark.parametrize("alpha,beta", [(-0.5, 2.0), (0.3, -1.0), (-0.9, 0.0), (1.5, 3.0)])
def test_integrate_matches_mpmath(alpha, beta):
    got = integrate(atom(1.0, alpha, beta)).value
    assert got == pytest.approx(_mp_integral(1.0, alpha, beta), rel=1e-10)


def test_integrate_log_critical_closed_form():
    # integral_0^1 dt / (t l^2) = 1 / l(1) = 1
    assert integrate(atom(1.0, -1.0, -2.0)).value == pytest.approx(1.0, rel=1e-10)
    assert integrate(atom(1.0, -1.0, -1.0)).divergent
    assert integrate(atom(1.0, -1.0)).divergent


def test_integrate_outside_domain():
    with pytest.raises(DomainError):
        integrate(atom(1.0, 0.0), 0.0, 2.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), exps.filter(lambda x: x > -0.9), exps)
def test_cumulative_plus_tail_is_total(p, alpha, beta):
    f = atom(1.0, alpha, beta)
    total = integrate(f).value
    head = float(cumulative(f, [p])[0])
    tail = float(tail_integrals(f, [p])[0])
    assert head + tail == pytest.approx(total, rel=1e-10)


def test_step_function_integral_exact():
    f = step_function([0.0, 0.25, 0.5, 1.0], [4.0, 2.0, 1.0])
    assert integrate(f).value == 1.0 + 0.5 + 0.5
    assert evaluate(f, 0.3) == 2.0


def test_asymptotic_primitive():
    at = asymptotic_primitive(PowerLogAtom(1.0, -1.0, -2.0))
    assert at.exponents == (0.0, -1.0, 0.0, 0.0) and at.coeff == 1.0
    assert asymptotic_primitive(PowerLogAtom(1.0, -1.0, -1.0)) is None
    at = asymptotic_primitive(PowerLogAtom(3.0, 0.5))
    assert at.alpha == 1.5 and at.coeff == pytest.approx(2.0)


@pytest.mark.parametrize("at,kind", [
    (PowerLogAtom(1.0, 0.5), "zero"),
    (PowerLogAtom(1.0, 0.0, 1.0), "infinite"),
    (PowerLogAtom(2.0), "positive_finite"),
    (PowerLogAtom(1.0, 0.0, 0.0, -1.0), "zero"),
    (PowerLogAtom(1.0, -0.1, -5.0), "infinite"),
])
def test_atom_limit_kind(at, kind):
    assert atom_limit_kind(at) == kind


def test_limit_at_zero_symbolic_and_tabulated():
    assert limit_at_zero(atom(1.0, 0.25)).kind == "zero"
    assert limit_at_zero(atom(1.0, 0.0, 1.0)).kind == "infinite"
    g = GridSpec(1.0)
    t = g.points
    assert limit_at_zero(Tabulated(g, 3.0 + t)).kind == "positive_finite"
    assert limit_at_zero(Tabulated(g, t**0.3)).kind == "zero"
    assert limit_at_zero(Tabulated(g, t**-0.3)).kind == "infinite"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 5.0), exps, exps), min_size=1, max_size=3))
def test_json_round_trip(atoms):
    f = atom(*atoms[0])
    for c, al, be in atoms[1:]:
        f = multiply(f, atom(c, al, be))
    g = funcrep_from_json(funcrep_to_json(f))
    assert g == f


def test_tabulated_round_trip_and_interpolation():
    g = GridSpec(1.0, 1e-6, 16)
    tab = Tabulated(g, g.points**0.5)
    back = funcrep_from_json(funcrep_to_json(tab))
    assert np.array_equal(back.values, tab.values)
    # log-log interpolation is exact for pure powers
    assert evaluate(tab, 0.0123) == pytest.approx(0.0123**0.5, rel=1e-12)


def test_indicator_shape():
    f = indicator(0.25)
    assert evaluate(f, 0.1) == 1.0 and evaluate(f, 0.5) == 0.0
    assert integrate(f).value == 0.25
    assert math.isclose(integrate(multiply(f, atom(1.0, -0.5))).value, 1.0)
