from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import GridSpec, atom, evaluate
from rikit.scales import (
    QuasiconcaveFn,
    SlowlyVaryingFn,
    Weight,
    check_lambda_admissible,
    fundamental_identity_check,
    least_concave_majorant,
    quasiconcave_envelope,
)


def test_quasiconcave_rejects_decreasing():
    with pytest.raises(ValueError):
        QuasiconcaveFn(atom(1.0, -0.5))
    with pytest.raises(ValueError):
        QuasiconcaveFn(atom(1.0, 2.0))  # phi(t)/t increasing


def test_envelope_of_non_quasiconcave_power_log():
    f = atom(1.0, 0.75, 1.0)  # decreases near t = a
    g = GridSpec(1.0, 1e-8)
    env = quasiconcave_envelope(f, g)
    t = env.nodes
    v = env(t)
    assert np.all(v >= evaluate(f, t) * (1 - 1e-12))
    assert np.all(np.diff(v) >= -1e-12 * v[1:])
    assert np.all(np.diff(v / t) <= 1e-12 * (v / t)[:-1])
    # unchanged near the origin
    assert env(1e-7) == pytest.approx(float(evaluate(f, 1e-7)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-2.0, 2.0))
def test_concave_majorant_sandwich(sig, beta):
    g = GridSpec(1.0, 1e-6, 16)
    phi = quasiconcave_envelope(atom(1.0, sig, round(beta, 2)), g)
    maj = least_concave_majorant(phi)
    t = phi.nodes
    assert np.all(maj(t) >= phi(t) * (1 - 1e-12))
    assert np.all(maj(t) <= 2.0 * phi(t) * (1 + 1e-12))


def test_weight_with_infinite_primitive_rejected():
    with pytest.raises(ValueError):
        Weight(atom(1.0, -1.0))


@pytest.mark.parametrize("q,alpha,name", [
    (1.0, -0.5, "averages_nonincreasing"),
    (2.0, 0.0, "sawyer_condition"),
    (3.0, 1.0, "sawyer_condition"),
])
def test_lambda_admissibility_passes(q, alpha, name):
    rep = check_lambda_admissible(q, Weight(atom(1.0, alpha)))
    assert rep[name].passed and rep.all_pass


def test_lambda_q1_increasing_average_fails():
    rep = check_lambda_admissible(1.0, Weight(atom(1.0, 1.0)))
    assert rep["averages_nonincreasing"].passed is False


def test_fundamental_identity_for_dual_powers():
    r = fundamental_identity_check(atom(1.0, 0.3), atom(1.0, 0.7))
    assert r["max_dev"] <= 1e-12 and not r["unbounded_toward_zero"]
    r = fundamental_identity_check(atom(1.0, 0.3), atom(1.0, 0.5))
    assert r["max_dev"] > 1.0 and r["unbounded_toward_zero"]


def test_slowly_varying():
    b = SlowlyVaryingFn(atom(1.0, 0.0, 2.0, -1.0))
    assert b.exact and b.t0[0.5] > 0
    with pytest.raises(ValueError):
        SlowlyVaryingFn(atom(1.0, 0.5), GridSpec(1.0, 1e-6))
