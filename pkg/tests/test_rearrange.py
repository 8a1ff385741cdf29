from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rikit.funcrep import GridSpec, PowerLogAtom, Piece, Symbolic, atom, cumulative, evaluate, integrate, step_function
from rikit.norms import weighted_power_integral
from rikit.rearrange import (
    hardy_lemma_check,
    hardy_littlewood_check,
    is_nonincreasing,
    rearrange,
    rearrange_steps,
    star_star,
)

cells = st.lists(st.tuples(st.integers(1, 32), st.integers(-8, 8)), min_size=1, max_size=12)


def _step(cs):
    units = np.array([c[0] for c in cs], dtype=float)
    edges = np.concatenate([[0.0], np.cumsum(units / 32.0)])
    values = np.array([c[1] for c in cs], dtype=float) / 4.0
    return edges, values, step_function(edges, values, float(edges[-1]))


@settings(max_examples=60, deadline=None)
@given(cells)
def test_rearrangement_is_nonincreasing_and_equimeasurable(cs):
    edges, values, f = _step(cs)
    fs = rearrange(f).base
    assert is_nonincreasing(fs)
    for q in (1.0, 2.0, 3.5):
        assert weighted_power_integral(fs, q) == pytest.approx(weighted_power_integral(f, q), rel=1e-12,
                                                               abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(cells)
def test_level_sets_have_equal_measure(cs):
    edges, values, f = _step(cs)
    lengths = np.diff(edges)
    fs = rearrange_steps(lengths, values)
    absval = np.abs(values)
    for lam in np.unique(absval):
        want = lengths[absval > lam].sum()
        got = sum(p.hi - p.lo for p in fs.pieces if p.constant_value > lam)
        assert got == want


def test_affine_rearrangement_of_identity():
    f = atom(1.0, 1.0)
    fs = rearrange(f).base
    t = np.array([0.1, 0.5, 0.9])
    assert np.allclose(evaluate(fs, t), 1.0 - t, atol=1e-14)


def test_increasing_smooth_function_rearranges_to_reflection():
    f = atom(1.0, 2.0)  # t^2 on (0, 1)
    fs = rearrange(f, GridSpec(1.0, 1e-6, 256)).base
    t = np.array([0.1, 0.4, 0.8])
    assert np.allclose(evaluate(fs, t), (1.0 - t) ** 2, rtol=2e-2)
    assert integrate(fs).value == pytest.approx(1.0 / 3.0, rel=1e-9)


def test_star_star_of_indicator():
    f = Symbolic(1.0, (Piece(0.0, 0.25, (PowerLogAtom(1.0),)),))
    ss = star_star(rearrange(f))
    t = np.array([0.1, 0.25, 0.5, 1.0])
    assert np.allclose(ss(t), np.minimum(1.0, 0.25 / t), rtol=1e-14)


def test_star_star_dominates_f_star():
    f = atom(1.0, -0.5)
    fs = rearrange(f)
    ss = star_star(fs)
    t = GridSpec(1.0, 1e-8).points
    assert np.all(ss(t) >= fs(t))
    assert np.allclose(ss(t), 2.0 * t**-0.5, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(cells, cells)
def test_hardy_littlewood(c1, c2):
    _, _, f = _step(c1)
    _, _, g = _step(c2)
    # put both on (0, 1)
    f = Symbolic(1.0, tuple(Piece(p.lo / f.a, p.hi / f.a, p.atoms) for p in f.pieces))
    g = Symbolic(1.0, tuple(Piece(p.lo / g.a, p.hi / g.a, p.atoms) for p in g.pieces))
    assert hardy_littlewood_check(f, g)["holds"]


@settings(max_examples=30, deadline=None)
@given(cells, cells)
def test_hardy_lemma_with_rearranged_upper_function(c1, c2):
    _, v1, f = _step(c1)
    f = step_function(np.linspace(0, 1, len(v1) + 1), np.abs(v1))
    g = rearrange(f).base
    h = rearrange(step_function(np.linspace(0, 1, len(c2) + 1), [c[1] for c in c2]))
    r = hardy_lemma_check(f, g, h)
    assert r["premise_holds"] and r["conclusion_holds"]


def test_hardy_lemma_premise_can_fail():
    f = step_function([0.0, 0.5, 1.0], [2.0, 0.0])
    g = step_function([0.0, 0.5, 1.0], [0.0, 2.0])
    r = hardy_lemma_check(f, g, rearrange(atom(1.0, 0.0)))
    assert not r["premise_holds"]


def test_cumulative_of_rearrangement_dominates():
    f = step_function([0.0, 0.3, 0.6, 1.0], [1.0, 3.0, 2.0])
    t = np.array([0.1, 0.3, 0.5, 0.9])
    assert np.all(cumulative(rearrange(f).base, t) >= cumulative(f, t))
