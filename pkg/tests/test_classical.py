import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph
from graphdelay.classical import (
    adjugate,
    classical_asymptote,
    classical_cumulative_exact,
    classical_delay_mc,
    classical_jumps,
    decay_constant,
    decay_law,
    decay_prefactor,
    ks_critical_value,
    ks_statistic,
    laplace_determinant,
    laplace_map,
    tjunction_classical_cumulative,
    tjunction_decay_law,
    tjunction_laplace_determinant,
    tjunction_laplace_determinant_derivative,
)
from graphdelay.errors import PreconditionError
from graphdelay.evolution import classical_map
from graphdelay.graph import GOLDEN_L1, GOLDEN_L2, load_graph, tjunction_graph
from graphdelay.paths import enumerate_families

TJ = load_graph("tjunction")
EQ = load_graph("tjunction_equal")


@pytest.fixture(scope="module")
def mc_million():
    return classical_delay_mc(TJ, 0, 10**6, seed=7)


def test_exact_matches_closed_form():
    jumps = classical_jumps(TJ, s_max=12.0)
    for s in np.linspace(0, 12, 97):
        assert jumps.exact_at(s) == tjunction_classical_cumulative(GOLDEN_L1, GOLDEN_L2, s)


def test_exact_equal_lengths():
    jumps = classical_jumps(EQ, s_max=20.0)
    for s in np.linspace(0, 20, 161):
        assert jumps.exact_at(s) == 1 - Fraction(1, 2 ** math.floor(s))
    assert jumps.exact_at(1.0) == Fraction(1, 2)  # Theta(0) = 1


def test_exact_zero_before_first_return():
    d = classical_cumulative_exact(TJ, s_max=3.0)
    assert np.all(d.cumulative[d.s < 2 * GOLDEN_L1] == 0)
    assert np.all(np.diff(d.cumulative) >= 0)
    assert d.source == "classical"
    with pytest.raises(PreconditionError):
        d.info["jumps"](3.5)


def test_exact_equals_diagonal_weights():
    jumps = classical_jumps(TJ, s_max=100.0)
    fams = enumerate_families(TJ, n_max=23)  # t <= 12 excursions
    s_max = 2 * 12 * GOLDEN_L1  # every family with l <= s_max has t <= 12
    for s in np.linspace(0.5, s_max, 40):
        diag = sum((f.diagonal for f in fams if f.length <= s), Fraction(0))
        assert jumps.exact_at(s) == diag


def test_total_exit_probability():
    g = load_graph("triangle_lead")
    jumps = classical_jumps(g, s_max=60.0)
    assert 1 - jumps(60.0) < 1e-6
    assert jumps(60.0) <= 1 + 1e-12


def test_mc_agrees_at_s3(mc_million):
    exact = float(classical_jumps(TJ, s_max=3.0).exact_at(3.0))
    emp = mc_million.empirical_cdf(3.0)
    se = math.sqrt(exact * (1 - exact) / 10**6)
    assert abs(emp - exact) < 3 * se


def test_mc_mean_excursions(mc_million):
    t = mc_million.traversals / 2
    # excursion count is geometric with p = 1/2: mean 2, variance 2
    assert abs(t.mean() - 2) < 3 * math.sqrt(2 / t.size)
    assert mc_million.overflow == 0
    assert np.all(mc_million.channels == 0)


def test_mc_deterministic():
    a = classical_delay_mc(TJ, 0, 200_000, seed=11, workers=1)
    b = classical_delay_mc(TJ, 0, 200_000, seed=11, workers=4)
    np.testing.assert_array_equal(a.delays, b.delays)
    c = classical_delay_mc(TJ, 0, 200_000, seed=12)
    assert not np.array_equal(a.delays, c.delays)


def test_mc_ks_1e5():
    res = classical_delay_mc(TJ, 0, 10**5, seed=3)
    jumps = classical_jumps(TJ, s_max=40.0)
    assert ks_statistic(res, jumps) < ks_critical_value(10**5, 0.01)


def test_mc_multichannel_and_overflow():
    g = random_graph(np.random.default_rng(4), n_leads=2)
    res = classical_delay_mc(g, 1, 50_000, seed=1)
    frac = np.bincount(res.channels[res.channels >= 0], minlength=2) / res.channels.size
    assert frac.sum() == pytest.approx(1)
    capped = classical_delay_mc(TJ, 0, 1000, seed=1, step_cap=2)
    assert capped.overflow > 0 and np.all(capped.channels[capped.traversals > 2] == -1)


def test_ks_detects_wrong_distribution():
    res = classical_delay_mc(EQ, 0, 10**5, seed=3)
    jumps = classical_jumps(TJ, s_max=40.0)
    assert ks_statistic(res, jumps) > ks_critical_value(10**5, 0.01)


def test_laplace_map():
    np.testing.assert_array_equal(laplace_map(TJ, 0.0).matrix, classical_map(TJ).matrix)
    for z in (-0.7, 0.0, 0.4, 2.0):
        assert laplace_determinant(TJ, z) == pytest.approx(
            tjunction_laplace_determinant(GOLDEN_L1, GOLDEN_L2, z), abs=1e-14
        )
        h = 1e-6
        num = (laplace_determinant(TJ, z + h) - laplace_determinant(TJ, z - h)) / (2 * h)
        assert num == pytest.approx(tjunction_laplace_determinant_derivative(GOLDEN_L1, GOLDEN_L2, z), rel=1e-7)
    assert np.all(laplace_map(TJ, 1.3).matrix >= 0)


def test_decay_constant_values():
    assert decay_constant(EQ) == pytest.approx(math.log(2), abs=1e-12)
    xi = decay_constant(TJ)
    assert abs(xi - 0.6846) <= 5e-4
    assert laplace_determinant(TJ, -xi) == pytest.approx(0, abs=1e-12)
    assert tjunction_decay_law(GOLDEN_L1, GOLDEN_L2).xi == pytest.approx(xi, abs=1e-13)


def test_decay_constant_errors():
    with pytest.raises(PreconditionError, match="closed"):
        decay_constant(load_graph("tjunction_closed"))


@pytest.mark.parametrize("dL", [0.05, 0.025])
def test_perturbation_expansion(dL):
    g = tjunction_graph((1 - dL) / 2, (1 + dL) / 2)  # dL = L2 - L1, L1 + L2 = 1
    law = decay_law(g)
    ln2 = math.log(2)
    assert abs(law.xi - ln2 * (1 - ln2 / 2 * dL**2)) <= dL**4
    assert abs(law.prefactor - (1 - ln2 * dL**2)) <= dL**4


def test_prefactor_values():
    assert decay_prefactor(EQ) == pytest.approx(1, abs=1e-12)
    law = decay_law(TJ)
    ref = tjunction_decay_law(GOLDEN_L1, GOLDEN_L2)
    assert law.prefactor == pytest.approx(ref.prefactor, rel=1e-10)
    x = law.xi
    assert ref.prefactor == pytest.approx(2 / (GOLDEN_L1 * math.exp(2 * x * GOLDEN_L1) + GOLDEN_L2 * math.exp(2 * x * GOLDEN_L2)))


def test_adjugate_block_and_identity():
    xi = decay_constant(TJ)
    for z in (0.3, -0.2, -xi):
        x1, x2 = np.exp(-z * GOLDEN_L1), np.exp(-z * GOLDEN_L2)
        adj = adjugate(np.eye(4) - laplace_map(TJ, z).matrix)
        block = np.array([[4 * x1 - x1 * x2**2, x1**2 * x2], [x1 * x2**2, 4 * x2 - x1**2 * x2]]) / 4
        np.testing.assert_allclose(adj[2:, :2], block, atol=1e-12)
        t_out = np.abs(TJ.lead_out[0]) ** 2
        t_in = np.abs(TJ.lead_in[:, 0]) ** 2 * np.exp(-z * TJ.bond_lengths)
        assert t_out @ adj @ t_in == pytest.approx(1 - laplace_determinant(TJ, z), abs=1e-12)
    assert t_out @ adj @ t_in == pytest.approx(1, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_adjugate_property(seed):
    a = np.random.default_rng(seed).normal(size=(5, 5))
    np.testing.assert_allclose(adjugate(a) @ a, np.linalg.det(a) * np.eye(5), atol=1e-9)


def test_adjugate_singular():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    np.testing.assert_allclose(adjugate(a), [[4, -2], [-2, 1]], atol=1e-12)


def test_equal_lengths_asymptote_rate():
    law = decay_law(EQ)
    s = np.linspace(5, 25, 81)
    exact = 1 - classical_jumps(EQ, s_max=25.0)(s)
    asym = 1 - classical_asymptote(law, s)
    ratio = exact / asym
    # 2^{-floor(s)} / (2^{-s} / ln 2) = ln 2 * 2^{s - floor(s)}
    np.testing.assert_allclose(ratio, math.log(2) * 2 ** (s - np.floor(s)), rtol=1e-9)


def test_ks_critical_value():
    assert ks_critical_value(10**6) == pytest.approx(1.6276 / 1000, rel=1e-3)
