import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.signal import argrelmax

from graphdelay.errors import PreconditionError, RegimeWarning
from graphdelay.graph import GOLDEN_L1, GOLDEN_L2, load_graph
from graphdelay.paths import PathFamily, tjunction_families
from graphdelay.scattering import tjunction_smatrix
from graphdelay.wavepacket import (
    aliasing_limit,
    delay_density_families,
    delay_density_fft,
    delay_density_fourier,
    fourier_delay_distribution,
    gaussian_envelope,
)


def S_golden(k):
    return tjunction_smatrix(GOLDEN_L1, GOLDEN_L2, k)


def test_envelope_normalised():
    env = gaussian_envelope(1000.0, 100.0)
    k = np.linspace(0, 2000, 200_001)
    assert trapezoid(env.squared(k), k) == pytest.approx(1, abs=1e-10)
    assert env(1000.0) == pytest.approx((2 / (np.pi * 100.0**2)) ** 0.25)


def test_envelope_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gaussian_envelope(1000.0, 100.0)
        gaussian_envelope(1000.0, 200.0)
    with pytest.warns(RegimeWarning):
        gaussian_envelope(100.0, 60.0)
    for bad in [(0.0, 1.0), (10.0, 0.0), (10.0, -1.0)]:
        with pytest.raises(PreconditionError):
            gaussian_envelope(*bad)


def test_k_grid_support():
    env = gaussian_envelope(50.0, 10.0)
    k = env.k_grid(0.01)
    assert k[0] == pytest.approx(50 - 80 if 50 - 80 > 0 else 0.01)
    assert k[-1] <= 130 + 1e-9 and k[-1] > 130 - 0.01


def test_mirror_model_gaussian():
    L, sigma = 0.7, 40.0
    env = gaussian_envelope(500.0, sigma)
    s = np.linspace(2 * L - 0.1, 2 * L + 0.1, 81)
    d = delay_density_fourier(s, lambda k: np.exp(2j * k * L), env, 1e-3)
    expected = sigma / np.sqrt(2 * np.pi) * np.exp(-0.5 * sigma**2 * (s - 2 * L) ** 2)
    np.testing.assert_allclose(d.density, expected, atol=1e-9)


def test_fft_matches_direct():
    env = gaussian_envelope(200.0, 20.0)
    fft = delay_density_fft(S_golden, env, 1e-3, 6.0)
    sel = slice(0, None, 37)
    direct = delay_density_fourier(fft.s[sel], S_golden, env, 1e-3)
    np.testing.assert_allclose(direct.density, fft.density[sel], atol=1e-10)


def test_sampled_array_input():
    env = gaussian_envelope(200.0, 20.0)
    k = env.k_grid(1e-3)
    a = delay_density_fft(S_golden(k), env, 1e-3, 2.0)
    b = delay_density_fft(S_golden, env, 1e-3, 2.0)
    np.testing.assert_array_equal(a.density, b.density)
    with pytest.raises(PreconditionError, match="k grid"):
        delay_density_fft(S_golden(k[:-1]), env, 1e-3, 2.0)


def test_aliasing_guard_reports_limit():
    env = gaussian_envelope(200.0, 20.0)
    assert aliasing_limit(1e-3) == pytest.approx(785.398, rel=1e-5)
    with pytest.raises(PreconditionError, match="785.398"):
        delay_density_fft(S_golden, env, 1e-3, 800.0)
    with pytest.raises(PreconditionError):
        delay_density_fourier([900.0], S_golden, env, 1e-3)


def test_total_probability_tends_to_one():
    env = gaussian_envelope(300.0, 30.0)
    d = delay_density_fft(S_golden, env, 2e-3, 300.0)
    tails = [1 - d.cumulative_at(x) for x in (10, 50, 250)]
    assert all(a > b > 0 for a, b in zip(tails, tails[1:]))
    assert tails[-1] < 2e-3
    assert np.all(np.diff(d.cumulative) >= -1e-12)
    assert np.all(d.density >= 0)
    assert d.cumulative[-1] <= 1 + 1e-9


def test_first_peaks_sigma100(tj_delay_sigma100):
    _, d = tj_delay_sigma100
    cell = d.info["ds"]
    peaks = d.s[argrelmax(d.density)[0]]
    peaks = peaks[d.density[argrelmax(d.density)[0]] > 0.05 * d.density.max()]
    assert abs(peaks[0] - 2 * GOLDEN_L1) <= cell
    assert abs(peaks[1] - 2 * GOLDEN_L2) <= cell


def test_cumulative_monotone(tj_delay_sigma100):
    _, d = tj_delay_sigma100
    assert np.all(np.diff(d.cumulative) >= -1e-6)


def test_families_agree_with_fourier(tj_delay_sigma100):
    env, d = tj_delay_sigma100
    fams = tjunction_families(40, GOLDEN_L1, GOLDEN_L2)
    keep = (d.s > 3 / env.sigma) & (d.s <= 5.0)
    fam = delay_density_families(fams, env, d.s[keep], valid_until=2 * 41 * GOLDEN_L1)
    ref = d.density[keep]
    idx = argrelmax(ref)[0]
    idx = idx[ref[idx] > 1e-3 * ref.max()]
    np.testing.assert_allclose(fam.density[idx], ref[idx], rtol=0.02)
    assert np.max(np.abs(fam.density - ref)) < 1e-6


@pytest.mark.slow
def test_grid_convergence():
    env = gaussian_envelope(1000.0, 100.0)
    # peaks, the interference region near 2.4 and the tail
    s = np.array([0.5, 2 * GOLDEN_L1, 1.0, 2 * GOLDEN_L2, 1.6, 2.0, 2.37, 2.43, 2.8, 3.2, 3.6, 4.0])
    a = delay_density_fourier(s, S_golden, env, 1e-4)
    b = delay_density_fourier(s, S_golden, env, 5e-5)
    assert np.max(np.abs(a.density - b.density)) < 1e-6


def test_isolated_family_peak():
    env = gaussian_envelope(1000.0, 100.0)
    fam = PathFamily((1,), 0.6, 0.36, 1, 1.5)
    d = delay_density_families([fam], env, [1.5, 1.6], tail_tolerance=1.0)
    assert d.density[0] == pytest.approx(0.36 * 100 / np.sqrt(2 * np.pi), rel=1e-12)


def test_family_peaks_integrate_to_pq():
    env = gaussian_envelope(1000.0, 400.0)
    fams = [PathFamily((1, 0), 0.6, 0.36, 1, 1.0), PathFamily((0, 1), -0.5j, 0.25, 1, 1.4)]
    s = np.linspace(0.5, 2.0, 30001)
    d = delay_density_families(fams, env, s, tail_tolerance=1.0)
    first = s < 1.2
    assert trapezoid(d.density[first], s[first]) == pytest.approx(0.36, rel=1e-9)
    assert trapezoid(d.density[~first], s[~first]) == pytest.approx(0.25, rel=1e-6)


def test_family_guards():
    env = gaussian_envelope(1000.0, 100.0)
    fams = tjunction_families(3, GOLDEN_L1, GOLDEN_L2)
    with pytest.raises(PreconditionError, match="miss"):
        delay_density_families(fams, env, [1.0])
    with pytest.raises(PreconditionError, match="complete"):
        delay_density_families(fams, env, [3.5], tail_tolerance=1.0, valid_until=3.2)
    with pytest.raises(PreconditionError):
        delay_density_families([], env, [1.0])


def test_wrapper_general_graph():
    g = load_graph("triangle_lead")
    d = fourier_delay_distribution(g, 200.0, 20.0, delta_k=1e-3, s_max=4.0)
    assert d.source == "fourier"
    assert np.all(d.density >= 0)
