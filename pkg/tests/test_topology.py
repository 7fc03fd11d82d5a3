import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import cd_time_average
from topomagnon.errors import GapClosureError, InputError
from topomagnon.topology import (analytic_cd, band_energy, bloch_vector, winding_density,
                                 winding_from_cd_average, winding_number)

couplings = st.floats(min_value=0.05, max_value=20)


@pytest.mark.parametrize("k, expected", [(0.0, (6, 0)), (np.pi, (-4, 0)), (np.pi / 2, (1, 5))])
def test_bloch_vector_components(k, expected):
    d = bloch_vector(1, 5, k)
    assert (d.d_x, d.d_y) == pytest.approx(expected, abs=1e-12)


def test_bloch_vector_at_gap_closure():
    with pytest.raises(GapClosureError):
        bloch_vector(2, 2, np.pi)


def test_winding_density_matches_finite_difference_of_angle():
    k = np.linspace(-3, 3, 41)
    h = 1e-6
    theta = lambda kk: np.arctan2(5 * np.sin(kk), 1 + 5 * np.cos(kk))
    fd = (np.unwrap(theta(k + h)) - np.unwrap(theta(k - h))) / (2 * h)
    np.testing.assert_allclose(winding_density(1, 5, k), fd, atol=1e-6)


@pytest.mark.parametrize("j1, j2, nu", [(5, 1, 0), (1, 5, 1), (1, 1.001, 1)])
def test_winding_number_values(j1, j2, nu):
    wr = winding_number(j1, j2)
    assert wr.nu == nu
    assert wr.residual < 1e-6


def test_winding_refuses_gap_closure():
    with pytest.raises(GapClosureError):
        winding_number(3, 3)
    with pytest.raises(GapClosureError):
        analytic_cd(3, 3, 0.5)


@given(couplings, couplings, st.floats(0.01, 100))
def test_winding_scale_invariance_and_duality(j1, j2, c):
    if abs(j1 - j2) < 1e-2 * max(j1, j2):
        return
    assert winding_number(c * j1, c * j2).nu == winding_number(j1, j2).nu
    assert winding_number(j1, j2).nu + winding_number(j2, j1).nu == 1


def test_default_grid_is_converged():
    wr = winding_number(1, 5, n_points=4096)
    ref = np.mean(winding_density(1, 5, -np.pi + 2 * np.pi * np.arange(8192) / 8192))
    assert abs(wr.raw_integral - ref) < 1e-8


def test_band_energy_is_bloch_norm():
    for k in (0.3, 1.7, -2.9):
        assert band_energy(2, 3, k) == pytest.approx(bloch_vector(2, 3, k).norm)


@pytest.mark.parametrize("j1, j2", [(1, 5), (5, 1), (2, 3)])
def test_analytic_cd_vanishes_at_t0(j1, j2):
    assert analytic_cd(j1, j2, 0.0) == pytest.approx(0.0, abs=1e-12)


@given(couplings, couplings, st.floats(0, 5))
def test_analytic_cd_bounded(j1, j2, t):
    if abs(j1 - j2) < 1e-2 * max(j1, j2):
        return
    nu = winding_number(j1, j2).nu
    assert abs(analytic_cd(j1, j2, t)) <= nu / 2 + 0.5 + 1e-12


def test_analytic_cd_vectorized_matches_scalar():
    t = np.array([0.0, 0.13, 0.7])
    vec = analytic_cd(1, 5, t)
    np.testing.assert_allclose(vec, [analytic_cd(1, 5, float(x)) for x in t], rtol=1e-12)


@pytest.mark.parametrize("j1, j2, nu", [(1, 5, 1), (5, 1, 0)])
def test_cd_time_average_against_time_quadrature(j1, j2, nu):
    # closed-form time integral vs. Simpson quadrature of analytic_cd
    closed = winding_from_cd_average(j1, j2, 20.0)
    quad = cd_time_average(analytic_cd, j1, j2, 20.0)
    assert closed == pytest.approx(quad, abs=1e-6)
    assert abs(closed - nu) < 0.02


def test_trivial_cd_average_small_for_any_window():
    for t in (0.3, 1.0, 7.0, 40.0):
        assert abs(winding_from_cd_average(5, 1, t)) < 0.02


def test_cd_average_improves_with_window():
    for t in (5.0, 10.0, 20.0, 40.0):
        assert abs(winding_from_cd_average(1, 5, 2 * t) - 1) <= abs(winding_from_cd_average(1, 5, t) - 1) + 0.01


def test_cd_average_rejects_nonpositive_window():
    with pytest.raises(InputError):
        winding_from_cd_average(1, 5, 0.0)


def test_winding_number_is_fast():
    winding_number(1, 5)
    t0 = time.perf_counter()
    winding_number(1, 5)
    winding_number(5, 1)
    assert (time.perf_counter() - t0) / 2 < 0.01
