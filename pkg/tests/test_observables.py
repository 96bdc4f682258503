import json
import math

import numpy as np
import pytest
from scipy.stats import norm

from quasirect.fock import analytic_to_fock, fock_husimi, fock_position_wavefunction
from quasirect.gaussian import SqueezedComponent, SuperpositionState
from quasirect.observables import (
    FlatnessReport,
    GridResult,
    PhaseSpaceGrid,
    PositionGrid,
    auto_phase_grid,
    auto_position_grid,
    flatness_report,
    husimi_q,
    position_density,
    read_csv,
    to_csv,
    to_json,
)
from quasirect.protocol import build_superposition, dyadic_schedule

TEST_STATES = [
    (2, 0.5, 0.0),
    (3, 0.3, 0.5),
    (1, 1.0, 1.0),
    (4, 0.1, 0.8),
]


def vacuum_state(r=0.0):
    return SuperpositionState([SqueezedComponent(0.0, 1.0)], r)


def test_grid_validation():
    with pytest.raises(ValueError):
        PositionGrid(1, 1)
    with pytest.raises(ValueError):
        PositionGrid(0, 1, 1)
    with pytest.raises(ValueError):
        PhaseSpaceGrid(0, 1, 2, 2)


def test_vacuum_density():
    res = position_density(vacuum_state(), PositionGrid(-6, 6, 1201))
    x = res.grid.x
    np.testing.assert_allclose(res.values, np.exp(-x * x) / math.sqrt(math.pi), rtol=1e-14, atol=1e-300)
    assert abs(res.integral_estimate - 1) < 1e-8
    assert res.covers_support


def test_undersized_grid_is_flagged():
    res = position_density(vacuum_state(), PositionGrid(0, 6, 601))
    assert not res.covers_support


def test_vacuum_husimi():
    res = husimi_q(vacuum_state(), PhaseSpaceGrid(-5, 5, -5, 5, 201))
    b = res.grid.beta()
    np.testing.assert_allclose(res.values, np.exp(-np.abs(b) ** 2) / math.pi, rtol=1e-13, atol=1e-300)
    assert res.values.max() == pytest.approx(1 / math.pi, rel=1e-14)


def test_squeezed_husimi_integral_and_fock_points():
    s = vacuum_state(1.0)
    res = husimi_q(s)
    assert abs(res.integral_estimate - 1) < 1e-6
    vec = analytic_to_fock(s, 256)
    rng = np.random.default_rng(11)
    beta = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-4, 4, 20)
    np.testing.assert_allclose(np.abs(s.coherent_projection(beta)) ** 2 / np.pi, fock_husimi(vec, beta), atol=1e-7)


@pytest.mark.parametrize("P,tau,r", TEST_STATES)
def test_density_and_q_match_fock_oracle(P, tau, r):
    s = build_superposition(dyadic_schedule(P, tau), r)
    vec = analytic_to_fock(s, 256)
    rng = np.random.default_rng(P)
    half = auto_position_grid(s).x_max
    x = rng.uniform(-half, half, 25)
    dens = np.abs(s.position_wavefunction(x)) ** 2
    np.testing.assert_allclose(dens, np.abs(fock_position_wavefunction(vec, x)) ** 2, atol=1e-7)
    g = auto_phase_grid(s)
    beta = rng.uniform(g.re_min, g.re_max, 25) + 1j * rng.uniform(g.im_min, g.im_max, 25)
    q = np.abs(s.coherent_projection(beta)) ** 2 / np.pi
    np.testing.assert_allclose(q, fock_husimi(vec, beta), atol=1e-7)


@pytest.mark.parametrize("P,tau,r", TEST_STATES + [(4, 4 * math.exp(-3), 3), (4, math.exp(-3) / 2, 3)])
def test_normalisation_on_auto_grids(P, tau, r):
    s = build_superposition(dyadic_schedule(P, tau), r)
    d = position_density(s)
    q = husimi_q(s)
    assert np.all(d.values >= 0) and np.all(q.values >= 0)
    assert abs(d.integral_estimate - 1) < 1e-6
    assert abs(q.integral_estimate - 1) < 1e-5


@pytest.mark.parametrize("P,tau,r", TEST_STATES)
def test_parity_symmetry(P, tau, r):
    s = build_superposition(dyadic_schedule(P, tau), r)
    d = position_density(s)
    np.testing.assert_allclose(d.values, d.values[::-1], rtol=1e-12, atol=1e-300)


def test_flatness_of_rectangle_is_zero():
    grid = PositionGrid(-2, 2, 4001)
    vals = np.where(np.abs(grid.x) <= 1, 0.5, 0.0)
    rep = flatness_report(GridResult("density", grid, vals), 0.8)
    assert rep.ripple == 0.0
    # step edges are resolved only to the grid spacing
    assert rep.plateau_window == pytest.approx((-0.8, 0.8), abs=1e-3)
    assert rep.plateau_mass == pytest.approx(0.8, abs=1e-12)


def test_flatness_of_gaussian_matches_normal_quantiles():
    # vacuum density is normal with sigma = 1/sqrt(2)
    res = position_density(vacuum_state(), PositionGrid(-8, 8, 16001))
    sigma = 1 / math.sqrt(2)
    h = norm.ppf(0.9) * sigma
    mean = 0.8 / (2 * h)
    expected = (norm.pdf(0, scale=sigma) - norm.pdf(h, scale=sigma)) / mean
    rep = flatness_report(res, 0.8)
    assert rep.plateau_window[1] == pytest.approx(h, abs=1e-6)
    assert rep.ripple == pytest.approx(expected, rel=1e-6)
    assert isinstance(rep, FlatnessReport)


def test_flatness_errors():
    grid = PositionGrid(-1, 1, 11)
    with pytest.raises(ValueError, match="degenerate density"):
        flatness_report(GridResult("density", grid, np.zeros(11)))
    with pytest.raises(ValueError):
        flatness_report(position_density(vacuum_state()), 1.2)


def test_flat_vs_oscillatory_contrast():
    r = 3
    flat = build_superposition(dyadic_schedule(4, math.exp(-r) / 2), r)
    osc = build_superposition(dyadic_schedule(4, 4 * math.exp(-r)), r)
    rf = flatness_report(position_density(flat)).ripple
    ro = flatness_report(position_density(osc)).ripple
    assert rf < ro
    assert rf < 0.1


def test_window_is_centred_on_mass_not_grid():
    s = SuperpositionState([SqueezedComponent(1.0, 1.0)], 0.0)
    rep = flatness_report(position_density(s, PositionGrid(-3, 9, 4001)))
    centre = 0.5 * sum(rep.plateau_window)
    assert centre == pytest.approx(math.sqrt(2), abs=1e-6)


def test_csv_roundtrip_and_determinism():
    s = build_superposition(dyadic_schedule(2, 0.5), 0.3)
    res = position_density(s, PositionGrid(-4, 4, 101))
    res.params = {"r": 0.3, "tau": 0.5, "pulses": 2}
    text = to_csv(res)
    header, rows = read_csv(text)
    assert header["r"] == "0.29999999999999999"
    assert int(header["points"]) == 101
    np.testing.assert_array_equal(rows[:, 0], res.grid.x)
    np.testing.assert_array_equal(rows[:, 1], res.values)
    res2 = position_density(s, PositionGrid(-4, 4, 101))
    res2.params = dict(res.params)
    assert to_csv(res2) == text


def test_husimi_csv_layout():
    res = husimi_q(vacuum_state(), PhaseSpaceGrid(-1, 1, -2, 2, 5))
    header, rows = read_csv(to_csv(res))
    assert rows.shape == (25, 3)
    assert set(rows[:, 1]) == set(res.grid.im)
    np.testing.assert_array_equal(rows[:, 2].reshape(5, 5), res.values)


def test_json_payload():
    s = build_superposition(dyadic_schedule(2, 0.5), 0.3)
    res = position_density(s, PositionGrid(-4, 4, 51))
    rep = flatness_report(res)
    payload = json.loads(to_json(res, rep))
    assert payload["density"] == res.values.tolist()
    assert payload["flatness"]["ripple"] == rep.ripple
    assert "ripple" in payload["flatness"]["metric"]
    assert to_json(res, rep) == to_json(res, rep)
