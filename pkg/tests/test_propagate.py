import numpy as np
import pytest

from cmsense import TimeGrid, two_level_model, three_level_model
from cmsense.errors import StepTooLarge, TraceDrift
from cmsense.propagate import (evolve_density, evolve_generalized, kraus_pair,
                               pair_table)


def test_time_grid_counts_steps():
    g = TimeGrid(0.0, 20.0, 2e-3)
    assert g.n_steps == 10000
    assert len(g.times) == 10001
    assert g.times[-1] == pytest.approx(20.0)
    assert len(g.left_times) == 10000
    assert g.left_times[-1] == pytest.approx(20.0 - 2e-3)


def test_time_grid_rejects_ragged_span():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 3e-4)


def test_kraus_pair_structure():
    m = two_level_model(omega=1.0, delta=0.0, gamma=1.0)
    dt = 1e-3
    p = kraus_pair(m, 0.0, 0.0, dt)
    h = m.hamiltonian(0.0, 0.0)
    j = m.jump(0.0, 0.0)
    a0_ref = np.eye(2) - 1j * dt * h - 0.5 * dt * (j.conj().T @ j)
    assert np.abs(p.a0 - a0_ref).max() < 1e-15
    assert np.abs(p.a1 - np.sqrt(dt) * j).max() < 1e-15


@pytest.mark.parametrize("dt", [2e-3, 1e-3, 5e-4])
def test_completeness_defect_quadratic_in_dt(dt):
    m = two_level_model(omega=1.0, delta=0.3, gamma=1.0)
    p = kraus_pair(m, 0.0, 0.3, dt)
    # defect = |A0^dag A0 + A1^dag A1 - 1| = O(dt^2)
    assert p.completeness_defect < 2.0 * dt**2
    assert p.completeness_defect > 0.1 * dt**2


def test_step_guard_triggers():
    m = two_level_model(omega=60.0, delta=0.0, gamma=1.0)
    with pytest.raises(StepTooLarge):
        kraus_pair(m, 0.0, 0.0, 2e-3)


def test_pair_table_batch_matches_loop():
    m = three_level_model(0.0, 5.0, 1.0, T_plateau=4.0)
    grid = TimeGrid(0.0, 5.0, 1e-3)
    tab = pair_table(m, 0.2, grid)
    for k in (0, 1234, 4999):
        t = grid.left_times[k]
        ref = kraus_pair(m, t, 0.2, grid.dt)
        a0, a1 = tab.at(k)
        assert np.abs(a0 - ref.a0).max() < 1e-14
        assert np.abs(a1 - ref.a1).max() < 1e-14


def test_static_pair_table_shares_one_pair():
    m = two_level_model(omega=1.0, delta=0.0, gamma=1.0)
    grid = TimeGrid(0.0, 1.0, 1e-3)
    tab = pair_table(m, 0.0, grid)
    a0a, _ = tab.at(0)
    a0b, _ = tab.at(999)
    assert np.shares_memory(a0a, a0b)


def test_evolve_density_trace_drift_linear_in_dt():
    m = two_level_model(omega=1.0, delta=0.0, gamma=1.0)
    drifts = []
    for dt in (2e-3, 1e-3):
        rhos = evolve_density(m, 0.0, TimeGrid(0.0, 10.0, dt))
        drifts.append(abs(np.trace(rhos[-1]).real - 1.0))
    ratio = drifts[0] / drifts[1]
    assert 1.7 < ratio < 2.3


def test_evolve_density_raises_on_coarse_grid():
    m = two_level_model(omega=1.0, delta=0.0, gamma=1.0)
    with pytest.raises(TraceDrift):
        evolve_density(m, 0.0, TimeGrid(0.0, 20.0, 0.5), max_step=1.0,
                       trace_tol=1e-3)


def test_generalized_at_equal_parameters_is_density():
    m = two_level_model(omega=1.0, delta=0.3, gamma=1.0)
    grid = TimeGrid(0.0, 5.0, 1e-3)
    mu = evolve_generalized(m, 0.3, 0.3, grid)
    rho = evolve_density(m, 0.3, grid)[-1]
    assert np.abs(mu.mu - rho).max() < 1e-13


def test_generalized_conjugate_symmetry():
    # mu_{a,b} = mu_{b,a}^dag holds for every product of Kraus sandwiches
    m = two_level_model(omega=1.0, delta=0.0, gamma=1.0)
    grid = TimeGrid(0.0, 3.0, 1e-3)
    mab = evolve_generalized(m, 0.1, 0.25, grid).mu
    mba = evolve_generalized(m, 0.25, 0.1, grid).mu
    assert np.abs(mab - mba.conj().T).max() < 1e-13
