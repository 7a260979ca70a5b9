"""Cascaded sensor-decoder dynamics and the trajectory engines."""
import numpy as np
import pytest

from cmsense import TimeGrid, two_level_model
from cmsense.cascade import (CountingRecord, Imperfections, cascade_generators,
                             fisher_from_trajectories, record_log_likelihood,
                             replay_records, sample_records, sample_trajectory,
                             step_matrices, vacuum_probability)
from cmsense.decoder import stationary_decoder, two_level_decoder
from cmsense.errors import CmsenseError, RecordLengthMismatch
from cmsense.oracle import brute_counting_distribution, counting_fisher_exact


@pytest.fixture(scope="module")
def emitter():
    return two_level_model(omega=1.0, delta=0.0, gamma=1.0)


@pytest.fixture(scope="module")
def clicky_pair(emitter):
    # decoder detuned off the matched point so records carry clicks
    return cascade_generators(emitter, two_level_decoder(1.0, 1.0, 1.0))


def test_cascade_dimensions_and_init(emitter):
    gen = cascade_generators(emitter, two_level_decoder(1.0, 0.0, 1.0))
    assert gen.dim == 4
    h = gen.h_total(0.0, 0.0)
    assert h.shape == (4, 4)
    assert np.abs(h - h.conj().T).max() < 1e-14
    # product initialization |g> (x) |g> when the decoder has no purified state
    assert np.argmax(np.abs(gen.initial_state)) == 3


def test_cascade_jump_is_collective(emitter):
    gen = cascade_generators(emitter, two_level_decoder(1.0, 0.0, 1.0))
    j = gen.j_total(0.0, 0.0)
    sge = np.zeros((2, 2), dtype=complex)
    sge[1, 0] = 1.0
    ref = np.kron(sge, np.eye(2)) + np.kron(np.eye(2), sge)
    assert np.abs(j - ref).max() < 1e-14


def test_direct_sensor_without_decoder(emitter):
    gen = cascade_generators(emitter, None)
    assert gen.dim == 2
    assert np.abs(gen.j_total(0.0, 0.0)[1, 0] - 1.0) < 1e-14


@pytest.mark.parametrize("dt", [4e-3, 2e-3, 1e-3])
def test_vacuum_probability_defect_linear_in_dt(emitter, dt):
    from cmsense.decoder import build_decoder
    grid = TimeGrid(0.0, 20.0, dt)
    dec = build_decoder(emitter, 0.0, grid)
    gen = cascade_generators(emitter, dec)
    p = vacuum_probability(gen, 0.0, grid)
    assert abs(1.0 - p) == pytest.approx(0.184 * dt, rel=0.12)


def test_replay_reproduces_sampled_loglikelihood(clicky_pair):
    grid = TimeGrid(0.0, 10.0, 2e-3)
    idx, ll, kind = sample_records(clicky_pair, 0.0, grid, 32, seed=3)
    ll2 = replay_records(clicky_pair, 0.0, idx, grid, engine_kind=kind)
    assert np.abs(ll - ll2).max() == 0.0


def test_segment_and_step_replay_agree(clicky_pair):
    grid = TimeGrid(0.0, 20.0, 4e-4)  # 50000 bins: segment engine eligible
    idx, _, _ = sample_records(clicky_pair, 0.0, grid, 16, seed=11, engine="step")
    ll_step = replay_records(clicky_pair, 0.0, idx, grid, engine_kind="step")
    ll_seg = replay_records(clicky_pair, 0.0, idx, grid, engine_kind="segment")
    assert np.abs(ll_step - ll_seg).max() < 1e-8


def test_sampling_is_deterministic_per_stream(clicky_pair):
    grid = TimeGrid(0.0, 5.0, 2e-3)
    a = sample_records(clicky_pair, 0.0, grid, 24, seed=9)
    b = sample_records(clicky_pair, 0.0, grid, 24, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a[0], b[0]))
    assert np.array_equal(a[1], b[1])


def test_thread_count_does_not_change_results(clicky_pair):
    grid = TimeGrid(0.0, 5.0, 2e-3)
    a = sample_records(clicky_pair, 0.0, grid, 40, seed=4, threads=1)
    b = sample_records(clicky_pair, 0.0, grid, 40, seed=4, threads=3)
    assert all(np.array_equal(x, y) for x, y in zip(a[0], b[0]))
    assert np.array_equal(a[1], b[1])


def test_record_frequencies_match_exhaustive_distribution(emitter):
    # 8-bin cascade record statistics against the exact branch enumeration
    dec = two_level_decoder(1.0, 1.0, 1.0)
    gen = cascade_generators(emitter, dec)
    n_bins, dt, n_traj = 8, 0.1, 20000
    dist = brute_counting_distribution(emitter, 0.0, n_bins, dt, dec=dec)
    grid = TimeGrid(0.0, n_bins * dt, dt)
    idx, _, _ = sample_records(gen, 0.0, grid, n_traj, seed=21, max_step=1.0)
    counts = np.zeros(2 ** n_bins)
    weight = 2 ** np.arange(n_bins)
    for clicks in idx:
        r = int(np.sum(weight[clicks]))
        counts[r] += 1
    freq = counts / n_traj
    top = np.argsort(dist.probs)[::-1][:6]
    for r in top:
        p = dist.probs[r]
        se = np.sqrt(p * (1 - p) / n_traj)
        assert abs(freq[r] - p) < 4.0 * se + 1e-12


def test_trajectory_fisher_matches_exact_distribution_fisher():
    m = two_level_model(omega=2.0, delta=1.5, gamma=1.0)
    fi_exact = counting_fisher_exact(m, 1.5, 12, 0.05, theta_step=1e-3)
    gen = cascade_generators(m, None)
    grid = TimeGrid(0.0, 0.6, 0.05)
    fi = fisher_from_trajectories(gen, 1.5, grid, 60000, seed=7,
                                  theta_step=1e-3, max_step=1.0)
    assert fi.value == pytest.approx(fi_exact, abs=3.5 * fi.std_error)


def test_record_log_likelihood_matches_replay(clicky_pair):
    grid = TimeGrid(0.0, 4.0, 2e-3)
    rec = sample_trajectory(clicky_pair, 0.0, grid, seed=5)
    assert isinstance(rec, CountingRecord)
    ll = record_log_likelihood(clicky_pair, 0.0, rec, grid)
    assert ll == pytest.approx(rec.log_likelihood, abs=1e-10)


def test_record_length_guard(clicky_pair):
    grid = TimeGrid(0.0, 4.0, 2e-3)
    with pytest.raises(RecordLengthMismatch):
        record_log_likelihood(clicky_pair, 0.0, np.zeros(7, dtype=np.int8), grid)


def test_density_engine_agrees_with_pure_at_unit_efficiency(emitter):
    dec = two_level_decoder(1.0, 1.0, 1.0)
    gen_pure = cascade_generators(emitter, dec)
    gen_dens = cascade_generators(emitter, dec,
                                  imperfections=Imperfections(gamma=0.0, eta=1.0))
    grid = TimeGrid(0.0, 6.0, 2e-3)
    idx, _, _ = sample_records(gen_pure, 0.0, grid, 16, seed=13)
    ll_p = replay_records(gen_pure, 0.0, idx, grid)
    ll_d = replay_records(gen_dens, 0.0, idx, grid)
    assert np.abs(ll_p - ll_d).max() < 1e-9


def test_imperfections_defaults():
    imp = Imperfections(gamma=0.1)
    assert imp.dephasing == pytest.approx(0.1)
    assert Imperfections(gamma=0.1, gamma_dep=0.0).dephasing == 0.0
    with pytest.raises(CmsenseError):
        Imperfections(eta=0.0)
    with pytest.raises(CmsenseError):
        Imperfections(gamma=-0.1)


def test_fisher_estimate_bookkeeping(clicky_pair):
    grid = TimeGrid(0.0, 10.0, 2e-3)
    fi = fisher_from_trajectories(clicky_pair, 0.0, grid, 300, seed=2)
    assert fi.n_traj == 300
    assert fi.value >= 0.0
    assert fi.std_error > 0.0
    assert abs(fi.mean_score) < 5.0 * fi.mean_score_se
    assert fi.mean_clicks > 0.5


def test_matched_stationary_cascade_stays_dark(emitter):
    # matched decoder synthesized from the steady state, purified init:
    # the detector sees (numerically) nothing at the true parameter
    dec = stationary_decoder(emitter, 0.0)
    gen = cascade_generators(emitter, dec)
    grid = TimeGrid(0.0, 8.0, 2e-3)
    idx, _, _ = sample_records(gen, 0.0, grid, 200, seed=1)
    total_clicks = sum(len(i) for i in idx)
    assert total_clicks == 0
