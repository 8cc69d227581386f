import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vrrw import (
    ModelParameters,
    NumericError,
    ValidationError,
    WalkState,
    checkpoint_schedule,
    init_walk,
    simulate,
    step,
    step_distribution,
    step_loop_model,
    transition_kernel,
)
from vrrw.walk import FULL_LOG_LIMIT, _batch_walk

P25 = ModelParameters.for_complete_graph(3, 2.5)


def test_init_walk_counts_the_starting_visit():
    s = init_walk(P25, 1)
    assert s.site == 1 and s.step == 0
    np.testing.assert_array_equal(s.counts, [0, 1, 0])
    with pytest.raises(ValidationError):
        init_walk(P25, 3)


def test_walk_state_checks_mass_balance():
    with pytest.raises(ValidationError):
        WalkState(site=0, counts=np.array([1, 1, 0]), step=3)
    with pytest.raises(ValidationError):
        WalkState(site=2, counts=np.array([2, 2, 0]), step=3)  # unvisited current site


def test_step_law_oracle():
    s = WalkState(site=0, counts=np.array([1, 1, 0]), step=1)
    law = step_distribution(ModelParameters.for_complete_graph(3, 2.0), s)
    np.testing.assert_allclose(law, [0.0, 0.8, 0.2], rtol=0, atol=1e-16)


def test_loop_law_oracle():
    p = ModelParameters.for_complete_graph(3, 2.0, loop_c=0.5)
    s = WalkState(site=0, counts=np.array([2, 1, 1]), step=3)
    law = step_distribution(p, s)
    np.testing.assert_allclose(law, [0.36, 0.32, 0.32], rtol=0, atol=1e-16)


@given(
    st.integers(min_value=2, max_value=6),
    st.floats(min_value=1.05, max_value=3.5),
    st.integers(min_value=0, max_value=2**31 - 1),
    st.integers(min_value=1, max_value=40),
)
def test_step_law_equals_frozen_kernel_row(n, alpha, seed, nsteps):
    p = ModelParameters.for_complete_graph(n, alpha)
    g = np.random.default_rng(seed)
    s = init_walk(p, int(seed) % n)
    for _ in range(nsteps):
        s = step(p, s, g)
    law = step_distribution(p, s)
    eps = 1.0 / (s.step + 1)
    row = transition_kernel(p, eps, s.counts / (s.step + 1)).entries[s.site]
    assert np.max(np.abs(law - row)) <= 1e-15


@given(
    st.integers(min_value=2, max_value=6),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_counts_are_conserved_and_positive(n, seed):
    p = ModelParameters.for_complete_graph(n, 1.8)
    g = np.random.default_rng(seed)
    s = init_walk(p, 0)
    for _ in range(25):
        s = step(p, s, g)
        assert s.counts.sum() == s.step + 1
        assert s.counts[s.site] >= 1
        assert np.all(s.counts >= 0)


def test_two_sites_force_alternation():
    r = simulate(ModelParameters.for_complete_graph(2, 1.5), 0, 11, 3)
    np.testing.assert_array_equal(r.sites, [0, 1] * 6)
    np.testing.assert_array_equal(r.final_counts, [6, 6])


def test_no_self_transitions_without_loops():
    r = simulate(P25, 0, 2000, 17)
    assert np.all(np.diff(r.sites) != 0)


def test_simulate_is_deterministic_and_matches_stepping():
    r1 = simulate(P25, 0, 500, 99)
    r2 = simulate(P25, 0, 500, 99)
    np.testing.assert_array_equal(r1.sites, r2.sites)
    np.testing.assert_array_equal(r1.final_counts, r2.final_counts)
    g = np.random.default_rng(99)
    s = init_walk(P25, 0)
    for k in range(1, 101):
        s = step(P25, s, g)
        assert s.site == r1.sites[k]


def test_batch_engine_matches_single_runs():
    seeds = [5, 6, 7]
    finals, checks, sites = _batch_walk(
        P25, [0, 1, 2], 300, seeds, True, checkpoint_schedule(300)
    )
    for i, seed in enumerate(seeds):
        solo = simulate(P25, i, 300, seed)
        np.testing.assert_array_equal(sites[i], solo.sites)
        np.testing.assert_array_equal(finals[i], solo.final_counts)


def test_loop_model_reduces_to_plain_step():
    p = ModelParameters.for_complete_graph(3, 2.0)
    g1, g2 = np.random.default_rng(5), np.random.default_rng(5)
    a, b = init_walk(p, 0), init_walk(p, 0)
    for _ in range(60):
        a = step(p, a, g1)
        b = step_loop_model(p, b, g2)
        assert a.site == b.site


def test_loop_model_first_move_weights_count_the_standing_visit():
    # the start is a counted visit, so at c=1 the current site already
    # carries weight (1+1)^alpha against 1 for each fresh neighbor
    p = ModelParameters.for_complete_graph(3, 2.0, loop_c=1.0)
    s = init_walk(p, 0)
    law = step_distribution(p, s)
    np.testing.assert_allclose(law, [2 / 3, 1 / 6, 1 / 6], rtol=0, atol=1e-15)
    g = np.random.default_rng(0)
    hits = np.zeros(3)
    for _ in range(3000):
        hits[step_loop_model(p, s, g).site] += 1
    np.testing.assert_allclose(hits / 3000, law, rtol=0, atol=0.03)


def test_checkpoint_schedule_shape():
    sched = checkpoint_schedule(1000, extra=(500,))
    assert sched[0] >= 1 and sched[-1] == 1000
    assert 500 in sched
    assert np.all(np.diff(sched) > 0)
    with pytest.raises(ValidationError):
        checkpoint_schedule(0)


def test_trajectory_record_accessors():
    r = simulate(P25, 0, 100, 1, checkpoints=checkpoint_schedule(100))
    occ = r.final_occupation
    assert abs(np.sum(occ) - 1) < 1e-12
    table = r.checkpoint_occupations()
    assert table.shape == (len(r.checkpoint_steps), 3)
    np.testing.assert_allclose(table.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    mid = int(r.checkpoint_steps[len(r.checkpoint_steps) // 2])
    np.testing.assert_array_equal(
        r.counts_at(mid), np.bincount(r.sites[: mid + 1], minlength=3)
    )


def test_site_log_suppressed_beyond_limit():
    assert FULL_LOG_LIMIT == 10**6  # guards memory for long runs
    r = simulate(P25, 0, 50, 2, record_sites=False)
    assert r.sites is None
    assert r.final_counts.sum() == 51


def test_weight_overflow_is_rejected_up_front():
    p = ModelParameters.for_complete_graph(3, 400.0)
    with pytest.raises(NumericError):
        simulate(p, 0, 10**4, 0)
