import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smallworld import mh_engine as mh
from smallworld import proposals as pp
from smallworld import targets as tg
from smallworld import tempering as tp
from smallworld.errors import UsageError
from smallworld.grid import circle_grid

CIRCLE = tg.two_mode_circle_target(5.0, 1.0)
INF = math.inf


def ladder(temps=(1.0, INF), a=None, target=CIRCLE):
    return tp.TemperLadder(target, temps, a)


# -- ladder ------------------------------------------------------------------------------


def test_ladder_defaults_to_uniform_prior():
    lad = ladder((1.0, 2.0, INF))
    assert lad.pseudo_prior_a == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    assert lad.inverse_temps.tolist() == [1.0, 0.5, 0.0]


@pytest.mark.parametrize(
    "temps,a",
    [((2.0, 3.0), None), ((1.0, 1.0), None), ((1.0, 3.0, 2.0), None), ((1.0, 2.0), (0.7, 0.7)), ((1.0, 2.0), (1.0, 0.0))],
)
def test_invalid_ladders_rejected(temps, a):
    with pytest.raises(UsageError):
        ladder(temps, a)


def test_infinite_temperature_needs_compact_support():
    piece = tg.exponential_piece([0.0], 1.0, tg.Interval(-3, 3))
    assert ladder((1.0, INF), target=tg.mixture_target([piece])).m == 2


def test_infinite_temperature_is_flat_on_support_and_zero_off_it():
    flat = tg.mixture_target([tg.exponential_piece([0.0], 1.0, tg.Interval(-3, 3))])
    lad = ladder((1.0, INF), target=flat)
    assert lad.log_h(1, np.array([[0.5], [2.9], [5.0]])).tolist() == [0.0, 0.0, -INF]


@given(st.floats(-10, 10), st.sampled_from([1.0, 2.0, 7.5]))
def test_powered_density(x, t):
    lad = ladder((1.0, t + 1.0)) if t != 1.0 else ladder((1.0, 3.0))
    pts = np.array([[x]])
    temps = lad.temps
    assert lad.log_h(1, pts)[0] == pytest.approx(CIRCLE.log_density(pts)[0] / temps[1], abs=1e-12)
    assert lad.log_h(0, pts)[0] == CIRCLE.log_density(pts)[0]


# -- level moves ------------------------------------------------------------------


def test_reflecting_boundaries():
    u = np.linspace(0, 0.999, 50)
    assert np.all(tp.propose_level(0, 4, u) == 1)
    assert np.all(tp.propose_level(3, 4, u) == 2)
    mid = tp.propose_level(np.full(50, 2), 4, u)
    assert set(mid.tolist()) == {1, 3}


def test_level_proposal_probabilities():
    lad = ladder((1.0, 2.0, 4.0, INF))
    assert lad.log_q(0, 1) == 0.0 and lad.log_q(3, 2) == 0.0
    assert lad.log_q(1, 2) == pytest.approx(-math.log(2))


@given(st.floats(-10, 10))
def test_two_level_uniform_ratio_is_density_ratio(x):
    lad = ladder((1.0, INF), (0.5, 0.5))
    pts = np.array([[x]])
    lh1 = CIRCLE.log_density(pts)[0]
    assert tp.log_hastings_ratio(lad, lh1, 0, 1) == lad.log_h(1, pts)[0] - lad.log_h(0, pts)[0]
    assert tp.log_hastings_ratio(lad, lh1, 1, 0) == lad.log_h(0, pts)[0] - lad.log_h(1, pts)[0]


def test_boundary_correction_in_three_level_ratio():
    lad = ladder((1.0, 2.0, INF))
    # 0 -> 1: q(1,0) = 1/2, q(0,1) = 1
    r = tp.log_hastings_ratio(lad, -2.0, 0, 1)
    assert r == pytest.approx((-1.0 - -2.0) + math.log(0.5))


def test_hot_to_cold_move_at_apex_is_always_accepted():
    lad = ladder((1.0, INF))
    lh1 = CIRCLE.log_density(np.array([[0.0]]))[0]
    assert tp.log_hastings_ratio(lad, lh1, 1, 0) >= 0.0
    rng = mh.make_rng(0)
    for _ in range(50):
        s = tp.tempering_step(tp.TemperState(np.array([0.0]), 1), lad, AnchoredKernel(), rng)
        assert s.temp_index == 0 and s.proposed_index == 0


class AnchoredKernel(pp.ProposalKernel):
    """Always proposes the current point, so only the level move matters."""

    dimension = 1
    perimeter = 20.0
    translation = True

    def draw(self, rng, size):
        no = np.zeros(size, dtype=bool)
        return pp.Draws(np.zeros((size, 1)), no, no)


def test_tempering_step_never_leaves_level_range():
    lad = ladder((1.0, 2.0, INF))
    kern = pp.ball(1.0, CIRCLE)
    rng = mh.make_rng(1)
    s = tp.TemperState(np.array([0.0]), 0)
    for _ in range(2000):
        nxt = tp.tempering_step(s, lad, kern, rng)
        assert abs(nxt.proposed_index - s.temp_index) == 1
        assert abs(nxt.temp_index - s.temp_index) <= 1
        assert 0 <= nxt.temp_index < 3
        assert np.isfinite(lad.log_h(nxt.temp_index, nxt.x[None, :])[0])
        s = nxt


# -- runs -----------------------------------------------------------------------------


def test_single_level_ladder_reproduces_plain_chain():
    kern = pp.ball(1.0, CIRCLE)
    tr = tp.run_tempering(CIRCLE, ladder((1.0,)), kern, 10_000, 5)
    ref = mh.run_chain(mh.ChainConfig(CIRCLE, kern, steps=10_000, seed=5))
    assert np.array_equal(tr.states, ref.states)
    assert np.array_equal(tr.accept_flags, ref.accept_flags)
    assert np.all(tr.temp_index == 0)


def test_tempering_is_deterministic_and_levels_are_adjacent():
    kern = pp.ball(1.0, CIRCLE)
    a = tp.run_tempering(CIRCLE, ladder((1.0, 3.0, INF)), kern, 20_000, 8)
    b = tp.run_tempering(CIRCLE, ladder((1.0, 3.0, INF)), kern, 20_000, 8)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.temp_index, b.temp_index)
    assert np.all(np.abs(np.diff(a.temp_index.astype(int))) <= 1)
    assert np.all(np.abs(a.proposed_temp - a.temp_index[:-1]) == 1)


def test_batched_run_matches_step_function_ratios():
    lad = ladder((1.0, INF), (0.5, 0.5))
    tr = tp.run_tempering(CIRCLE, lad, pp.ball(1.0, CIRCLE), 20_000, 3)
    assert np.array_equal(tp.recomputed_log_ratios(tr, lad), tr.log_hastings)
    took = tr.temp_index[1:] != tr.temp_index[:-1]
    assert np.array_equal(took, tr.temp_accepted)


def test_tempering_cold_trace_visits_both_modes():
    tr = tp.run_tempering(CIRCLE, ladder(), pp.ball(1.0, CIRCLE), 100_000, 11)
    cold = tr.cold_states()
    occ = np.bincount(CIRCLE.piece_index(cold), minlength=2) / len(cold)
    assert np.all(np.abs(occ - 0.5) / 0.5 < 0.1)


def test_tuned_prior_balances_level_marginal():
    lad = ladder((1.0, 3.0, INF))
    kern = pp.ball(1.0, CIRCLE)
    tuned = tp.tune_pseudo_prior(CIRCLE, lad, kern, 50_000, 4, rounds=4)
    tr = tp.run_tempering(CIRCLE, tuned, kern, 200_000, 99)
    assert np.all(np.abs(tp.level_occupancy(tr, 3) - 1 / 3) < 0.02)


def test_transition_rate_matrix_is_nearest_neighbour():
    tr = tp.run_tempering(CIRCLE, ladder((1.0, 3.0, INF)), pp.ball(1.0, CIRCLE), 20_000, 2)
    R = tp.temperature_transition_rates(tr, 3)
    assert R[0, 2] == 0 and R[2, 0] == 0 and np.all(np.diag(R) == 0)
    assert R[0, 1] > 0 and R[2, 1] > 0


def test_tempering_trace_csv_has_level_column(tmp_path):
    tr = tp.run_tempering(CIRCLE, ladder(), pp.ball(1.0, CIRCLE), 10, 1)
    path = tmp_path / "t.csv"
    mh.write_trace_csv(tr, path)
    assert path.read_text().splitlines()[0] == "step,x0,temp_index,accepted"


# -- MCMCMC -------------------------------------------------------------------------------


def test_swap_of_identical_states_always_accepted():
    lad = ladder((1.0, 2.0))
    assert tp.swap_log_ratio(lad, [1.5], [1.5], 0, 1) == 0.0


def test_swap_ratio_invariant_to_density_scale():
    base = ladder((1.0, 2.0))
    r1 = tp.swap_log_ratio(base, [0.3], [4.2], 0, 1)
    # a constant offset c in log h_1 contributes c/t_i - c/t_i + c/t_j - c/t_j = 0
    inv = base.inverse_temps
    li, lj = CIRCLE.log_density(np.array([[0.3], [4.2]])) + 7.0
    r2 = (lj * inv[0] - li * inv[0]) + (li * inv[1] - lj * inv[1])
    assert r1 == pytest.approx(r2, abs=1e-12)


def test_swap_step_needs_one_state_per_level():
    with pytest.raises(UsageError):
        tp.mcmcmc_swap_step([[0.0]], ladder((1.0, 2.0)), mh.make_rng(0))


def test_swap_step_permutes_states():
    out = tp.mcmcmc_swap_step([[0.0], [0.0]], ladder((1.0, 2.0)), mh.make_rng(0))
    assert [o.tolist() for o in out] == [[0.0], [0.0]]


def grid_marginal(target, inv_t, grid, sub=64):
    """Oracle cell masses of h_1^{inv_t} by midpoint quadrature inside each cell."""
    w = grid.widths[:, 0]
    off = (np.arange(sub) + 0.5) / sub - 0.5
    pts = grid.centers[:, 0][:, None] + off[None, :] * w[:, None]
    pts = ((pts + grid.perimeter / 2) % grid.perimeter) - grid.perimeter / 2
    lh = target.log_density(pts.reshape(-1, 1)).reshape(pts.shape)
    mass = np.exp(lh * inv_t).mean(axis=1) * w
    return mass / mass.sum()


def test_mcmcmc_replica_marginals_match_grid():
    target = tg.two_mode_circle_target(2.0, 1.0)
    lad = tp.TemperLadder(target, (1.0, 3.0, INF))
    grid = circle_grid(8.0, 16)
    traces = tp.run_mcmcmc(lad, pp.ball(1.0, target), 300_000, 17)
    for k, tr in enumerate(traces):
        emp = np.bincount(grid.locate(tr.states), minlength=16) / tr.states.shape[0]
        tv = 0.5 * np.abs(emp - grid_marginal(target, lad.inverse_temps[k], grid)).sum()
        assert tv < 0.05, (k, tv)


def test_mcmcmc_deterministic():
    lad = ladder((1.0, INF))
    a = tp.run_mcmcmc(lad, pp.ball(1.0, CIRCLE), 5000, 3)
    b = tp.run_mcmcmc(lad, pp.ball(1.0, CIRCLE), 5000, 3)
    assert all(np.array_equal(x.states, y.states) for x, y in zip(a, b))
