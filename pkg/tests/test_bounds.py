import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smallworld import bounds as bd
from smallworld import proposals as pp
from smallworld import spectral as sp
from smallworld import targets as tg
from smallworld.errors import UsageError
from smallworld.grid import box_grid, circle_grid, interval_grid

EXP_PIECE = tg.exponential_piece([0.0], 1.0, tg.Interval(-6, 6))


def ball_chain(piece, delta, grid):
    target = tg.mixture_target([piece])
    return sp.discretize(target, pp.ball(delta, target), grid)


# -- TV kernel distance --------------------------------------------------------------


def test_tv_of_identical_rows_is_zero():
    chain = ball_chain(EXP_PIECE, 1.0, interval_grid(-6, 6, 48))
    assert bd.tv_kernel_distance(chain, 7, 7) == 0.0


def test_tv_of_disjoint_rows_is_one():
    chain = ball_chain(EXP_PIECE, 1.0, interval_grid(-6, 6, 48))
    assert bd.tv_kernel_distance(chain, 2, 40) == pytest.approx(1.0, abs=1e-14)


def test_tv_lemma_for_nearby_cells():
    grid = interval_grid(-6, 6, 240)  # width 0.05 < δ/8
    chain = ball_chain(EXP_PIECE, 1.0, grid)
    bound = bd.tv_kernel_bound(1.0, 1.0)
    slack = float(chain.pi.max())
    for i in range(chain.n_states - 2):
        for j in (i + 1, i + 2):
            assert bd.tv_kernel_distance(chain, i, j) <= bound + slack


@given(st.lists(st.integers(0, 47), min_size=3, max_size=3))
def test_tv_is_a_metric_on_rows(ix):
    chain = ball_chain(EXP_PIECE, 1.0, interval_grid(-6, 6, 48))
    i, j, k = ix
    dij, dji = bd.tv_kernel_distance(chain, i, j), bd.tv_kernel_distance(chain, j, i)
    assert dij == dji
    assert dij <= bd.tv_kernel_distance(chain, i, k) + bd.tv_kernel_distance(chain, k, j) + 1e-15


# -- isoperimetry --------------------------------------------------------------------


def test_isoperimetry_uniform_unit_interval():
    piece = tg.uniform_piece(tg.Interval(0, 1), nu=1.0)
    grid = interval_grid(0, 1, 10)
    res = bd.isoperimetry_check(piece, grid, range(0, 4), range(6, 10))
    oracle = math.log(2) / 0.25 * 0.2 * 0.4 * 0.4
    assert res.lhs == pytest.approx(0.2, abs=1e-12)
    assert res.context["M"] == pytest.approx(0.25, abs=1e-12)
    assert res.rhs == pytest.approx(oracle, rel=1e-10)
    assert round(res.rhs, 4) == 0.0887
    assert res.holds


def test_isoperimetry_adjacent_sets_nearly_vacuous():
    grid = interval_grid(-6, 6, 120)
    res = bd.isoperimetry_check(EXP_PIECE, grid, range(0, 60), range(61, 120))
    assert res.context["d"] == pytest.approx(0.1)
    assert res.holds and res.rhs < 0.05


def test_isoperimetry_rejects_overlap_and_touching_sets():
    grid = interval_grid(-6, 6, 24)
    with pytest.raises(UsageError):
        bd.isoperimetry_check(EXP_PIECE, grid, [1, 2, 3], [3, 4])
    with pytest.raises(UsageError):
        bd.isoperimetry_check(EXP_PIECE, grid, [1, 2], [3, 4])


def random_separated_sets(rng, n):
    a = int(rng.integers(1, n - 2))
    b = int(rng.integers(a + 1, n - 1))
    left, right = np.arange(a), np.arange(b, n)
    K1 = left[rng.random(a) < rng.uniform(0.2, 1.0)]
    K2 = right[rng.random(right.size) < rng.uniform(0.2, 1.0)]
    K1 = K1 if K1.size else left[-1:]
    K2 = K2 if K2.size else right[:1]
    return K1, K2


@pytest.mark.parametrize(
    "piece,grid",
    [
        (EXP_PIECE, interval_grid(-6, 6, 60)),
        (tg.uniform_piece(tg.Interval(-2, 3), nu=1.0), interval_grid(-2, 3, 50)),
    ],
)
def test_isoperimetry_random_partitions(piece, grid):
    rng = np.random.default_rng(2024)
    for _ in range(500):
        K1, K2 = random_separated_sets(rng, grid.n_cells)
        assert bd.isoperimetry_check(piece, grid, K1, K2).holds


# -- ball-walk conductance ------------------------------------------------------------


def test_ballwalk_remark_value():
    assert bd.remark_bound(1.0, 1, 1.0) == pytest.approx(3.59e-4, abs=5e-7)
    assert bd.ballwalk_bound_value(1.0, 1.0, 1, 1.0) == pytest.approx(bd.remark_bound(1.0, 1, 1.0))


def test_ballwalk_bound_holds_with_order_tenth_conductance():
    grid = interval_grid(-6, 6, 12)
    res = bd.ballwalk_conductance_bound(EXP_PIECE, 1.0, grid)
    assert res.holds
    assert 0.01 < res.lhs < 1.0
    assert res.lhs == pytest.approx(sp.exact_conductance(ball_chain(EXP_PIECE, 1.0, grid)))


def test_ballwalk_bound_vanishes_as_delta_shrinks():
    assert bd.ballwalk_bound_value(1e-9, 1.0, 1, 1.0) < 1e-12


def test_ballwalk_two_dimensional_piece():
    piece = tg.exponential_piece([0.0, 0.0], 1.0, tg.Box([-2, -2], [2, 2]))
    grid = box_grid([-2, -2], [2, 2], (4, 4))
    assert bd.ballwalk_conductance_bound(piece, 1.0, grid).holds


def test_ballwalk_guards():
    with pytest.raises(UsageError):
        bd.ballwalk_conductance_bound(EXP_PIECE, 1.0, interval_grid(-6, 6, 24))
    with pytest.raises(UsageError):
        bd.ballwalk_conductance_bound(EXP_PIECE, 2.0, interval_grid(-6, 6, 12))


def test_delta_sweep_peaks_at_inverse_alpha():
    for alpha in (0.5, 1.0, 3.0):
        res = bd.optimal_delta_check(alpha)
        assert res.holds and res.context["argmax"] == pytest.approx(1 / alpha)


# -- circle gap bounds --------------------------------------------------------------------


def test_local_upper_bound_and_flow_bound():
    res = bd.local_gap_upper_1d(5.0, 1.0, 1.0)
    assert res.holds
    assert res.lhs <= res.context["flow_bound"] + 1e-12


def test_local_upper_bound_guards():
    with pytest.raises(UsageError):
        bd.local_gap_upper_1d(3.0, 1.0, 3.0)
    with pytest.raises(UsageError):
        bd.local_gap_upper_1d(5.0, 1.0, 0.2, grid=64)


def test_circle_normalizer_makes_density_integrate_to_one():
    target, grid = bd.circle_setup(5.0, 1.0, 256)
    c = bd.circle_normalizer(target, grid)
    mass = np.sum(c * np.exp(target.log_density(grid.centers)) * grid.volumes)
    assert mass == pytest.approx(1.0, rel=1e-12)
    # analytic: two modes, each ∫ ν e^{-ν|x|} over [-L, L] = 2(1 - e^{-νL})
    assert c == pytest.approx(1 / (4 * (1 - math.exp(-5.0))), rel=1e-3)


def test_smallworld_lower_bounds_hold():
    full, restricted = bd.smallworld_gap_lower_1d(5.0, 1.0, 1.0, 1 / 3)
    assert full.holds and restricted.holds


def test_smallworld_needs_nu_L_at_least_two():
    with pytest.raises(UsageError):
        bd.smallworld_gap_lower_1d(1.5, 1.0, 1.0, 1 / 3)
    with pytest.raises(UsageError):
        bd.component_flow_check(1.5, 1.0, 1.0, 1 / 3)


def test_bound_prefactor_peaks_at_one_third():
    s = np.linspace(0.001, 0.999, 9981)
    vals = [bd.smallworld_bound_value(5.0, 1.0, 1.0, v) for v in s]
    assert s[int(np.argmax(vals))] == pytest.approx(1 / 3, abs=1e-3)


def test_component_flow_bound():
    res = bd.component_flow_check(5.0, 1.0, 1.0, 1 / 3)
    assert res.holds and res.lhs > 1 / 60
    assert res.lhs == pytest.approx(res.context["reverse_flow"], abs=1e-14)


@pytest.mark.parametrize("L", [3.0, 5.0, 8.0])
@pytest.mark.parametrize("s", [0.1, 1 / 3, 0.5])
def test_small_world_gap_exceeds_local_gap(L, s):
    local = bd.local_gap_upper_1d(L, 1.0, 1.0).lhs
    full, _ = bd.smallworld_gap_lower_1d(L, 1.0, 1.0, s)
    assert full.lhs >= local


# -- generic checks -----------------------------------------------------------------------


def test_cheeger_checks_exact_and_searched():
    exact = bd.cheeger_checks(sp.two_state_chain(0.1))
    assert [c.name for c in exact] == ["cheeger_upper", "cheeger_lower"]
    assert all(c.holds for c in exact)
    target = tg.two_mode_circle_target(5.0, 1.0)
    big = sp.discretize(target, pp.small_world(target, 1.0, 1 / 3), circle_grid(20.0, 64))
    searched = bd.cheeger_checks(big, "arcs")
    assert len(searched) == 1 and searched[0].holds


@pytest.mark.parametrize("s", [0.1, 1 / 3, 0.5])
def test_mixture_conductance_lemma(s):
    target = tg.two_mode_circle_target(3.0, 1.0)
    grid = circle_grid(12.0, 12)
    res = bd.mixture_conductance_check(target, pp.ball(1.0, target), pp.uniform_support(target), s, grid)
    assert res.holds


def test_result_relation_validation():
    with pytest.raises(UsageError):
        bd.BoundCheckResult("x", 1.0, 0.0, "==")
    assert bd.BoundCheckResult("x", 1.0 - 1e-10, 1.0, ">=").holds
    assert not bd.BoundCheckResult("x", 1.0 - 1e-8, 1.0, ">=").holds
