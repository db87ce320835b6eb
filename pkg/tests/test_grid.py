import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smallworld import targets as tg
from smallworld.errors import UsageError
from smallworld.grid import GridSpec, box_grid, circle_grid, grid_for, interval_grid, wrap


def test_interval_grid_geometry():
    g = interval_grid(-1.0, 3.0, 8)
    assert g.n_cells == 8 and g.dimension == 1
    assert np.allclose(g.widths, 0.5) and g.volumes.sum() == pytest.approx(4.0)
    assert g.centers[0, 0] == pytest.approx(-0.75)


def test_locate_edges_and_outside():
    g = interval_grid(0.0, 1.0, 4)
    assert g.locate(np.array([0.0, 0.2499, 0.25, 1.0, -0.1, 1.1])).tolist() == [0, 0, 1, 3, -1, -1]


@given(st.floats(-100, 100))
def test_circle_locate_wraps(x):
    g = circle_grid(20.0, 16)
    assert g.locate(np.array([[x]]))[0] == g.locate(np.array([[x + 20.0]]))[0]
    assert 0 <= g.locate(np.array([[x]]))[0] < 16


@given(st.floats(-1e3, 1e3))
def test_wrap_range(x):
    y = float(wrap(x, 7.0))
    assert -3.5 <= y < 3.5


def test_box_grid_row_major_locate():
    g = box_grid([0, 0], [2, 3], (2, 3))
    assert g.n_cells == 6 and g.is_tensor
    assert g.locate(np.array([[0.5, 0.5], [0.5, 2.5], [1.5, 0.5], [3.0, 0.0]])).tolist() == [0, 2, 3, -1]
    assert np.allclose(g.centers[g.locate(g.centers)], g.centers)


def test_grid_for_uses_bins_per_axis_in_two_d():
    target = tg.mixture_target([tg.exponential_piece([0.0, 0.0], 1.0, tg.Box([-1, -1], [1, 1]))])
    assert grid_for(target, 5).shape == (5, 5)
    assert grid_for(tg.two_mode_circle_target(5.0, 1.0), 64).topology == "circle"


def test_covers():
    g = interval_grid(-2, 2, 10)
    assert g.covers([-2], [2]) and not g.covers([-3], [1])


def test_invalid_grids_rejected():
    with pytest.raises(UsageError):
        interval_grid(1.0, 0.0, 4)
    with pytest.raises(UsageError):
        circle_grid(10.0, 0)
    with pytest.raises(UsageError):
        GridSpec(np.zeros((3, 1)), np.zeros((3, 1)))


def test_subset_loses_tensor_structure():
    g = interval_grid(0, 1, 10)
    sub = g.subset(np.arange(10) < 4)
    assert sub.n_cells == 4
    with pytest.raises(UsageError):
        box_grid([0, 0], [1, 1], (3, 3)).subset([0, 4]).locate(np.zeros((1, 2)))
