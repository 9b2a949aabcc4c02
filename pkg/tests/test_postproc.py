"""
Tests for sub-pixel refinement and the median filter.
"""

import numpy as np
import pytest

from init_disparity import BorderMaps
from lf_core import DisparityMap, HypothesisGrid
from postproc import median_filter, subpixel_refine, window_stack
from sgm import AggregatedVolume

GRID = HypothesisGrid(0.0, 8.0, 9)


def refine_one(costs, index=4, low=0, high=8, grid=GRID):
    volume = np.full((1, 1, grid.count), 100.0)
    volume[0, 0, index - 1:index + 2] = costs
    borders = BorderMaps(np.array([[low]]), np.array([[high]]), np.zeros((1, 1), dtype=bool))
    dm = DisparityMap(np.array([[grid.hypothesis(index)]]))
    return subpixel_refine(dm, AggregatedVolume(volume), borders, grid).values[0, 0]


def test_symmetric_costs_keep_the_center():
    """Test a symmetric parabola."""
    assert refine_one((4, 2, 4)) == 4.0


def test_offset_moves_toward_the_cheaper_side():
    """Test costs (3, 2, 4): the vertex lies a sixth of a step below the center."""
    assert refine_one((3, 2, 4)) == pytest.approx(4.0 - 1.0 / 6.0)
    assert refine_one((4, 2, 3)) == pytest.approx(4.0 + 1.0 / 6.0)


def test_gate_keeps_border_pixels():
    """Test that indices at D_L or D_H, and narrow ranges, are not refined."""
    assert refine_one((3, 2, 4), low=4, high=8) == 4.0
    assert refine_one((3, 2, 4), low=0, high=4) == 4.0
    assert refine_one((3, 2, 4), low=3, high=6) == 4.0
    assert refine_one((3, 2, 4), low=2, high=6) == pytest.approx(4.0 - 1.0 / 6.0)


def test_flat_costs_are_kept():
    """Test a zero denominator."""
    assert refine_one((2, 2, 2)) == 4.0


def test_non_minimum_center_is_kept():
    """Test that a WTA index that is not a local cost minimum is not moved."""
    assert refine_one((1, 2, 4)) == 4.0
    assert refine_one((4, 2, 1)) == 4.0
    assert refine_one((5, 2, 2)) == pytest.approx(4.5)


def test_v_shaped_costs_move_toward_the_vertex():
    """Test absolute-difference costs with the vertex 0.3125 steps above the center."""
    vertex = 0.3125
    costs = np.abs(np.arange(-1, 2) - vertex) * 10.0
    refined = refine_one(costs)
    assert 4.0 < refined < 4.0 + vertex
    assert refined == pytest.approx(4.0 + vertex / (2 * (1 - vertex)))


def test_recovers_parabola_vertices():
    """Test exact vertex recovery on sampled parabolas."""
    rng = np.random.default_rng(0)
    grid = HypothesisGrid(-1.0, 1.0, 9)
    for vertex in rng.uniform(-0.49, 0.49, size=1000):
        curvature = rng.uniform(0.5, 20)
        costs = curvature * (np.arange(-1, 2) - vertex) ** 2 + 3.0
        refined = refine_one(costs, grid=grid)
        assert refined == pytest.approx(vertex * grid.step, abs=1e-6)


def test_offsets_stay_within_half_a_step():
    """Test refinement of strict local minima."""
    rng = np.random.default_rng(1)
    for _ in range(200):
        center = rng.uniform(0, 5)
        costs = (center + rng.uniform(0.01, 5), center, center + rng.uniform(0.01, 5))
        assert abs(refine_one(costs) - 4.0) < 0.5


def test_unbounded_refinement_and_invalid_pixels():
    """Test borders=None and pixels without an estimate."""
    volume = np.tile(np.array([9.0, 4.0, 3.0, 5.0, 9.0]), (1, 2, 1))
    grid = HypothesisGrid(0.0, 4.0, 5)
    dm = DisparityMap(np.array([[2.0, np.nan]]))
    refined = subpixel_refine(dm, AggregatedVolume(volume), None, grid)
    assert refined.values[0, 0] == pytest.approx(2.0 - 1.0 / 6.0)
    assert not refined.valid[0, 1]


def test_window_stack_truncates_at_borders():
    """Test neighbourhood gathering with NaN outside the image."""
    stack = window_stack(np.arange(9.0).reshape(3, 3), 3)
    assert stack.shape == (3, 3, 9)
    assert np.count_nonzero(~np.isnan(stack[0, 0])) == 4
    assert sorted(stack[1, 1]) == list(range(9))
    with pytest.raises(ValueError):
        window_stack(np.zeros((3, 3)), 2)


def test_median_constant_and_impulse():
    """Test a constant map and a single outlier."""
    constant = DisparityMap(np.full((6, 6), 1.25))
    assert np.array_equal(median_filter(constant).values, constant.values)

    values = np.full((6, 6), 1.25)
    values[3, 2] = 40.0
    assert np.array_equal(median_filter(DisparityMap(values)).values, constant.values)


def test_median_keeps_invalid_pixels():
    """Test that holes stay holes and do not enter the median."""
    values = np.full((4, 4), 2.0)
    values[1, 1] = np.nan
    filtered = median_filter(DisparityMap(values))
    assert not filtered.valid[1, 1]
    assert np.all(filtered.values[filtered.valid] == 2.0)


def test_median_matches_sort_oracle():
    """Test every pixel against a sorted window."""
    rng = np.random.default_rng(2)
    values = rng.uniform(-3, 3, size=(7, 9))
    values[rng.random((7, 9)) < 0.2] = np.nan
    filtered = median_filter(DisparityMap(values), 3).values
    for v in range(7):
        for u in range(9):
            if np.isnan(values[v, u]):
                assert np.isnan(filtered[v, u])
                continue
            window = values[max(v - 1, 0):v + 2, max(u - 1, 0):u + 2].ravel()
            window = np.sort(window[~np.isnan(window)])
            n = window.size
            expected = window[n // 2] if n % 2 else 0.5 * (window[n // 2 - 1] + window[n // 2])
            assert filtered[v, u] == pytest.approx(expected)
