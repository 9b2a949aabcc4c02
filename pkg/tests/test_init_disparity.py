"""
Tests for the initial disparity stage: fusion, hole filling, edges and borders.
"""

import math

import numpy as np
import pytest

from census import CensusPattern, census_transform
from config import PipelineConfig
from evaluation import margin_mask
from init_disparity import (
    BorderMaps,
    compute_borders,
    fill_holes,
    fuse,
    initial_disparity,
    intermediate_maps,
    sobel_edges,
)
from lf_core import DisparityMap, HypothesisGrid, LightField, LightFieldError
from sgm import SgmParams
from synth import random_texture, synthesize


def constant_map(value, shape=(5, 5)):
    return DisparityMap(np.full(shape, float(value)))


def test_fuse_identical_maps():
    """Test that agreeing maps pass through unchanged."""
    rng = np.random.default_rng(0)
    dm = DisparityMap(rng.uniform(-2, 2, size=(4, 6)))
    fused = fuse([dm, dm.copy(), dm.copy(), dm.copy()], 3.0)
    assert np.array_equal(fused.values, dm.values)


def test_fuse_running_average():
    """Test sequential averaging of agreeing maps."""
    maps = [constant_map(v, (1, 1)) for v in (4, 5, 4, 5)]
    assert fuse(maps, 3.0).values[0, 0] == pytest.approx(4.625)


def test_fuse_discards_for_good():
    """Test that a disagreement invalidates the pixel whatever follows."""
    maps = [constant_map(0, (1, 1)), constant_map(3, (1, 1)), constant_map(0, (1, 1)), constant_map(0, (1, 1))]
    assert not fuse(maps, 3.0).valid[0, 0]


def test_fuse_stays_within_input_range():
    """Test that fused values are convex combinations of the inputs."""
    rng = np.random.default_rng(1)
    maps = [DisparityMap(rng.uniform(0, 4, size=(8, 8))) for _ in range(4)]
    fused = fuse(maps, 1.5)
    stack = np.stack([dm.values for dm in maps])
    valid = fused.valid
    assert np.all(fused.values[valid] >= stack.min(axis=0)[valid] - 1e-12)
    assert np.all(fused.values[valid] <= stack.max(axis=0)[valid] + 1e-12)


def test_fill_holes_without_holes():
    """Test that a complete map is unchanged."""
    dm = DisparityMap(np.arange(12, dtype=np.float64).reshape(3, 4))
    assert np.array_equal(fill_holes(dm).values, dm.values)


def test_fill_holes_single_hole():
    """Test a hole inside a constant region."""
    values = np.full((5, 5), 2.5)
    values[2, 2] = np.nan
    assert np.array_equal(fill_holes(DisparityMap(values)).values, np.full((5, 5), 2.5))


def test_fill_holes_needs_three_neighbours():
    """Test that a hole with two valid neighbours stays invalid after both passes."""
    values = np.full((5, 5), np.nan)
    values[0, 0] = 1.0
    values[0, 1] = 1.0
    # (1, 0) sees 2 valid neighbours; nothing else sees 3 in the first pass
    filled = fill_holes(DisparityMap(values), passes=2)
    assert not filled.valid[1, 0]
    assert filled.valid.sum() == 2
    with pytest.raises(ValueError):
        fill_holes(DisparityMap(values), passes=3)


def test_fill_holes_second_pass_uses_first_pass_results():
    """Test that holes filled in pass one support pass two."""
    values = np.full((1, 7), np.nan)
    values[0, :3] = 1.0
    # on a single row a 7-wide window reaches 3 columns to each side
    one = fill_holes(DisparityMap(values), window=7, passes=1)
    two = fill_holes(DisparityMap(values), window=7, passes=2)
    assert one.valid[0, 3] and not one.valid[0, 4]
    assert two.valid[0, 4]


def test_borders_examples():
    """Test lambda bounds, clamping and the full range of invalid pixels."""
    grid = HypothesisGrid(0.0, 63.0, 64)
    values = np.array([[5.0, 1.0, np.nan, 62.0]])
    borders = compute_borders(DisparityMap(values), 2, None, grid)
    assert borders.low.tolist() == [[3, 0, 0, 60]]
    assert borders.high.tolist() == [[7, 3, 63, 63]]
    assert borders.full_range_mask.tolist() == [[False, False, True, False]]
    assert borders.bordered_fraction() == 0.75


def test_borders_exclude_edges():
    """Test that edge pixels get the full range."""
    grid = HypothesisGrid(0.0, 63.0, 64)
    edges = np.array([[False, True]])
    borders = compute_borders(DisparityMap(np.array([[5.0, 5.0]])), 2, edges, grid)
    assert borders.low.tolist() == [[3, 0]]
    assert borders.high.tolist() == [[7, 63]]


def test_full_borders():
    """Test the unbounded border maps."""
    borders = BorderMaps.full((2, 3), 10)
    assert borders.sampled_count() == 60
    assert borders.hypothesis_mask(10).all()
    assert borders.bordered_fraction() == 0.0


def test_sobel_edges():
    """Test uniform images, a vertical step and an infinite threshold."""
    uniform = np.full((8, 8, 3), 120, dtype=np.uint8)
    assert not sobel_edges(uniform, 10).any()

    step = np.zeros((8, 8, 3), dtype=np.uint8)
    step[:, 4:] = 255
    edges = sobel_edges(step, 96)
    assert edges[:, 3].all() and edges[:, 4].all()
    assert not edges[:, :3].any() and not edges[:, 5:].any()
    assert not sobel_edges(step, np.inf).any()


def test_intermediate_maps_identical_views():
    """Test zero disparity on every cross view of an identical light field."""
    rng = np.random.default_rng(2)
    image = rng.integers(0, 256, size=(10, 10, 3), dtype=np.uint8)
    lf = LightField(np.broadcast_to(image, (3, 3, 10, 10, 3)).copy(), -2.0, 2.0)
    cf = census_transform(lf, CensusPattern())
    grid = lf.grid(5)
    maps = intermediate_maps(lf, cf, SgmParams(21, 45), grid)
    assert len(maps) == 4
    for dm in maps:
        assert np.all(dm.values == 0.0)


def test_intermediate_maps_of_a_row():
    """Test that a 3D light field yields two maps and a single view none."""
    rng = np.random.default_rng(3)
    row = LightField(rng.integers(0, 256, size=(5, 1, 8, 8, 3), dtype=np.uint8), -1.0, 1.0)
    grid = HypothesisGrid(-1.0, 1.0, 5)
    maps = intermediate_maps(row, census_transform(row, CensusPattern()), SgmParams(21, 45), grid)
    assert len(maps) == 2

    single = LightField(rng.integers(0, 256, size=(1, 1, 8, 8, 3), dtype=np.uint8), -1.0, 1.0)
    with pytest.raises(LightFieldError):
        intermediate_maps(single, census_transform(single, CensusPattern()), SgmParams(21, 45), grid)


@pytest.mark.asyncio
async def test_initial_disparity_identical_views():
    """Test the whole initial stage on an identical light field."""
    rng = np.random.default_rng(4)
    image = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
    lf = LightField(np.broadcast_to(image, (3, 3, 12, 12, 3)).copy(), -4.0, 4.0)
    grid = lf.grid(9)
    config = PipelineConfig(n_hypotheses=9, sobel_threshold=np.inf)
    initial = await initial_disparity(lf, census_transform(lf, config.pattern()), grid, config)
    assert np.all(initial.filled.values == 0.0)
    assert initial.borders.low.min() == 2
    assert initial.borders.high.max() == 6
    assert set(initial.seconds) == {"intermediate", "borders"}


@pytest.mark.parametrize("disparity", [-2.0, 1.0, 2.0])
def test_intermediate_maps_recover_a_plane(disparity):
    """Test that every cross-view map hits the true hypothesis away from the image borders."""
    lf, gt = synthesize(random_texture(80, seed=21), disparity, 5, 5)
    grid = lf.grid(9)
    pattern = CensusPattern()
    maps = intermediate_maps(lf, census_transform(lf, pattern), SgmParams(21, 45), grid)
    mask = margin_mask(gt.shape, math.ceil(abs(disparity) * 2) + pattern.radius + 9)
    assert mask.sum() > 400
    for dm in maps:
        assert np.all(dm.values[mask] == disparity)


@pytest.mark.asyncio
@pytest.mark.parametrize("disparity", [1.5, 2.0])
async def test_borders_contain_the_true_hypothesis(disparity):
    """Test that [D_L, D_H] holds the true index on nearly every pixel of a default-config scene."""
    lf, gt = synthesize(random_texture(96, seed=1), disparity, 5, 5)
    config = PipelineConfig()
    grid = lf.grid(config.n_hypotheses)
    initial = await initial_disparity(lf, census_transform(lf, config.pattern()), grid, config)
    truth = grid.index_of(gt.values)
    borders = initial.borders
    inside = (borders.low <= truth) & (truth <= borders.high)
    mask = margin_mask(gt.shape, math.ceil(abs(disparity) * 2) + 4)
    assert np.mean(inside[mask]) >= 0.99
    assert borders.bordered_fraction() > 0.5
