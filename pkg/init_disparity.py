"""
Initial disparity map and per-pixel search borders.

The four cross-lying views are matched against the reference view with Census
costs and SGM, fused with the confidence threshold phi, hole-filled, and turned
into hypothesis-index borders [D_L, D_H] of half-width lambda.
"""

import asyncio
import logging
import time
from dataclasses import dataclass, field

import cv2
import numpy as np

from cost_volume import cross_view_cost
from lf_core import DisparityMap, LightFieldError
from postproc import window_stack
from sgm import aggregate_all, wta

logger = logging.getLogger(__name__)

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class BorderMaps:
    """
    Hypothesis-index bounds D_L <= D_H per pixel.

    full_range_mask marks pixels that are searched over the whole range
    (invalid initial estimate or edge pixel).
    """

    low: np.ndarray
    high: np.ndarray
    full_range_mask: np.ndarray

    @classmethod
    def full(cls, shape, count):
        """Whole-range borders for every pixel."""
        return cls(
            np.zeros(shape, dtype=np.intp),
            np.full(shape, count - 1, dtype=np.intp),
            np.ones(shape, dtype=bool),
        )

    @property
    def shape(self):
        """(H, W)."""
        return self.low.shape

    def hypothesis_mask(self, count):
        """(H, W, count) mask of the indices inside each pixel's borders."""
        k = np.arange(count)
        return (self.low[..., None] <= k) & (k <= self.high[..., None])

    def sampled_count(self):
        """Number of (pixel, hypothesis) pairs the borders admit."""
        return int(np.sum(self.high - self.low + 1))

    def bordered_fraction(self):
        """Share of pixels searched over a restricted range."""
        return float(np.mean(~self.full_range_mask))


@dataclass
class InitialEstimate:
    """Everything the initial stage produces, kept for debug dumps."""

    intermediate: list
    fused: DisparityMap
    filled: DisparityMap
    edges: np.ndarray
    borders: BorderMaps
    seconds: dict = field(default_factory=dict)


def _cross_view_map(lf, cf, view, params, grid):
    cv = cross_view_cost(cf, view, lf.reference, grid)
    return wta(aggregate_all(cv, params), grid)


def intermediate_maps(lf, cf, params, grid):
    """One WTA disparity map per cross-lying view, all in reference-view coordinates."""
    views = lf.cross_views()
    if not views:
        raise LightFieldError("a 1x1 angular grid has no cross-lying views")
    return [_cross_view_map(lf, cf, view, params, grid) for view in views]


async def intermediate_maps_async(lf, cf, params, grid, executor=None):
    """intermediate_maps with the cross views matched concurrently."""
    views = lf.cross_views()
    if not views:
        raise LightFieldError("a 1x1 angular grid has no cross-lying views")
    loop = asyncio.get_running_loop()
    tasks = [
        loop.run_in_executor(executor, _cross_view_map, lf, cf, view, params, grid)
        for view in views
    ]
    return list(await asyncio.gather(*tasks))


def fuse(maps, phi):
    """
    Running fusion: start from the first map, average in each further map where
    it agrees within phi, otherwise discard the pixel for good.

    phi is in the maps' own units.
    """
    if not maps:
        raise ValueError("fuse needs at least one map")
    current = maps[0].values.copy()
    for other in maps[1:]:
        if other.shape != current.shape:
            raise ValueError(f"map shapes differ: {other.shape} vs {current.shape}")
        agree = np.abs(current - other.values) < phi
        current = np.where(agree, (current + other.values) / 2.0, np.nan)
    return DisparityMap(current)


def fill_holes(dm, window=3, passes=2, min_support=3):
    """
    Fill invalid pixels with the median of their valid neighbours.

    A hole needs at least min_support valid neighbours in its window; each pass
    reads the map as it was at the start of the pass.
    """
    if passes not in (1, 2):
        raise ValueError(f"fill passes must be 1 or 2, got {passes}")
    values = dm.values.copy()
    for _ in range(passes):
        holes = np.isnan(values)
        if not holes.any():
            break
        neighbours = window_stack(values, window)[holes]
        support = np.count_nonzero(~np.isnan(neighbours), axis=1)
        fillable = support >= min_support
        filled = np.full(support.shape, np.nan)
        if fillable.any():
            filled[fillable] = np.nanmedian(neighbours[fillable], axis=1)
        values[holes] = filled
    return DisparityMap(values)


def sobel_edges(ref_view, threshold):
    """Pixels whose normalized 3x3 Sobel gradient magnitude exceeds threshold."""
    if threshold < 0:
        raise ValueError(f"sobel threshold must be nonnegative, got {threshold}")
    gray = np.asarray(ref_view, dtype=np.float64) @ GRAY_WEIGHTS
    gx = cv2.Sobel(gray, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(gray, cv2.CV_64F, 0, 1, ksize=3)
    return np.hypot(gx, gy) / 4.0 > threshold


def compute_borders(dm, lam, edges, grid):
    """
    D_L = index(dm) - lam, D_H = index(dm) + lam, clamped into [0, N_d-1].

    Invalid and edge pixels get the full range and are flagged in full_range_mask.
    """
    last = grid.count - 1
    valid = dm.valid
    index = grid.index_of(np.where(valid, dm.values, grid.d_min))
    full = ~valid
    if edges is not None:
        full = full | edges
    low = np.where(full, 0, np.clip(index - lam, 0, last))
    high = np.where(full, last, np.clip(index + lam, 0, last))
    return BorderMaps(low.astype(np.intp), high.astype(np.intp), full)


async def initial_disparity(lf, cf, grid, config, executor=None):
    """Cross-view maps -> fuse -> fill -> edges -> borders."""
    seconds = {}

    start = time.perf_counter()
    maps = await intermediate_maps_async(lf, cf, config.init_params(), grid, executor)
    seconds["intermediate"] = time.perf_counter() - start
    logger.debug("%d intermediate maps", len(maps))

    start = time.perf_counter()
    fused = fuse(maps, config.phi * grid.step)
    filled = fill_holes(fused, config.fill_window, config.fill_passes, config.fill_min_support)
    edges = sobel_edges(lf.reference_view(), config.sobel_threshold)
    borders = compute_borders(filled, config.lam, edges, grid)
    seconds["borders"] = time.perf_counter() - start

    logger.debug(
        "fused %.1f%% valid, filled %.1f%% valid, %.1f%% pixels bordered",
        100.0 * np.mean(fused.valid),
        100.0 * np.mean(filled.valid),
        100.0 * borders.bordered_fraction(),
    )
    return InitialEstimate(maps, fused, filled, edges, borders, seconds)
