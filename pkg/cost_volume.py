"""
Matching cost volumes for the reference view.

Unset entries (hypotheses outside a pixel's bounds) hold UNSET (NaN) so that any
accidental read poisons the result instead of passing as a large cost.
"""

import logging
from dataclasses import dataclass

import numpy as np

from census import rgb_hamming
from lf_core import project, sample_points

logger = logging.getLogger(__name__)

UNSET = np.nan
L2_MAX_COST = 255.0 * np.sqrt(3.0)


@dataclass
class CostVolume:
    """
    Per-pixel, per-hypothesis cost of shape (H, W, N_d).

    Args:
        costs: float64 costs, UNSET outside the pixel's bounds
        bounds: BorderMaps restricting the evaluated range, or None
        sampled_count: number of (pixel, hypothesis) pairs evaluated
    """

    costs: np.ndarray
    bounds: object = None
    sampled_count: int = 0

    @property
    def shape(self):
        """(H, W, N_d)."""
        return self.costs.shape

    @property
    def n_hypotheses(self):
        """N_d."""
        return self.costs.shape[2]

    def is_set(self):
        """Mask of evaluated entries."""
        return ~np.isnan(self.costs)

    def validate(self):
        """Check that every set entry is finite and nonnegative."""
        values = self.costs[self.is_set()]
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("cost volume holds negative or infinite costs")
        return self


def _ranges(shape, count, borders):
    if borders is None:
        return np.zeros(shape, dtype=np.intp), np.full(shape, count - 1, dtype=np.intp)
    return borders.low, borders.high


def _shifted_hamming(reference, other, dx, dy, max_distance):
    """Census distance between reference[v, u] and other[v + dy, u + dx]; max_distance off-image."""
    height, width = reference.shape[:2]
    out = np.full((height, width), float(max_distance))
    top, bottom = max(0, -dy), min(height, height - dy)
    left, right = max(0, -dx), min(width, width - dx)
    if top < bottom and left < right:
        out[top:bottom, left:right] = rgb_hamming(
            reference[top:bottom, left:right],
            other[top + dy:bottom + dy, left + dx:right + dx],
        )
    return out


def cross_view_cost(cf, cross_view, ref, grid):
    """
    Census cost between the reference view and one cross-lying view.

    Projections leaving the cross view cost the maximum distance. Nearest
    sampling of an integer pixel is a whole-pixel shift of the view, so
    hypotheses that round to the same shift share one distance map.
    """
    cross_view = tuple(cross_view)
    ref = tuple(ref)
    if cross_view == ref:
        raise ValueError(f"cross view {cross_view} equals the reference view")

    s, t = cross_view
    reference = cf.view(*ref)
    other = cf.view(s, t)
    height, width = reference.shape[:2]

    costs = np.empty((height, width, grid.count))
    by_shift = {}
    for k, d in enumerate(grid.disparities()):
        du, dv = project(0.0, 0.0, s, t, d, ref)
        shift = (int(np.floor(du + 0.5)), int(np.floor(dv + 0.5)))
        if shift not in by_shift:
            by_shift[shift] = _shifted_hamming(reference, other, *shift, cf.max_distance)
        costs[..., k] = by_shift[shift]
    logger.debug("cross view %s: %d distinct shifts for %d hypotheses", cross_view, len(by_shift), grid.count)
    return CostVolume(costs, None, height * width * grid.count)


def _allviews_cost(data, ref, grid, borders, distance, mode, max_cost):
    num_s, num_t, height, width = data.shape[:4]
    ref_s, ref_t = ref
    reference = data[ref_s, ref_t]
    low, high = _ranges((height, width), grid.count, borders)

    costs = np.full((height, width, grid.count), UNSET)
    sampled = 0
    for k, d in enumerate(grid.disparities()):
        vv, uu = np.nonzero((low <= k) & (k <= high))
        if vv.size == 0:
            continue
        sampled += vv.size
        anchor = reference[vv, uu]
        total = np.zeros(vv.size)
        count = np.zeros(vv.size, dtype=np.intp)
        for s in range(num_s):
            for t in range(num_t):
                if (s, t) == (ref_s, ref_t):
                    continue
                up, vp = project(uu, vv, s, t, d, ref)
                values, inside = sample_points(data[s, t], up, vp, mode=mode)
                total += np.where(inside, distance(anchor, values), 0.0)
                count += inside
        costs[vv, uu, k] = np.where(count > 0, total / np.maximum(count, 1), max_cost)

    logger.debug("all-views cost: %d of %d samples", sampled, costs.size)
    return CostVolume(costs, borders, sampled)


def _l2(anchor, values):
    diff = anchor.astype(np.float64) - values
    return np.sqrt(np.sum(diff * diff, axis=-1))


def allviews_cost_l2(lf, grid, borders=None):
    """
    Mean l2 RGB distance between the reference pixel and its bilinear projections
    into every other view with an in-bounds projection.
    """
    return _allviews_cost(lf.views, lf.reference, grid, borders, _l2, "bilinear", L2_MAX_COST)


def allviews_cost_census(cf, grid, borders=None):
    """Census counterpart of allviews_cost_l2 using nearest-neighbor projection."""
    return _allviews_cost(
        cf.bits, cf.reference, grid, borders, rgb_hamming, "nearest", float(cf.max_distance)
    )
