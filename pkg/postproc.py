"""
Sub-pixel refinement and median filtering of disparity maps.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lf_core import DisparityMap


def window_stack(values, window):
    """
    Neighbourhood values of every pixel, shape (H, W, window*window).

    Out-of-image positions are NaN, so NaN-aware reductions see a truncated window.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd size, got {window}")
    r = window // 2
    padded = np.pad(values, r, mode="constant", constant_values=np.nan)
    windows = sliding_window_view(padded, (window, window))
    return windows.reshape(values.shape + (window * window,))


def subpixel_refine(dm, av, borders, grid):
    """
    Parabolic interpolation of cost slices around each WTA disparity.

    `av` is any volume with (H, W, N) costs: the SGM sums, or the matching
    costs they were aggregated from.

    Only pixels whose index d satisfies D_L+1 <= d <= D_H-1 with at least three
    indices in [D_L+1, D_H-1] are refined. Triples whose center is not a
    local minimum, and flat ones, are kept.
    """
    height, width = dm.shape
    if borders is None:
        low = np.zeros((height, width), dtype=np.intp)
        high = np.full((height, width), grid.count - 1, dtype=np.intp)
    else:
        low, high = borders.low, borders.high

    valid = dm.valid
    index = grid.index_of(np.where(valid, dm.values, grid.d_min))
    gate = valid & (index >= low + 1) & (index <= high - 1) & (high - low - 1 >= 3)

    rows, cols = np.nonzero(gate)
    k = index[rows, cols]
    c_minus = av.costs[rows, cols, k - 1]
    c_center = av.costs[rows, cols, k]
    c_plus = av.costs[rows, cols, k + 1]
    denominator = c_minus - 2.0 * c_center + c_plus

    offset = np.zeros(k.shape)
    minimum = (c_center <= c_minus) & (c_center <= c_plus)
    usable = np.isfinite(denominator) & (denominator > 0) & minimum
    offset[usable] = (c_minus - c_plus)[usable] / (2.0 * denominator[usable])

    values = dm.values.copy()
    values[rows, cols] += offset * grid.step
    return DisparityMap(values)


def median_filter(dm, window=3):
    """Median over the valid values of each window; invalid pixels stay invalid."""
    stack = window_stack(dm.values, window)
    valid = dm.valid
    values = np.full(dm.shape, np.nan)
    values[valid] = np.nanmedian(stack[valid], axis=1)
    return DisparityMap(values)
