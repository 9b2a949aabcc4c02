"""
Semi-global matching over (optionally bounded) cost volumes.

Path costs follow
    L_r(p, d) = C(p, d) + min(L_r(p-r, d), L_r(p-r, d-1) + P1, L_r(p-r, d+1) + P1,
                              min_t L_r(p-r, t) + P2)
with d an index into the hypothesis grid. The predecessor of p is exactly p - r,
so knight-step directions skip pixels along their line.
"""

import asyncio
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from lf_core import DisparityMap

logger = logging.getLogger(__name__)

COMPASS_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))
KNIGHT_DIRECTIONS = ((2, 1), (-2, -1), (2, -1), (-2, 1), (1, 2), (-1, -2), (1, -2), (-1, 2))


def default_directions(count=16):
    """The first `count` of the 8 compass and 8 knight-step directions (4, 8 or 16)."""
    directions = COMPASS_DIRECTIONS + KNIGHT_DIRECTIONS
    if count not in (4, 8, 16):
        raise ValueError(f"direction count must be 4, 8 or 16, got {count}")
    return directions[:count]


@dataclass(frozen=True)
class SgmParams:
    """Smoothness penalties and traversal directions."""

    p1: float
    p2: float
    directions: tuple = default_directions(16)

    def __post_init__(self):
        if not 0 <= self.p1 <= self.p2:
            raise ValueError(f"penalties must satisfy 0 <= P1 <= P2, got {self.p1}, {self.p2}")
        directions = tuple((int(du), int(dv)) for du, dv in self.directions)
        if not directions:
            raise ValueError("at least one direction is required")
        if (0, 0) in directions:
            raise ValueError("zero direction vector")
        if len(set(directions)) != len(directions):
            raise ValueError("duplicate directions")
        object.__setattr__(self, "directions", directions)


@dataclass
class AggregatedVolume:
    """Costs summed over all directions, shape (H, W, N_d), NaN where unset."""

    costs: np.ndarray
    bounds: object = None

    @property
    def shape(self):
        """(H, W, N_d)."""
        return self.costs.shape


def _step(current, previous, p1, p2):
    """One recurrence step for a line of pixels; unset entries are +inf."""
    previous_min = previous.min(axis=1, keepdims=True)
    lower = np.full_like(previous, np.inf)
    upper = np.full_like(previous, np.inf)
    lower[:, 1:] = previous[:, :-1]
    upper[:, :-1] = previous[:, 1:]
    best = np.minimum(
        np.minimum(previous, previous_min + p2),
        np.minimum(lower, upper) + p1,
    )
    # no predecessor, or predecessor range disjoint from ours: the path restarts
    overlap = np.any(np.isfinite(previous) & np.isfinite(current), axis=1, keepdims=True)
    return np.where(overlap, current + best, current)


def _scan(cost, du, dv, p1, p2):
    """Column sweep for directions with du != 0. cost is (H, W, N) with inf unset."""
    height, width, _ = cost.shape
    paths = np.full_like(cost, np.inf)
    rows = np.arange(height)
    previous_rows = rows - dv
    has_row = (previous_rows >= 0) & (previous_rows < height)

    columns = range(width) if du > 0 else range(width - 1, -1, -1)
    for u in columns:
        previous_u = u - du
        if not 0 <= previous_u < width:
            paths[:, u] = cost[:, u]
            continue
        previous = np.full(cost.shape[::2], np.inf)
        previous[has_row] = paths[previous_rows[has_row], previous_u]
        paths[:, u] = _step(cost[:, u], previous, p1, p2)
    return paths


def _filled(cv):
    return np.where(cv.is_set(), cv.costs, np.inf)


def _path_costs(cost, r, p1, p2):
    """L_r over an inf-filled volume; unset entries stay inf."""
    du, dv = r
    if du != 0:
        return _scan(cost, du, dv, p1, p2)
    return _scan(cost.transpose(1, 0, 2), dv, du, p1, p2).transpose(1, 0, 2)


def aggregate_direction(cv, r, params):
    """Path costs L_r for one direction, (H, W, N_d) with NaN where unset."""
    paths = _path_costs(_filled(cv), r, params.p1, params.p2)
    paths[np.isinf(paths)] = np.nan
    return paths


def _finish(cv, total):
    # unset entries are inf on every path, so they are inf in the sum
    total[np.isinf(total)] = np.nan
    return AggregatedVolume(total, cv.bounds)


def aggregate_all(cv, params):
    """Sum of the path costs over every direction."""
    cost = _filled(cv)
    total = np.zeros(cv.shape)
    for r in params.directions:
        total += _path_costs(cost, r, params.p1, params.p2)
    return _finish(cv, total)


async def aggregate_all_async(cv, params, executor=None, max_pending=1):
    """
    aggregate_all with one executor task per direction.

    At most `max_pending` direction volumes are alive at once. They are added
    in direction-list order, so the output equals aggregate_all bit for bit
    whatever the number of workers.
    """
    if max_pending < 1:
        raise ValueError(f"max_pending must be >= 1, got {max_pending}")
    loop = asyncio.get_running_loop()
    cost = _filled(cv)
    total = np.zeros(cv.shape)
    pending = deque()
    for r in params.directions:
        pending.append(loop.run_in_executor(executor, _path_costs, cost, r, params.p1, params.p2))
        if len(pending) >= max_pending:
            total += await pending.popleft()
    while pending:
        total += await pending.popleft()
    logger.debug("aggregated %d directions, %d in flight", len(params.directions), max_pending)
    return _finish(cv, total)


def wta(av, grid):
    """Winner-takes-all; ties go to the smallest index, pixels without set costs are invalid."""
    costs = np.where(np.isnan(av.costs), np.inf, av.costs)
    index = np.argmin(costs, axis=2)
    valid = np.isfinite(np.min(costs, axis=2))
    return DisparityMap.from_values(grid.disparities()[index], valid)
