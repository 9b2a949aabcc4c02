"""
Two-stage disparity estimation.

Stage 1-2 build a cheap initial map from the cross-lying views and turn it into
per-pixel search borders; stage 3-5 match across all views inside those borders,
aggregate with SGM and refine.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from census import census_transform
from config import PipelineConfig
from cost_volume import allviews_cost_census, allviews_cost_l2
from evaluation import sampled_fraction
from init_disparity import initial_disparity
from postproc import median_filter, subpixel_refine
from sgm import aggregate_all_async, wta

logger = logging.getLogger(__name__)


@dataclass
class EstimationResult:
    disparity: object
    raw: object
    refined: object
    cost_volume: object
    grid: object
    initial: object = None
    compute_seconds: float = 0.0
    stage_seconds: dict = field(default_factory=dict)

    @property
    def borders(self):
        """Search borders, or None without bounding."""
        return self.initial.borders if self.initial is not None else None

    @property
    def sampled_fraction(self):
        """Share of the full cost volume that was evaluated."""
        return sampled_fraction(self.cost_volume)

    @property
    def bordered_fraction(self):
        """Share of pixels searched over a restricted range."""
        return self.borders.bordered_fraction() if self.borders is not None else 0.0


class DisparityEstimator:
    """Runs the full pipeline on one light field."""

    def __init__(self, config=None):
        self.config = (config or PipelineConfig()).validate()

    async def run(self, lf):
        """Estimate the reference-view disparity of `lf`; returns an EstimationResult."""
        config = self.config
        grid = lf.grid(config.n_hypotheses)
        seconds = {}
        logger.info("Estimating %dx%d light field of %dx%d views, %d hypotheses in [%g, %g]",
                    lf.S, lf.T, lf.width, lf.height, grid.count, grid.d_min, grid.d_max)

        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            start = time.perf_counter()

            cf = None
            if config.bounding or config.final_metric == "census":
                logger.info("[Stage 1] Census transform")
                mark = time.perf_counter()
                cf = census_transform(lf, config.pattern())
                seconds["census"] = time.perf_counter() - mark

            initial = None
            borders = None
            if config.bounding:
                logger.info("[Stage 2] Initial disparity: %d cross views", len(lf.cross_views()))
                initial = await initial_disparity(lf, cf, grid, config, executor)
                borders = initial.borders
                seconds.update(initial.seconds)
                logger.info("  %.1f%% of pixels bordered", 100.0 * borders.bordered_fraction())

            logger.info("[Stage 3] All-views %s cost", config.final_metric)
            mark = time.perf_counter()
            if config.final_metric == "census":
                cv = allviews_cost_census(cf, grid, borders)
            else:
                cv = allviews_cost_l2(lf, grid, borders)
            seconds["cost"] = time.perf_counter() - mark
            logger.info("  sampled %.1f%% of the hypotheses", 100.0 * sampled_fraction(cv))

            logger.info("[Stage 4] SGM over %d directions", config.num_directions)
            mark = time.perf_counter()
            av = await aggregate_all_async(cv, config.final_params(), executor, config.workers)
            raw = wta(av, grid)
            seconds["sgm"] = time.perf_counter() - mark

            logger.info("[Stage 5] Sub-pixel refinement and median filter")
            mark = time.perf_counter()
            slices = cv if config.subpixel_costs == "matching" else av
            refined = subpixel_refine(raw, slices, borders, grid)
            final = median_filter(refined, config.median_window)
            seconds["postproc"] = time.perf_counter() - mark

            compute = time.perf_counter() - start

        logger.info("Done in %.3f s", compute)
        return EstimationResult(
            disparity=final,
            raw=raw,
            refined=refined,
            cost_volume=cv,
            grid=grid,
            initial=initial,
            compute_seconds=compute,
            stage_seconds=seconds,
        )


async def estimate_disparity(lf, config=None):
    """Run the pipeline with a fresh estimator."""
    return await DisparityEstimator(config).run(lf)
