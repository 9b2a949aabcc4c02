"""
Synthetic light fields of a fronto-parallel textured plane at constant disparity.
"""

import logging
import math
from pathlib import Path

import cv2
import numpy as np

from disparity_io import save_disparity
from lf_core import DisparityMap, LightField, LightFieldError, sample_points, write_lightfield

logger = logging.getLogger(__name__)

GT_NAME = "gt_disp_lowres.pfm"
MIN_VIEW_SIZE = 8


def random_texture(size, seed=0, sigma=1.0):
    """Smoothed uniform RGB noise, (size, size, 3) uint8."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(0.0, 255.0, size=(size, size, 3)).astype(np.float32)
    if sigma > 0:
        noise = cv2.GaussianBlur(noise, (0, 0), sigma)
    low, high = noise.min(), noise.max()
    return np.round((noise - low) / max(high - low, 1e-6) * 255.0).astype(np.uint8)


def default_range(disparity):
    """Scene range holding the plane with two pixels to spare, never narrower than [-4, 4]."""
    return min(-4.0, math.floor(disparity) - 2.0), max(4.0, math.ceil(disparity) + 2.0)


def synthesize(texture, disparity, num_s=5, num_t=5, noise_sigma=0.0, seed=0, d_range=None):
    """
    Render every view of a plane at constant disparity.

    The reference view is the central crop of the texture; view (s, t) sees the
    texture shifted by ((s_ref - s) d, (t_ref - t) d), so reference pixel (u, v)
    reappears at project(u, v, s, t, d) in that view.

    Returns:
        (LightField, ground-truth DisparityMap)
    """
    texture = np.asarray(texture)
    if texture.ndim == 2:
        texture = np.repeat(texture[..., None], 3, axis=2)
    ref_s, ref_t = (num_s - 1) // 2, (num_t - 1) // 2
    reach = max(ref_s, num_s - 1 - ref_s, ref_t, num_t - 1 - ref_t)
    margin = math.ceil(abs(disparity) * reach)

    height = texture.shape[0] - 2 * margin
    width = texture.shape[1] - 2 * margin
    if height < MIN_VIEW_SIZE or width < MIN_VIEW_SIZE:
        raise LightFieldError(
            f"texture {texture.shape[1]}x{texture.shape[0]} too small for a shift of "
            f"{margin} px on each side"
        )

    rng = np.random.default_rng(seed)
    vv, uu = np.mgrid[0:height, 0:width]
    views = np.empty((num_s, num_t, height, width, 3), dtype=np.uint8)
    for s in range(num_s):
        for t in range(num_t):
            x = uu + margin - (ref_s - s) * disparity
            y = vv + margin - (ref_t - t) * disparity
            values, _ = sample_points(texture, x, y, mode="bilinear")
            if noise_sigma > 0:
                values = values + rng.normal(0.0, noise_sigma, size=values.shape)
            views[s, t] = np.clip(np.round(values), 0, 255).astype(np.uint8)

    d_min, d_max = d_range or default_range(disparity)
    lf = LightField(views, d_min, d_max, ref_s, ref_t)
    gt = DisparityMap(np.full((height, width), float(disparity)))
    logger.debug("synthesized %dx%d views of %dx%d at d=%s", num_s, num_t, width, height, disparity)
    return lf, gt


def write_scene(directory, lf, gt):
    """Benchmark-layout views, parameters.cfg and the ground-truth PFM."""
    directory = Path(directory)
    write_lightfield(lf, directory)
    save_disparity(directory / GT_NAME, gt)
    return directory
