"""
Evaluation metrics: BadPix, MSE, M-metric and hypothesis-reduction accounting.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

BADPIX_THRESHOLD = 0.07
MSE_SCALE = 100.0


@dataclass
class EvalReport:
    """Metrics of one disparity map against its ground truth."""

    badpix_percent: float
    mse: float
    runtime_seconds: float
    m_metric: float
    sampled_fraction: float = 1.0
    end_to_end_seconds: float = None
    bordered_fraction: float = None
    stage_seconds: dict = field(default_factory=dict)
    scene: str = ""

    def __post_init__(self):
        if not 0 <= self.badpix_percent <= 100:
            raise ValueError(f"badpix out of range: {self.badpix_percent}")
        if self.mse < 0:
            raise ValueError(f"negative mse: {self.mse}")
        if self.runtime_seconds <= 0:
            raise ValueError(f"runtime must be positive: {self.runtime_seconds}")
        if not 0 < self.sampled_fraction <= 1:
            raise ValueError(f"sampled fraction out of range: {self.sampled_fraction}")

    def to_dict(self):
        """Field values as a plain dict."""
        return asdict(self)

    def to_json(self):
        """Indented JSON of to_dict."""
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        """One key=value line per field; stage timings as stage_<name>=seconds."""
        lines = []
        for key, value in self.to_dict().items():
            if key == "stage_seconds":
                lines.extend(f"stage_{name}={seconds:.6f}" for name, seconds in value.items())
            elif value is None or value == "":
                continue
            elif isinstance(value, float):
                lines.append(f"{key}={value:.6f}")
            else:
                lines.append(f"{key}={value}")
        return "\n".join(lines)


def margin_mask(shape, margin):
    """True everywhere except a border of `margin` pixels."""
    mask = np.zeros(shape, dtype=bool)
    height, width = shape
    if 2 * margin < height and 2 * margin < width:
        mask[margin:height - margin, margin:width - margin] = True
    return mask


def _evaluated(dm, gt, mask):
    if dm.shape != gt.shape:
        raise ValueError(f"size mismatch: estimate {dm.shape} vs ground truth {gt.shape}")
    selection = gt.valid
    if mask is not None:
        selection = selection & mask
    if not selection.any():
        raise ValueError("no pixels to evaluate")
    return dm.values[selection], gt.values[selection]


def badpix(dm, gt, threshold=BADPIX_THRESHOLD, mask=None):
    """Percentage of evaluated pixels off by more than threshold; invalid estimates are bad."""
    estimate, truth = _evaluated(dm, gt, mask)
    good = np.abs(estimate - truth) <= threshold
    return 100.0 * np.count_nonzero(~good) / good.size


def mse(dm, gt, mask=None, scale=MSE_SCALE):
    """Mean squared error times `scale` over pixels valid in both maps."""
    estimate, truth = _evaluated(dm, gt, mask)
    both = ~np.isnan(estimate)
    if not both.any():
        raise ValueError("estimate has no valid pixels to evaluate")
    diff = estimate[both] - truth[both]
    return scale * float(np.mean(diff * diff))


def m_metric(badpix_percent, runtime):
    """Correctly computed pixels (percent) per second."""
    if runtime <= 0:
        raise ValueError(f"runtime must be positive, got {runtime}")
    return (100.0 - badpix_percent) / runtime


def sampled_fraction(cv):
    """Evaluated (pixel, hypothesis) pairs over H * W * N_d."""
    height, width, count = cv.shape
    return cv.sampled_count / (height * width * count)


def evaluate(dm, gt, runtime, threshold=BADPIX_THRESHOLD, mask=None, scale=MSE_SCALE, **extra):
    """Build an EvalReport; extra fields (sampled_fraction, scene, ...) pass through."""
    bad = badpix(dm, gt, threshold, mask)
    return EvalReport(
        badpix_percent=bad,
        mse=mse(dm, gt, mask, scale),
        runtime_seconds=runtime,
        m_metric=m_metric(bad, runtime),
        **extra,
    )


def summarize(reports):
    """Median and average of each headline metric over several scenes."""
    if not reports:
        raise ValueError("nothing to summarize")
    summary = {}
    for key in ("badpix_percent", "mse", "runtime_seconds", "m_metric", "sampled_fraction"):
        values = np.array([getattr(report, key) for report in reports], dtype=np.float64)
        summary[key] = {"median": float(np.median(values)), "average": float(np.mean(values))}
    return summary
