"""
Tests for the evaluation metrics and reports.
"""

import json

import numpy as np
import pytest

from cost_volume import CostVolume
from evaluation import (
    EvalReport,
    badpix,
    evaluate,
    m_metric,
    margin_mask,
    mse,
    sampled_fraction,
    summarize,
)
from lf_core import DisparityMap


def ramp(shape=(4, 4)):
    return DisparityMap(np.linspace(-1, 1, shape[0] * shape[1]).reshape(shape))


def test_badpix_examples():
    """Test perfect, uniformly shifted and half-wrong estimates."""
    gt = ramp()
    assert badpix(gt, gt) == 0
    assert badpix(DisparityMap(gt.values + 0.08), gt) == 100
    half = gt.values.copy()
    half[:2] += 1.0
    assert badpix(DisparityMap(half), gt) == 50


def test_badpix_counts_invalid_estimates_as_bad():
    """Test that holes in the estimate are errors."""
    gt = ramp()
    values = gt.values.copy()
    values[0, :2] = np.nan
    assert badpix(DisparityMap(values), gt) == pytest.approx(12.5)


def test_badpix_is_monotone_in_threshold():
    """Test that a larger threshold never reports more bad pixels."""
    rng = np.random.default_rng(0)
    gt = DisparityMap(rng.uniform(-2, 2, size=(10, 10)))
    dm = DisparityMap(gt.values + rng.normal(0, 0.1, size=(10, 10)))
    scores = [badpix(dm, gt, threshold) for threshold in (0.01, 0.03, 0.07, 0.1, 0.5)]
    assert scores == sorted(scores, reverse=True)


def test_mse_examples():
    """Test zero error, a constant error and a loop oracle."""
    gt = ramp()
    assert mse(gt, gt) == 0
    assert mse(DisparityMap(gt.values + 0.1), gt) == pytest.approx(1.0)

    rng = np.random.default_rng(1)
    dm = DisparityMap(gt.values + rng.normal(0, 0.3, size=gt.shape))
    total = 0.0
    for v in range(4):
        for u in range(4):
            total += (dm.values[v, u] - gt.values[v, u]) ** 2
    assert mse(dm, gt) == pytest.approx(100 * total / 16)
    assert mse(dm, gt, scale=1.0) == pytest.approx(total / 16)


def test_size_mismatch():
    """Test that differently sized maps are rejected."""
    with pytest.raises(ValueError, match="size mismatch"):
        badpix(ramp((4, 4)), ramp((4, 5)))
    with pytest.raises(ValueError, match="size mismatch"):
        mse(ramp((4, 4)), ramp((5, 4)))


def test_margin_mask():
    """Test the excluded border."""
    mask = margin_mask((6, 8), 2)
    assert mask.sum() == 2 * 4
    assert not mask[1].any()
    gt = ramp((6, 8))
    values = gt.values.copy()
    values[0] += 5
    assert badpix(DisparityMap(values), gt, mask=mask) == 0


def test_m_metric():
    """Test correctly computed pixels per second."""
    assert m_metric(20, 2) == 40
    assert m_metric(0, 1) == 100
    with pytest.raises(ValueError):
        m_metric(10, 0)


def test_sampled_fraction():
    """Test unbounded and lambda-bounded volumes."""
    assert sampled_fraction(CostVolume(np.zeros((4, 4, 64)), None, 4 * 4 * 64)) == 1.0
    assert sampled_fraction(CostVolume(np.zeros((4, 4, 64)), None, 4 * 4 * 5)) == pytest.approx(0.078, abs=1e-3)


def test_evaluate_report():
    """Test the report fields and serializations."""
    gt = ramp()
    report = evaluate(DisparityMap(gt.values + 0.1), gt, 2.0, sampled_fraction=0.25, scene="ramp")
    assert report.badpix_percent == 100
    assert report.mse == pytest.approx(1.0)
    assert report.m_metric == 0
    data = json.loads(report.to_json())
    assert data["sampled_fraction"] == 0.25
    assert data["scene"] == "ramp"
    text = report.to_text()
    assert "badpix_percent=100.000000" in text
    assert "runtime_seconds=2.000000" in text
    assert "end_to_end_seconds" not in text


def test_report_validation():
    """Test out-of-range report values."""
    with pytest.raises(ValueError):
        EvalReport(badpix_percent=120, mse=0, runtime_seconds=1, m_metric=0)
    with pytest.raises(ValueError):
        EvalReport(badpix_percent=10, mse=0, runtime_seconds=0, m_metric=0)


def test_summarize():
    """Test per-metric medians and averages over scenes."""
    reports = [
        EvalReport(badpix_percent=b, mse=1.0, runtime_seconds=r, m_metric=m_metric(b, r))
        for b, r in [(10, 1.0), (20, 2.0), (60, 4.0)]
    ]
    summary = summarize(reports)
    assert summary["badpix_percent"]["median"] == 20
    assert summary["badpix_percent"]["average"] == pytest.approx(30)
    assert summary["m_metric"]["median"] == 40
    with pytest.raises(ValueError):
        summarize([])
