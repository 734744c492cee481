"""Accuracy statistics against a truth field and the two-sample variance ratio."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .scene import HeightField


@dataclass(frozen=True)
class AccuracyReport:
    mean_error: float
    rmse: float
    std: float
    coverage: float
    histogram: tuple
    count: int = 0
    offset: float = 0.0

    def __post_init__(self):
        if not 0 <= self.coverage <= 1:
            raise ValueError("coverage must lie in [0, 1]")

    def to_dict(self):
        edges, counts = self.histogram
        return {"mean_error": self.mean_error, "rmse": self.rmse, "std": self.std, "coverage": self.coverage,
                "count": self.count, "offset_removed": self.offset,
                "histogram": {"edges": list(map(float, edges)), "counts": list(map(int, counts))}}


@dataclass(frozen=True)
class FTestResult:
    f0: float
    critical_value: float | None = None
    reject: bool | None = None

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")


def compare(estimate: HeightField, truth: HeightField, reference_pixel=None, remove_offset=True, bins=41):
    """Error statistics over the cells valid in both fields.

    With ``remove_offset`` the error at ``reference_pixel`` is subtracted
    first (the median error when no reference is given), so a constant
    datum shift does not count as error.
    """
    est = np.asarray(estimate.heights, dtype=float)
    tru = np.asarray(truth.heights, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"grid mismatch: estimate {est.shape} vs truth {tru.shape}")
    both = estimate.mask & truth.mask & np.isfinite(est)
    if not both.any():
        raise ValueError("estimate and truth masks do not intersect")
    err = est - tru
    offset = 0.0
    if remove_offset:
        if reference_pixel is not None:
            ref = tuple(reference_pixel)
            if not both[ref]:
                raise ValueError(f"reference pixel {ref} is not valid in both fields")
            offset = float(err[ref])
        else:
            offset = float(np.median(err[both]))
    e = err[both] - offset
    me = float(e.mean())
    std = float(e.std())
    rmse = float(np.sqrt(np.mean(e ** 2)))
    counts, edges = np.histogram(e, bins=bins)
    coverage = float(both.sum() / truth.mask.sum())
    return AccuracyReport(me, rmse, std, coverage, (edges, counts), int(both.sum()), offset)


def f_test(var1, var2, critical=None):
    """Variance ratio var1 / var2; ``critical`` is a tabulated F quantile."""
    if not var1 > 0 or not var2 > 0:
        raise ValueError("variances must be positive")
    f0 = float(var1) / float(var2)
    if critical is None:
        return FTestResult(f0)
    return FTestResult(f0, float(critical), bool(f0 > critical))


def write_histogram_csv(path, report: AccuracyReport):
    edges, counts = report.histogram
    io.write_table_csv(path, ("bin_left", "bin_right", "count"),
                       [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)])


def write_report_json(path, report: AccuracyReport, extra=None):
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    io.write_json(path, payload)
