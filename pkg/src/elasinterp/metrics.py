"""Accuracy of an estimated disparity map against ground truth."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .imgio import INVALID


class EvaluationError(ValueError):
    pass


def _check(est, gt):
    est, gt = np.asarray(est), np.asarray(gt)
    if est.shape != gt.shape:
        raise EvaluationError(f"shape mismatch: estimate {est.shape} vs ground truth {gt.shape}")
    return est.astype(np.int64), gt.astype(np.int64)


def eq1_error(est, gt) -> float:
    """Mean relative error ``|est - gt| / gt`` over pixels where both are valid and gt > 0."""
    est, gt = _check(est, gt)
    m = (est != INVALID) & (gt != INVALID) & (gt > 0)
    n = int(m.sum())
    if n == 0:
        raise EvaluationError("no pixel has both a valid estimate and a positive ground truth")
    return float(np.sum(np.abs(est[m] - gt[m]) / gt[m]) / n)


def bad_pixel_error(est, gt, thresh: float = 1) -> float:
    """Fraction of valid-gt pixels whose estimate is missing or off by more than ``thresh``."""
    est, gt = _check(est, gt)
    m = gt != INVALID
    n = int(m.sum())
    if n == 0:
        raise EvaluationError("ground truth has no valid pixel")
    bad = (est[m] == INVALID) | (np.abs(est[m] - gt[m]) > thresh)
    return float(bad.sum() / n)


def density(est) -> float:
    est = np.asarray(est)
    return float(np.count_nonzero(est != INVALID) / est.size)


@dataclass
class ErrorReport:
    eq1_error: float
    bad_pixel_error: float
    density: float
    n_evaluated: int
    thresh: float = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in sorted(asdict(self).items()))


def evaluate(est, gt, thresh: float = 1) -> ErrorReport:
    est_i, gt_i = _check(est, gt)
    n = int(np.count_nonzero((est_i != INVALID) & (gt_i != INVALID) & (gt_i > 0)))
    return ErrorReport(
        eq1_error=eq1_error(est, gt),
        bad_pixel_error=bad_pixel_error(est, gt, thresh),
        density=density(est),
        n_evaluated=n,
        thresh=thresh,
    )
