"""Log-log convergence-rate fits."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)

__all__ = ["FitError", "RateFit", "fit_rate"]

OUTLIER_T = 3.0


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``log value = slope * log eps + intercept``.

    ``ci`` is a 95% jackknife (leave-one-out) interval for the slope.
    ``outliers`` holds indices, into the usable points, whose externally
    studentized residual exceeds 3 in magnitude.
    """

    slope: float
    intercept: float
    ci: tuple
    n_used: int
    excluded: tuple = ()
    outliers: tuple = ()
    loo_slopes: tuple = ()

    @property
    def ci_width(self) -> float:
        return self.ci[1] - self.ci[0]


def _ols(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef[0], coef[1]


def _studentized(x, y):
    n = x.size
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    hat = np.einsum("ij,jk,ik->i", A, np.linalg.inv(A.T @ A), A)
    sse = float(resid @ resid)
    out = np.zeros(n)
    dof = n - 3
    if dof < 1:
        return out
    scale = max(float(np.max(np.abs(y))), 1.0)
    for i in range(n):
        one_minus_h = max(1.0 - hat[i], 1e-300)
        s2 = (sse - resid[i] ** 2 / one_minus_h) / dof
        if s2 <= (1e-13 * scale) ** 2:
            out[i] = 0.0 if abs(resid[i]) <= 1e-12 * scale else np.inf
        else:
            out[i] = resid[i] / np.sqrt(s2 * one_minus_h)
    return out


def fit_rate(pairs) -> RateFit:
    """Fit a power law to ``(eps, value)`` pairs.

    Non-positive or non-finite values are dropped with a warning; fewer than
    three usable points is an error.
    """
    pairs = [(float(e), float(v)) for e, v in pairs]
    excluded = tuple(
        i for i, (e, v) in enumerate(pairs) if not (e > 0 and v > 0 and np.isfinite(v))
    )
    if excluded:
        warnings.warn(
            f"excluding {len(excluded)} non-positive or non-finite point(s) from rate fit",
            RuntimeWarning,
            stacklevel=2,
        )
    usable = [p for i, p in enumerate(pairs) if i not in excluded]
    if len(usable) < 3:
        raise FitError(f"need at least 3 usable points, got {len(usable)}")
    x = np.log([e for e, _ in usable])
    y = np.log([v for _, v in usable])
    slope, intercept = _ols(x, y)

    n = x.size
    loo = np.array([_ols(np.delete(x, i), np.delete(y, i))[0] for i in range(n)])
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    half = stats.t.ppf(0.975, n - 1) * se
    outliers = tuple(int(i) for i in np.flatnonzero(np.abs(_studentized(x, y)) > OUTLIER_T))
    if outliers:
        log.info("rate fit: points %s look like outliers", outliers)
    return RateFit(
        float(slope),
        float(intercept),
        (float(slope - half), float(slope + half)),
        n,
        excluded,
        outliers,
        tuple(float(s) for s in loo),
    )
