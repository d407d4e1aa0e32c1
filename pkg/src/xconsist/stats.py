"""Correlation and regression linking text-domain significance to image-domain impact.

Implements sample Pearson correlation, its two-sided p-value under the null of
zero correlation, ordinary least squares, and the 95% mean-response confidence
band used to shade regression plots.

The p-value uses the t statistic t = r*sqrt((n-2)/(1-r^2)) with n-2 degrees of
freedom. The two-sided tail probability reduces to the regularized incomplete
beta function:

    p = I_x(df/2, 1/2)  with  x = df / (df + t^2) = 1 - r^2

which is evaluated here with the standard continued-fraction expansion
(modified Lentz algorithm, as in Numerical Recipes / DLMF 8.17.22), accurate
to ~1e-14 over the needed domain. t quantiles for the confidence band invert
the same function by bisection.

Degenerate inputs (an axis with zero variance) raise DegenerateSeriesError
rather than propagating NaN; pseudocorrection batches on an incompetent model
can be near-constant, and callers are expected to report such groups rather
than crash.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeriesError, InputError

_CF_MAX_ITER = 500
_CF_EPS = 3e-16
_CF_FPMIN = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta integral (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise InputError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise InputError(f"incomplete beta requires positive parameters, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise InputError(f"incomplete beta argument outside [0, 1]: {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the expansion on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for T ~ Student-t with df degrees of freedom."""
    if df < 1:
        raise InputError(f"degrees of freedom must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    p = regularized_incomplete_beta(df / 2.0, 0.5, x)
    return min(1.0, max(0.0, p))


def student_t_quantile(prob: float, df: int) -> float:
    """t >= 0 such that P(|T| <= t) = prob, by bisection on the tail function."""
    if not 0.0 < prob < 1.0:
        raise InputError(f"quantile probability must be in (0, 1), got {prob}")
    alpha = 1.0 - prob  # two-sided tail mass
    # I_x(df/2, 1/2) with x = df/(df+t^2) decreases from 1 at t=0 toward 0;
    # bracket the root then bisect.
    lo, hi = 0.0, 1.0
    while student_t_two_sided_p(hi, df) > alpha:
        hi *= 2.0
        if hi > 1e12:
            raise InputError(f"t quantile out of range (prob={prob}, df={df})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_two_sided_p(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PairedSeries:
    """Paired (text-significance, image-impact) observations, optionally labeled."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys):
            raise InputError(f"paired series length mismatch: {len(self.xs)} vs {len(self.ys)}")
        if self.labels is not None and len(self.labels) != len(self.xs):
            raise InputError("labels length does not match series length")
        for v in (*self.xs, *self.ys):
            if not math.isfinite(v):
                raise InputError("paired series contains a non-finite value")

    def __len__(self) -> int:
        return len(self.xs)


def _moments(series: PairedSeries) -> tuple[float, float, float, float, float]:
    xs = np.asarray(series.xs, dtype=np.float64)
    ys = np.asarray(series.ys, dtype=np.float64)
    x_mean = float(xs.mean())
    y_mean = float(ys.mean())
    dx = xs - x_mean
    dy = ys - y_mean
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    sxy = float(dx @ dy)
    return x_mean, y_mean, sxx, syy, sxy


def pearson(series: PairedSeries) -> float:
    """Sample Pearson correlation coefficient."""
    if len(series) < 3:
        raise InputError(f"pearson requires >= 3 points, got {len(series)}")
    _, _, sxx, syy, sxy = _moments(series)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeriesError("pearson is undefined: an axis has zero variance")
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def p_value(pcc: float, n: int) -> float:
    """Two-sided p-value for a Pearson coefficient from n pairs, under the
    null of zero correlation (t-test with n-2 degrees of freedom)."""
    if n < 3:
        raise InputError(f"p_value requires n >= 3, got {n}")
    if abs(pcc) > 1.0:
        raise InputError(f"|pcc| must be <= 1, got {pcc}")
    if abs(pcc) == 1.0:
        return 0.0
    if pcc == 0.0:
        return 1.0
    # x = df/(df + t^2) simplifies to 1 - r^2; evaluate directly.
    df = n - 2
    p = regularized_incomplete_beta(df / 2.0, 0.5, 1.0 - pcc * pcc)
    return min(1.0, max(0.0, p))


def linear_fit(series: PairedSeries) -> tuple[float, float]:
    """Ordinary least squares; returns (slope, intercept)."""
    if len(series) < 2:
        raise InputError(f"linear_fit requires >= 2 points, got {len(series)}")
    x_mean, y_mean, sxx, _, sxy = _moments(series)
    if sxx == 0.0:
        raise DegenerateSeriesError("linear_fit is undefined: xs are constant")
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    return slope, intercept


@dataclass(frozen=True)
class ConfidenceBand:
    """Mean-response confidence band around an OLS fit.

    Half-width at x is t_crit * resid_se * sqrt(1/n + (x - x_mean)^2 / sxx);
    it is minimized at x = x_mean (the leverage term vanishes there).
    """

    level: float
    slope: float
    intercept: float
    t_crit: float
    resid_se: float
    x_mean: float
    sxx: float
    n: int

    def center(self, x):
        return self.slope * np.asarray(x, dtype=np.float64) + self.intercept

    def half_width(self, x):
        x = np.asarray(x, dtype=np.float64)
        leverage = 1.0 / self.n + (x - self.x_mean) ** 2 / self.sxx
        return self.t_crit * self.resid_se * np.sqrt(leverage)


def regression_ci(series: PairedSeries, level: float = 0.95) -> ConfidenceBand:
    """Confidence band for the mean response of the OLS line at ``level``."""
    if not 0.0 < level < 1.0:
        raise InputError(f"confidence level must be in (0, 1), got {level}")
    if len(series) < 3:
        raise InputError(f"regression_ci requires >= 3 points, got {len(series)}")
    slope, intercept = linear_fit(series)
    x_mean, _, sxx, _, _ = _moments(series)
    xs = np.asarray(series.xs, dtype=np.float64)
    ys = np.asarray(series.ys, dtype=np.float64)
    residuals = ys - (slope * xs + intercept)
    df = len(series) - 2
    sse = float(residuals @ residuals)
    resid_se = math.sqrt(max(0.0, sse) / df)
    t_crit = student_t_quantile(level, df)
    return ConfidenceBand(
        level=level,
        slope=slope,
        intercept=intercept,
        t_crit=t_crit,
        resid_se=resid_se,
        x_mean=x_mean,
        sxx=sxx,
        n=len(series),
    )


@dataclass(frozen=True)
class FitStats:
    """Correlation and best-fit summary for one (model, language) result group."""

    model_id: str
    language: str
    pcc: float
    p_value: float
    slope_m: float
    intercept_b: float
    n_points: int
    ci_level: float
    band: ConfidenceBand


def summarize(model_id: str, language: str, results, ci_level: float = 0.95) -> FitStats:
    """FitStats over the (delta_sem, delta_xc) pairs of a result group."""
    if len(results) < 3:
        raise InputError(
            f"summarize requires >= 3 results for {model_id}/{language}, got {len(results)}"
        )
    series = PairedSeries(
        xs=tuple(r.delta_sem for r in results),
        ys=tuple(r.delta_xc for r in results),
        labels=tuple(r.concept for r in results),
    )
    r = pearson(series)
    band = regression_ci(series, ci_level)
    return FitStats(
        model_id=model_id,
        language=language,
        pcc=r,
        p_value=p_value(r, len(series)),
        slope_m=band.slope,
        intercept_b=band.intercept,
        n_points=len(series),
        ci_level=ci_level,
        band=band,
    )
