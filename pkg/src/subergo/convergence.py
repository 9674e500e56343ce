"""
Distance-to-equilibrium series, log-log exponent fits and the directional
comparison against a predicted polynomial rate.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

METHODS = ("exact-truncation", "mc-fnorm", "mc-moment-gap")
CSV_COLUMNS = ("t", "value", "ci", "method")


@dataclass
class DistanceSeries:
    times: np.ndarray
    values: np.ndarray
    method: str
    ci: Optional[np.ndarray] = None
    norm: str = "1"
    floor: Optional[np.ndarray] = None  # per-point error floor (leak bound or CI)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("distances are nonnegative")
        mc = self.method != "exact-truncation"
        if mc != (self.ci is not None):
            raise ValueError("ci is required for Monte Carlo series and absent otherwise")
        if self.ci is not None:
            self.ci = np.asarray(self.ci, dtype=float)

    def error_floor(self):
        if self.floor is not None:
            return np.asarray(self.floor, dtype=float)
        if self.ci is not None:
            return self.ci
        return np.zeros_like(self.values)

    def rows(self):
        ci = self.ci if self.ci is not None else [None] * len(self.times)
        return [(float(t), float(v), None if c is None else float(c), self.method) for t, v, c in zip(self.times, self.values, ci)]

    def to_csv(self):
        lines = [",".join(CSV_COLUMNS)]
        for t, v, c, m in self.rows():
            lines.append(f"{t!r},{v!r},{'' if c is None else repr(c)},{m}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    window: tuple
    residual_rms: float
    slope_stderr: float
    points: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "window": list(self.window),
            "residual_rms": self.residual_rms,
            "slope_stderr": self.slope_stderr,
            "points": self.points,
        }


def fnorm_distance(mu, pi, f=None):
    """sum_i f(i) |mu(i) - pi(i)|; with f = 1 this is the sup - inf total variation."""
    mu = np.asarray(mu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if mu.shape != pi.shape:
        raise ValueError(f"support mismatch: {mu.shape} vs {pi.shape}")
    w = np.ones_like(mu) if f is None else np.asarray(f, dtype=float)
    if w.shape != mu.shape:
        raise ValueError("weight vector must live on the same support")
    return float(np.sum(w * np.abs(mu - pi)))


def mc_fnorm_gap(samples, pi_means, basis: Sequence[Callable], f: Optional[Callable] = None, level=0.95):
    """Lower bound max_g |mean g(samples) - pi(g)| over a finite basis with |g| <= f.

    ``pi_means`` holds pi(g) for each basis function (quadrature or exact).
    The returned half-width is a Bonferroni-corrected normal interval over
    the basis.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if len(basis) != len(pi_means) or not basis:
        raise ValueError("one reference value per basis function is required")
    z = stats.norm.ppf(1.0 - (1.0 - level) / (2.0 * len(basis)))
    best, best_hw, best_k = -1.0, 0.0, -1
    fx = None if f is None else np.asarray(f(samples), dtype=float)
    for k, (g, ref) in enumerate(zip(basis, pi_means)):
        gx = np.asarray(g(samples), dtype=float)
        bound = np.ones_like(gx) if fx is None else fx
        if np.any(np.abs(gx) > bound * (1 + 1e-12)):
            raise ValueError(f"basis function {k} violates |g| <= f on the samples")
        gap = abs(float(gx.mean()) - float(ref))
        hw = float(z * gx.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        if gap > best:
            best, best_hw, best_k = gap, hw, k
    return {"estimate": best, "half_width": best_hw, "argmax": best_k, "lower_bound": True, "n": n}


def default_window(series: DistanceSeries, burn=0.2, floor_factor=100.0):
    """Drop the first ``burn`` fraction of the time range and values under floor_factor x the error floor."""
    t = series.times
    t_lo = t[0] + burn * (t[-1] - t[0])
    keep = (t >= t_lo) & (series.values > floor_factor * series.error_floor())
    if not keep.any():
        return (t_lo, t[-1])
    return (float(t[keep][0]), float(t[keep][-1]))


def fit_exponent(series: DistanceSeries, window=None):
    """OLS of log value on log time inside ``window``; slope is the decay exponent (negative)."""
    if window is None:
        window = default_window(series)
    lo, hi = window
    sel = (series.times >= lo) & (series.times <= hi)
    t, v = series.times[sel], series.values[sel]
    if t.size < 5:
        raise ValueError(f"need at least 5 points in the fit window, got {t.size}")
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("log-log fit needs positive times and values")
    x, y = np.log(t), np.log(v)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = t.size - 2
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    return ExponentFit(float(coef[0]), float(coef[1]), (float(t[0]), float(t[-1])), math.sqrt(float(resid @ resid) / t.size), se, int(t.size))


def compare_to_prediction(fit: ExponentFit, tau, slack=0.0):
    """Directional check that the decay exponent is at least the guaranteed tau."""
    if tau <= 0:
        raise ValueError("predicted exponent must be positive")
    target = -tau + slack
    if fit.slope + 2.0 * fit.slope_stderr <= target:
        return "no-slower"
    if fit.slope - 2.0 * fit.slope_stderr > target:
        return "contradiction"
    return "inconclusive"


@dataclass
class ConvergenceReport:
    series: DistanceSeries
    fit: Optional[ExponentFit]
    tau: Optional[float]
    slack: float
    verdict: str
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "method": self.series.method,
            "norm": self.series.norm,
            "fit": None if self.fit is None else self.fit.to_dict(),
            "tau": self.tau,
            "slack": self.slack,
            "verdict": self.verdict,
            **self.extra,
        }
