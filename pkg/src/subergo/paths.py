"""
Trajectories, delayed hitting times and Monte Carlo estimates of modulated
moments  E_x[ int_0^{tau_C(delta)} r(s) f(X_s) ds ].

A :class:`Path` is a right-continuous concatenation of segments.  Three
segment kinds cover every simulator in the package: piecewise-constant
states (jump processes), exponential decay between jumps (shot-noise /
storage processes) and dense grids (SDE integrators, linearly interpolated).
"""

import math
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .rates import RateFunction, constant_rate, cumulative_rate
from .rng import TAG_MAIN, TAG_PILOT

HORIZON_EXCEEDED = math.inf

Z95 = 1.959963984540054
SIMPSON_REL_STEP = 1e-3
_BISECT_ITERS = 60


# --------------------------------------------------------------------------
# sets


class Interval:
    """Closed interval [lo, hi] of the real line."""

    def __init__(self, lo=-math.inf, hi=math.inf):
        if lo > hi:
            raise ValueError("empty interval")
        self.lo = float(lo)
        self.hi = float(hi)

    def __call__(self, x):
        x = np.asarray(x)
        return (x >= self.lo) & (x <= self.hi)

    def __repr__(self):
        return f"Interval({self.lo:g}, {self.hi:g})"


class Singleton:
    """The one-point set {value}; states compared exactly."""

    def __init__(self, value):
        self.value = value

    def __call__(self, x):
        return np.asarray(x) == self.value

    def __repr__(self):
        return f"Singleton({self.value!r})"


class Ball:
    """Closed Euclidean ball {|x| <= radius} centred at the origin."""

    def __init__(self, radius):
        self.radius = float(radius)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return abs(x) <= self.radius
        return np.linalg.norm(np.atleast_2d(x), axis=-1).reshape(x.shape[:-1]) <= self.radius

    def __repr__(self):
        return f"Ball({self.radius:g})"


# --------------------------------------------------------------------------
# segments


@dataclass(frozen=True)
class ConstantSegment:
    start: float
    end: float
    state: object

    kind = "piecewise-constant"

    def at(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, self.state, dtype=float) if t.ndim else self.state

    def first_entry(self, C, lo, closed_end):
        if not bool(C(self.state)):
            return None
        t = max(self.start, lo)
        if t < self.end or (closed_end and t <= self.end):
            return t
        return None


@dataclass(frozen=True)
class DecaySegment:
    """x(t) = x0 exp(-mu (t - start))."""

    start: float
    end: float
    x0: float
    mu: float

    kind = "exponential-decay"

    def at(self, t):
        return self.x0 * np.exp(-self.mu * (np.asarray(t, dtype=float) - self.start))

    def _window(self, C):
        """Times s >= 0 (since start) with x(s) in C, as (s_lo, s_hi) or None."""
        x0, mu = self.x0, self.mu
        if isinstance(C, Interval):
            lo, hi = C.lo, C.hi
            if mu == 0.0 or x0 == 0.0:
                return (0.0, math.inf) if lo <= x0 <= hi else None
            # x(s) is monotone in s and tends to 0; solve the two level crossings
            if x0 > 0:
                if lo > x0 or hi <= 0:
                    return None
                s_in = 0.0 if x0 <= hi else math.log(x0 / hi) / mu
                s_out = math.inf if lo <= 0 else math.log(x0 / lo) / mu
            else:
                if hi < x0 or lo >= 0:
                    return None
                s_in = 0.0 if x0 >= lo else math.log(x0 / lo) / mu
                s_out = math.inf if hi >= 0 else math.log(x0 / hi) / mu
            return (s_in, s_out) if s_in <= s_out else None
        return "scan"

    def first_entry(self, C, lo, closed_end):
        a = max(self.start, lo)
        if a > self.end:
            return None
        win = self._window(C)
        if win is None:
            return None
        if win == "scan":
            return _scan_entry(self, C, a, self.end, closed_end)
        t = max(a, self.start + win[0])
        if t > self.start + win[1]:
            return None
        if t < self.end or (closed_end and t <= self.end):
            return t
        return None


@dataclass(frozen=True)
class GridSegment:
    """Linear interpolation of ``points`` recorded at ``times``."""

    start: float
    end: float
    times: np.ndarray
    points: np.ndarray

    kind = "dense-grid"

    def at(self, t):
        t = np.asarray(t, dtype=float)
        if self.points.ndim == 1:
            return np.interp(t, self.times, self.points)
        cols = [np.interp(t, self.times, self.points[:, j]) for j in range(self.points.shape[1])]
        return np.stack(cols, axis=-1)

    def first_entry(self, C, lo, closed_end):
        a = max(self.start, lo)
        if a > self.end:
            return None
        if bool(C(self.at(a))):
            return a
        k0 = int(np.searchsorted(self.times, a, side="right"))
        if k0 >= len(self.times):
            return None
        inside = np.asarray(C(self.points[k0:]), dtype=bool)
        if inside.ndim > 1:
            inside = inside.all(axis=-1)
        hits = np.flatnonzero(inside)
        if hits.size == 0:
            return None
        k = k0 + int(hits[0])
        left = max(a, self.times[k - 1])
        t = _bisect(self, C, left, self.times[k])
        if t < self.end or (closed_end and t <= self.end):
            return t
        return None


def _bisect(seg, C, outside, inside):
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (outside + inside)
        if mid <= outside or mid >= inside:
            break
        if bool(C(seg.at(mid))):
            inside = mid
        else:
            outside = mid
    return inside


def _scan_entry(seg, C, a, b, closed_end, n=1000):
    if bool(C(seg.at(a))):
        return a
    ts = np.linspace(a, b, n + 1)
    inside = np.asarray([bool(C(seg.at(t))) for t in ts])
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        return None
    k = int(hits[0])
    t = _bisect(seg, C, ts[k - 1], ts[k])
    if t < b or (closed_end and t <= b):
        return t
    return None


# --------------------------------------------------------------------------
# paths


class Path:
    """Right-continuous trajectory on [0, horizon] made of contiguous segments."""

    def __init__(self, segments: Sequence, dimension: int = 1):
        if not segments:
            raise ValueError("a path needs at least one segment")
        if segments[0].start != 0.0:
            raise ValueError("paths start at time 0")
        for s, nxt in zip(segments[:-1], segments[1:]):
            if s.end != nxt.start:
                raise ValueError(f"segments not contiguous at {s.end} / {nxt.start}")
        for s in segments:
            if s.end < s.start:
                raise ValueError("segment with negative length")
        self.segments = list(segments)
        self.dimension = dimension
        self._starts = [s.start for s in self.segments]

    @property
    def horizon(self):
        return self.segments[-1].end

    def _segment_index(self, t):
        if t < 0 or t > self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        k = bisect_right(self._starts, t) - 1
        # skip zero-length segments so that the value at a jump time is the post-jump state
        while k + 1 < len(self.segments) and self.segments[k].end <= t and self.segments[k + 1].start <= t:
            k += 1
        return min(k, len(self.segments) - 1)

    def __call__(self, t):
        return self.segments[self._segment_index(float(t))].at(float(t))

    def values(self, ts):
        return [self(t) for t in ts]

    def jump_times(self):
        return [s.start for s in self.segments[1:]]

    def __eq__(self, other):
        if not isinstance(other, Path) or len(self.segments) != len(other.segments):
            return False
        for a, b in zip(self.segments, other.segments):
            if type(a) is not type(b) or a.start != b.start or a.end != b.end:
                return False
            if isinstance(a, GridSegment):
                if not (np.array_equal(a.times, b.times) and np.array_equal(a.points, b.points)):
                    return False
            elif a != b:
                return False
        return True

    def __repr__(self):
        return f"Path({len(self.segments)} segments, horizon={self.horizon:g})"


@dataclass(frozen=True)
class HittingQuery:
    """tau_C(delay) = inf{t >= delay : X_t in C}."""

    C: Callable
    delay: float = 0.0

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("hitting delay must be nonnegative")


def hitting_time(path: Path, q: HittingQuery):
    """First entry time into ``q.C`` at or after ``q.delay``; ``HORIZON_EXCEEDED`` if none by the horizon."""
    if path.horizon < q.delay:
        raise ValueError(f"path horizon {path.horizon} is shorter than the delay {q.delay}")
    last = len(path.segments) - 1
    for k, seg in enumerate(path.segments):
        if seg.end < q.delay or (seg.end == q.delay and k < last and seg.end > seg.start):
            continue
        t = seg.first_entry(q.C, q.delay, closed_end=(k == last))
        if t is not None:
            return t
    return HORIZON_EXCEEDED


def _simpson(g, a, b, h_max):
    if b <= a:
        return 0.0
    m = max(2, int(math.ceil((b - a) / h_max)))
    m += m % 2
    s = np.linspace(a, b, m + 1)
    y = np.asarray(g(s), dtype=float)
    h = (b - a) / m
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def path_integral(path: Path, f: Callable, r: Optional[RateFunction] = None, upto=None, start=0.0):
    """int_start^upto r(s) f(X_s) ds.

    Piecewise-constant pieces are integrated exactly through the cumulative
    rate; other pieces use composite Simpson with step <= 1e-3 * upto.
    ``f`` must accept arrays of states.
    """
    r = r or constant_rate()
    upto = path.horizon if upto is None else float(upto)
    if upto > path.horizon * (1 + 1e-15) or start < 0 or start > upto:
        raise ValueError(f"integration window [{start}, {upto}] not inside [0, {path.horizon}]")
    if upto == start:
        return 0.0
    h_max = SIMPSON_REL_STEP * upto
    total = 0.0
    for seg in path.segments:
        a, b = max(seg.start, start), min(seg.end, upto)
        if b <= a:
            if seg.start >= upto:
                break
            continue
        if isinstance(seg, ConstantSegment):
            fx = float(np.asarray(f(np.asarray([seg.state])), dtype=float)[0])
            if fx != 0.0:
                total += fx * (cumulative_rate(r, b) - cumulative_rate(r, a))
        else:
            total += _simpson(lambda s, seg=seg: r(s) * np.asarray(f(seg.at(s)), dtype=float), a, b, h_max)
    return total


# --------------------------------------------------------------------------
# models and Monte Carlo


class ProcessModel(Protocol):
    def simulate(self, x0, horizon, seed, trajectory=0, tag=TAG_MAIN) -> Path: ...

    def apply_generator(self, V, xs) -> np.ndarray: ...


def simulate_paths(model, x0, horizon, seed, trajectories, tag=TAG_MAIN, stop=None):
    """Paths for the given trajectory indices.

    With ``stop`` (a :class:`HittingQuery`) each path ends at its hitting
    time, which is all a moment estimate needs.
    """
    kw = {"tag": tag} if stop is None else {"tag": tag, "stop": stop}
    if hasattr(model, "simulate_paths"):
        return model.simulate_paths(x0, horizon, seed, trajectories, **kw)
    return [model.simulate(x0, horizon, seed, trajectory=int(i), **kw) for i in trajectories]


def stop_at(seg, stop):
    """``seg`` cut at the first entry time of ``stop``, or None if it is not entered."""
    if stop is None or seg.end < stop.delay:
        return None
    t = seg.first_entry(stop.C, stop.delay, closed_end=True)
    if t is None:
        return None
    return replace(seg, end=t)


def thread_count():
    try:
        return max(1, int(os.environ.get("SUBERGO_THREADS", "1")))
    except ValueError:
        return 1


def map_trajectories(fn, n, chunk=2048):
    """Apply ``fn(indices) -> array`` over trajectory chunks; results in index order."""
    chunks = [np.arange(i, min(n, i + chunk)) for i in range(0, n, chunk)]
    workers = thread_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    half_width: float
    samples: int
    truncated: int
    horizon: float

    @property
    def lower_bound(self):
        """True when some paths hit the horizon first, so the mean underestimates."""
        return self.truncated > 0

    def to_dict(self):
        return {
            "mean": self.mean,
            "half_width": self.half_width,
            "samples": self.samples,
            "truncated": self.truncated,
            "horizon": self.horizon,
            "lower_bound": self.lower_bound,
        }


def mean_ci(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean())
    hw = float(Z95 * values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, hw


def pilot_horizon(model, x, q, seed, n_pilot=100, start=None, cap=1e6):
    """10x the median hitting time of a short pilot run (own RNG stream)."""
    T = max(10.0 * q.delay, 10.0) if start is None else float(start)
    while True:
        paths = simulate_paths(model, x, T, seed, np.arange(n_pilot), tag=TAG_PILOT, stop=q)
        taus = np.array([hitting_time(p, q) for p in paths])
        if np.mean(np.isfinite(taus)) > 0.5 or T >= cap:
            med = float(np.median(taus))
            if not math.isfinite(med):
                return cap
            return max(10.0 * med, q.delay, 1e-9)
        T *= 4.0


def estimate_modulated_moment(model, x, f, r, q: HittingQuery, n, horizon=None, seed=0):
    """Monte Carlo estimate of G_C(x, f, r; delay) from ``n`` independent paths."""
    if n < 1:
        raise ValueError("need at least one sample path")
    r = r or constant_rate()
    if horizon is None:
        horizon = pilot_horizon(model, x, q, seed)
    if horizon < q.delay:
        raise ValueError("horizon shorter than the hitting delay")

    def chunk(idx):
        out = np.empty((idx.size, 2))
        for j, path in enumerate(simulate_paths(model, x, horizon, seed, idx, stop=q)):
            tau = hitting_time(path, q)
            hit = math.isfinite(tau)
            out[j, 0] = path_integral(path, f, r, tau if hit else horizon)
            out[j, 1] = 0.0 if hit else 1.0
        return out

    res = map_trajectories(chunk, n).reshape(n, 2)
    mean, hw = mean_ci(res[:, 0])
    return MomentEstimate(mean, hw if n > 1 else 0.0, n, int(res[:, 1].sum()), float(horizon))


@dataclass(frozen=True)
class Ensemble:
    times: np.ndarray
    samples: np.ndarray  # (n, len(times)) or (n, len(times), dim)

    def mean(self, f=None):
        vals = self.samples if f is None else np.asarray(f(self.samples), dtype=float)
        return vals.mean(axis=0)

    def ci(self, f=None):
        vals = self.samples if f is None else np.asarray(f(self.samples), dtype=float)
        return Z95 * vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])


def ensemble_snapshot(model, x, times, n, seed=0, tag=TAG_MAIN):
    """n independent trajectories from x observed at each time of ``times``."""
    times = np.asarray(times, dtype=float)
    if n < 1:
        raise ValueError("need at least one trajectory")
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("observation times must be nonnegative and increasing")
    if hasattr(model, "sample_at"):
        return Ensemble(times, model.sample_at(x, times, seed, np.arange(n), tag=tag))
    horizon = float(times[-1]) if times[-1] > 0 else 1.0

    def chunk(idx):
        paths = simulate_paths(model, x, horizon, seed, idx, tag=tag)
        return np.array([[np.asarray(p(t)) for t in times] for p in paths], dtype=float)

    parts = [chunk(np.arange(i, min(n, i + 2048))) for i in range(0, n, 2048)]
    return Ensemble(times, np.concatenate(parts))
