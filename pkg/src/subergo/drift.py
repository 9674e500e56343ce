"""
Grid verification of the nested drift inequalities

    A V^eta <= -c_eta V^(eta - alpha) + b 1_C,      alpha <= eta <= 1,

and of ladders  A V_q <= -f_q + b 1_C  with  V_{q-1} <= c f_q.

The petite set C is always a sublevel set {V <= v_C}; v_C is the smallest
threshold outside of which every grid point has a strictly negative drift
ratio for every eta.  Models supply ``apply_generator(V, xs)``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .functions import TestFunction
from .paths import HittingQuery, hitting_time, simulate_paths
from .rates import RateNormMenu, tradeoff_menu

Z_ONE_SIDED_95 = 1.6448536269514722


class GeneratorUndefined(ValueError):
    """The generator cannot be applied to this V (integrability fails)."""


def default_eta_grid(alpha, k=9):
    return np.linspace(alpha, 1.0, k)


@dataclass
class DriftSpec:
    V: TestFunction
    alpha: float
    eta_grid: np.ndarray
    domain: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        eta = np.asarray(self.eta_grid, dtype=float)
        if eta.size == 0 or np.any(np.diff(eta) <= 0):
            raise ValueError("eta grid must be strictly increasing")
        if not (math.isclose(eta[0], self.alpha, rel_tol=1e-12) and math.isclose(eta[-1], 1.0, rel_tol=1e-12)):
            raise ValueError("eta grid must run from alpha to 1 inclusive")
        self.eta_grid = eta
        self.domain = np.asarray(self.domain)
        v = np.asarray(self.V(self.domain), dtype=float)
        if np.any(v < 1.0 - 1e-12):
            raise ValueError("drift functions must satisfy V >= 1 on the grid")


@dataclass
class DriftCertificate:
    verdict: str
    alpha: float
    eta_grid: np.ndarray
    c_eta: np.ndarray = None
    b: float = 0.0
    v_C: float = -math.inf
    label: str = "grid-only"
    reason: str = ""
    worst_point: object = None
    worst_eta: Optional[float] = None
    menu: Optional[RateNormMenu] = None
    ratios: Optional[np.ndarray] = field(default=None, repr=False)
    domain: Optional[np.ndarray] = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict == "certified"

    def in_C(self):
        """Boolean mask of grid points inside the petite set."""
        return self.extra.get("in_C")

    def to_dict(self):
        d = {
            "verdict": self.verdict,
            "label": self.label,
            "reason": self.reason,
            "alpha": self.alpha,
            "eta_grid": [float(e) for e in self.eta_grid],
            "c_eta": None if self.c_eta is None else [float(c) for c in self.c_eta],
            "b": float(self.b),
            "v_C": float(self.v_C),
            "worst_point": _jsonable(self.worst_point),
            "worst_eta": self.worst_eta,
            "menu": None if self.menu is None else self.menu.to_dict(),
        }
        for k, v in self.extra.items():
            if k != "in_C":
                d[k] = _jsonable(v)
        return d


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _split(bad, v):
    """Sublevel threshold excluding every bad point, or None if nothing remains outside."""
    v_C = float(v[bad].max()) if bad.any() else -math.inf
    outside = v > v_C
    return v_C, outside


def verify(model, spec: DriftSpec, tail_check: Optional[Callable] = None, generator: Optional[Callable] = None):
    """Certify the nested drift family on ``spec.domain``.

    ``tail_check(cert) -> (ok, note)`` extends a grid certificate with an
    analytic statement about states beyond the grid.
    """
    gen = generator or model.apply_generator
    x = spec.domain
    v = np.asarray(spec.V(x), dtype=float)
    etas = spec.eta_grid
    ratios = np.empty((etas.size, v.size))
    drifts = np.empty_like(ratios)
    try:
        for k, eta in enumerate(etas):
            av = np.asarray(gen(spec.V.power(eta), x), dtype=float)
            drifts[k] = av
            ratios[k] = av / v ** (eta - spec.alpha)
    except GeneratorUndefined as err:
        return DriftCertificate("refused", spec.alpha, etas, reason=str(err), domain=x)
    if not np.all(np.isfinite(ratios)):
        return DriftCertificate("refused", spec.alpha, etas, reason="generator not finite on the grid", domain=x)

    bad = (ratios >= 0).any(axis=0)
    v_C, outside = _split(bad, v)
    menu = tradeoff_menu(spec.alpha)
    if not outside.any():
        # every candidate set swallows the whole grid
        top = np.flatnonzero(bad)[np.argmax(v[bad])]
        k = int(np.argmax(ratios[:, top]))
        return DriftCertificate(
            "not-certified",
            spec.alpha,
            etas,
            v_C=v_C,
            reason="no sublevel set leaves a grid point with negative drift",
            worst_point=x[top],
            worst_eta=float(etas[k]),
            ratios=ratios,
            domain=x,
        )
    c_eta = -ratios[:, outside].max(axis=1)
    in_C = ~outside
    b = float(np.maximum(drifts[:, in_C], 0.0).max()) if in_C.any() else 0.0
    arg = np.flatnonzero(outside)[np.argmax(ratios[:, outside], axis=1)]
    cert = DriftCertificate(
        "certified",
        spec.alpha,
        etas,
        c_eta=c_eta,
        b=b,
        v_C=v_C,
        menu=menu,
        ratios=ratios,
        domain=x,
        extra={"in_C": in_C, "c_attained_at": x[arg], "C_grid_points": int(in_C.sum())},
    )
    if tail_check is not None:
        ok, note = tail_check(cert)
        cert.extra["tail"] = note
        if ok:
            cert.label = "grid+tail-lemma"
        else:
            cert.verdict = "not-certified"
            cert.reason = f"tail check failed: {note}"
    return cert


@dataclass
class NestedSpec:
    """Ladder (V_q, f_q), q = 1..p, with 1 <= V_{q-1} <= c f_q and V_0 = 1.

    ``hit_beta`` is the exponent in the hitting-moment floor
    E_x[tau_C^beta] <= f_1(x).
    """

    rungs: Sequence  # of (TestFunction V_q, callable f_q)
    hit_beta: float
    domain: np.ndarray

    def __post_init__(self):
        if not self.rungs:
            raise ValueError("a ladder needs at least one rung")
        if self.hit_beta <= 0:
            raise ValueError("hitting-moment exponent must be positive")
        self.domain = np.asarray(self.domain)
        self.ladder_constants = []
        prev = np.ones(self.domain.shape, dtype=float)
        for q, (V, f) in enumerate(self.rungs, start=1):
            fq = np.asarray(f(self.domain), dtype=float)
            if np.any(fq <= 0):
                raise ValueError(f"f_{q} must be positive on the grid")
            c = float(np.max(prev / fq))
            self.ladder_constants.append(c)
            prev = np.asarray(V(self.domain), dtype=float)
            if np.any(prev < 1.0 - 1e-12):
                raise ValueError(f"V_{q} must be >= 1 on the grid")

    @property
    def p(self):
        return len(self.rungs)


@dataclass
class NestedCertificate:
    verdict: str
    rung_verdicts: list
    v_C: float
    b: float
    ladder_constants: list
    failing_rung: Optional[int]
    predictions: list
    hitting_check: list
    warnings: list

    def to_dict(self):
        return _jsonable(
            {
                "verdict": self.verdict,
                "rung_verdicts": self.rung_verdicts,
                "v_C": self.v_C,
                "b": self.b,
                "ladder_constants": self.ladder_constants,
                "failing_rung": self.failing_rung,
                "predictions": self.predictions,
                "hitting_check": self.hitting_check,
                "warnings": self.warnings,
            }
        )


def nested_predictions(p, hit_beta, etas=np.linspace(0.0, 1.0, 5)):
    return [
        {"eta": float(eta), "rate_exponent": float((p - 1 + hit_beta) * eta), "norm": f"f_*^{1 - eta:g}"}
        for eta in etas
    ]


def verify_nested(model, spec: NestedSpec, delta=0.0, mc_points=(), n_mc=0, horizon=None, seed=0, generator=None):
    """Check every rung on the grid with one common sublevel set of V_p.

    The Monte Carlo test of the hitting-moment floor at ``mc_points`` is a
    one-sided 95% check; a violation produces a warning, never a refusal.
    """
    gen = generator or model.apply_generator
    x = spec.domain
    Vp = np.asarray(spec.rungs[-1][0](x), dtype=float)
    residuals = []
    try:
        for V, f in spec.rungs:
            residuals.append(np.asarray(gen(V, x), dtype=float) + np.asarray(f(x), dtype=float))
    except GeneratorUndefined as err:
        return NestedCertificate("refused", [], math.nan, math.nan, spec.ladder_constants, None, [], [], [str(err)])
    residuals = np.array(residuals)
    bad = (residuals > 0).any(axis=0)
    v_C, outside = _split(bad, Vp)
    rung_ok = [bool(not (residuals[q][outside] > 0).any()) for q in range(spec.p)]
    failing = None
    verdict = "certified"
    if not outside.any():
        verdict = "not-certified"
        top = np.flatnonzero(bad)[np.argmax(Vp[bad])]
        failing = int(np.flatnonzero(residuals[:, top] > 0)[0]) + 1
        rung_ok = [bool(residuals[q][top] <= 0) for q in range(spec.p)]
    b = float(np.maximum(residuals[:, ~outside], 0).max()) if (~outside).any() else 0.0

    checks, warnings = [], []
    if n_mc and outside.any():
        C = _SublevelSet(spec.rungs[-1][0], v_C)
        q = HittingQuery(C, delta)
        f1 = spec.rungs[0][1]
        for j, x0 in enumerate(mc_points):
            T = horizon if horizon is not None else 1e4
            paths = simulate_paths(model, x0, T, seed + j, np.arange(n_mc), stop=q)
            taus = np.array([hitting_time(pth, q) for pth in paths])
            taus = np.where(np.isfinite(taus), taus, T)
            m = taus**spec.hit_beta
            mean = float(m.mean())
            lcb = mean - Z_ONE_SIDED_95 * float(m.std(ddof=1)) / math.sqrt(m.size)
            floor = float(np.asarray(f1(np.asarray([x0])), dtype=float)[0])
            ok = lcb <= floor
            checks.append({"x": x0, "moment": mean, "lower_95": lcb, "f1": floor, "ok": ok})
            if not ok:
                warnings.append(f"E_x[tau_C^{spec.hit_beta:g}] exceeds f_1 at x={x0} (one-sided 95%)")
    return NestedCertificate(
        verdict,
        rung_ok,
        v_C,
        b,
        spec.ladder_constants,
        failing,
        nested_predictions(spec.p, spec.hit_beta),
        checks,
        warnings,
    )


class _SublevelSet:
    def __init__(self, V, level):
        self.V = V
        self.level = level

    def __call__(self, x):
        x = np.asarray(x)
        return np.asarray(self.V(np.atleast_1d(x)), dtype=float).reshape(x.shape) <= self.level
