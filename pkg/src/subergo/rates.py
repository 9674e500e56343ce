"""
Subgeometric rate functions, Young interpolation pairs and the rate/norm
trade-off menu licensed by a polynomial drift condition.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

FAMILIES = ("constant", "log-power", "polynomial-log", "subexponential")

QUAD_EPSREL = 1e-10
QUAD_MAXEVAL = 10**6


@dataclass(frozen=True)
class RateFunction:
    """A subgeometric rate normalised so that r(0) = 1.

    Families and parameters:

    * ``constant``: r = 1.
    * ``log-power`` (beta >= 0): r(t) = (log(c + t) / log c)^beta with
      c = exp(max(beta - 1, 1)); for beta >= 2 this is the shifted
      log(exp(beta - 1) + t)^beta up to a constant.
    * ``polynomial-log`` (alpha > 0, b real):
      r(t) = (1 + t)^alpha (log(c + t) / log c)^b with c = e for b >= 0 and
      c = exp(max(1, 2|b|/alpha)) for b < 0, which keeps log r concave.
    * ``subexponential`` (a > 0, 0 < beta < 1): r(t) = exp(a t^beta).

    In every family log r is concave with log r(0) = 0, which gives
    monotonicity, r >= 1, log r(t)/t nonincreasing and r(s+t) <= r(s) r(t).
    """

    family: str
    alpha: float = 0.0
    beta: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown rate family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "log-power" and self.beta < 0:
            raise ValueError("log-power rate needs beta >= 0")
        if self.family == "polynomial-log" and self.alpha <= 0:
            raise ValueError("polynomial-log rate needs alpha > 0")
        if self.family == "subexponential" and not (self.a > 0 and 0 < self.beta < 1):
            raise ValueError("subexponential rate needs a > 0 and 0 < beta < 1")

    @property
    def shift(self):
        """The constant c inside log(c + t), or None when unused."""
        if self.family == "log-power":
            return math.exp(max(self.beta - 1.0, 1.0))
        if self.family == "polynomial-log":
            if self.b >= 0:
                return math.e
            return math.exp(max(1.0, 2.0 * abs(self.b) / self.alpha))
        return None

    def log_value(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "constant":
            return np.zeros_like(t)
        if self.family == "log-power":
            c = self.shift
            return self.beta * np.log(np.log(c + t) / math.log(c))
        if self.family == "polynomial-log":
            c = self.shift
            out = self.alpha * np.log1p(t)
            if self.b != 0:
                out = out + self.b * np.log(np.log(c + t) / math.log(c))
            return out
        return self.a * t**self.beta

    def __call__(self, t):
        return np.exp(self.log_value(t))

    def describe(self):
        if self.family == "constant":
            return "1"
        if self.family == "log-power":
            return f"log(c+t)^{self.beta:g}"
        if self.family == "polynomial-log":
            s = f"(1+t)^{self.alpha:g}"
            return s + (f" log(c+t)^{self.b:g}" if self.b else "")
        return f"exp({self.a:g} t^{self.beta:g})"

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta, "a": self.a, "b": self.b}


def constant_rate():
    return RateFunction("constant")


def polynomial_rate(alpha, b=0.0):
    if alpha == 0 and b == 0:
        return constant_rate()
    if alpha == 0:
        return RateFunction("log-power", beta=b)
    return RateFunction("polynomial-log", alpha=alpha, b=b)


def rate_from_dict(spec):
    spec = dict(spec)
    family = spec.pop("family")
    return RateFunction(family, **{k: float(v) for k, v in spec.items()})


def eval_rate(r: RateFunction, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("rate functions are defined on t >= 0")
    return r(t)


def cumulative_rate(r: RateFunction, t):
    """r0(t) = integral of r over [0, t]."""
    if t < 0:
        raise ValueError("cumulative_rate needs t >= 0")
    if t == 0:
        return 0.0
    if r.family == "constant":
        return float(t)
    if r.family == "polynomial-log" and r.b == 0:
        p = r.alpha + 1.0
        return math.expm1(p * math.log1p(t)) / p
    return _quad_rate(r, 0.0, float(t))


def _quad_rate(r, lo, hi):
    # Splitting at powers of 2 keeps each QUADPACK call well conditioned for
    # rapidly growing integrands.
    edges = [lo]
    x = max(lo, 1.0)
    while x < hi:
        if x > lo:
            edges.append(x)
        x *= 2.0
    edges.append(hi)
    total = 0.0
    limit = max(50, QUAD_MAXEVAL // (21 * len(edges)))
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda s: float(r(s)), a, b, epsrel=QUAD_EPSREL, epsabs=0.0, limit=limit)
        total += val
    return total


@dataclass(frozen=True)
class YoungPair:
    """Nondecreasing pair with psi1(x) psi2(y) <= x + y on [1, inf)^2."""

    tag: str
    p: float
    psi1: Callable = field(repr=False, compare=False)
    psi2: Callable = field(repr=False, compare=False)


def make_young_pair(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Young pair parameter p must lie in [0, 1], got {p}")
    if p == 1.0:
        return YoungPair("identity-edge", 1.0, lambda x: np.asarray(x, dtype=float), np.ones_like)
    if p == 0.0:
        return YoungPair("one-edge", 0.0, np.ones_like, lambda y: np.asarray(y, dtype=float))
    q = 1.0 - p

    def _pow(x, w):
        # (x / w)^w in log space so tiny weights do not overflow x / w
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp(w * (np.log(x) - math.log(w)))

    return YoungPair("power-pair", p, lambda x: _pow(x, p), lambda y: _pow(y, q))


@dataclass(frozen=True)
class MenuEntry:
    """Convergence at rate ``rate_kind(rate_exponent) * log(t)^log_power`` in
    the norm ``base^norm_exponent * log(base)^norm_log_power``."""

    rate_exponent: float
    log_power: float
    norm_exponent: float
    norm_log_power: float
    p: Optional[float] = None
    kappa: Optional[float] = None
    rate_kind: str = "polynomial"
    base: str = "V"

    def rate(self):
        if self.rate_kind == "polynomial":
            return polynomial_rate(self.rate_exponent, self.log_power)
        if self.rate_kind == "log":
            return RateFunction("log-power", beta=self.rate_exponent) if self.rate_exponent else constant_rate()
        if self.rate_kind == "subexponential":
            if self.rate_exponent == 0:
                return constant_rate()
            return RateFunction("subexponential", a=self.rate_exponent, beta=0.5)
        raise ValueError(self.rate_kind)

    def to_dict(self):
        return {
            "rate_kind": self.rate_kind,
            "rate_exponent": self.rate_exponent,
            "log_power": self.log_power,
            "norm_base": self.base,
            "norm_exponent": self.norm_exponent,
            "norm_log_power": self.norm_log_power,
            "p": self.p,
            "kappa": self.kappa,
        }


@dataclass(frozen=True)
class RateNormMenu:
    alpha: Optional[float]
    entries: tuple
    reason: str = ""

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self):
        return {"alpha": self.alpha, "reason": self.reason, "entries": [e.to_dict() for e in self.entries]}


def admissible_pb(p, b):
    if 0.0 < p < 1.0:
        return True
    if p == 1.0:
        return b >= 0
    if p == 0.0:
        return b <= 0
    return False


def tradeoff_menu(alpha, p_grid=(0.0, 0.25, 0.5, 0.75, 1.0), b_grid=(0.0,), kappa_grid=None):
    """Rate/norm pairs (1+t)^((1-p)(1-a)/a) log(t)^b in V^((1-a)p) log(V)^-b.

    Also appends the kappa parameterisation: for 1 <= kappa <= 1/alpha the
    choice p = (1 - kappa alpha)/(1 - alpha), b = 0 gives rate (1+t)^(kappa-1)
    in the V^(1 - kappa alpha) norm.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    entries = []
    for p in p_grid:
        for b in b_grid:
            if not admissible_pb(p, b):
                raise ValueError(f"inadmissible (p, b) = ({p}, {b})")
            if alpha == 1.0:
                entries.append(MenuEntry(0.0, 0.0, 0.0, 0.0, p=p))
                continue
            entries.append(
                MenuEntry(
                    rate_exponent=(1.0 - p) * (1.0 - alpha) / alpha,
                    log_power=b,
                    norm_exponent=(1.0 - alpha) * p,
                    norm_log_power=-b,
                    p=p,
                )
            )
    if alpha == 1.0:
        entries.append(MenuEntry(0.0, 0.0, 0.0, 0.0, p=None, kappa=1.0))
    else:
        if kappa_grid is None:
            kappa_grid = np.linspace(1.0, 1.0 / alpha, 5)
        for kappa in kappa_grid:
            if not 1.0 <= kappa <= 1.0 / alpha * (1 + 1e-12):
                raise ValueError(f"kappa must lie in [1, 1/alpha], got {kappa}")
            entries.append(kappa_entry(alpha, kappa))
    return RateNormMenu(alpha, tuple(entries))


def kappa_entry(alpha, kappa):
    p = (1.0 - kappa * alpha) / (1.0 - alpha)
    return MenuEntry(
        rate_exponent=(1.0 - p) * (1.0 - alpha) / alpha,
        log_power=0.0,
        norm_exponent=(1.0 - alpha) * p,
        norm_log_power=0.0,
        p=p,
        kappa=kappa,
    )
