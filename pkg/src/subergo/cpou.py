"""
Ornstein-Uhlenbeck process driven by a compound Poisson subordinator,

    dX = -mu X dt + dZ,   Z_t = W_1 + ... + W_{N_t},  N ~ Poisson(lambda),

with very heavy-tailed jump laws.  Most analytic work happens on the log
scale: T = log W has law G, and the two heavy families have simple G tails.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import drift as drift_mod
from .functions import TestFunction
from .paths import DecaySegment, Path, stop_at
from .rates import polynomial_rate
from .rng import TAG_MAIN, Stream

_EXP_MAX = 709.0


def _safe_exp(t):
    return math.exp(t) if t < _EXP_MAX else math.inf


@dataclass(frozen=True)
class JumpLaw:
    """Jump-size law F.

    point-mass: W = u0.
    pareto-log: density (k-1)/(x (log x)^k) on [e, inf), k > 1; log W - 1 is Pareto.
    log-weibull: density exp(-(log x)^beta)/(x Gamma(1 + 1/beta)) on [1, inf).
    """

    family: str
    u0: float = 1.0
    k: float = 3.0
    beta: float = 0.5

    def __post_init__(self):
        if self.family == "point-mass" and self.u0 <= 0:
            raise ValueError("point mass must sit at a positive jump size")
        elif self.family == "pareto-log" and self.k <= 1:
            raise ValueError("pareto-log needs k > 1 to be a probability law")
        elif self.family == "log-weibull" and self.beta <= 0:
            raise ValueError("log-weibull needs beta > 0")
        elif self.family not in ("point-mass", "pareto-log", "log-weibull"):
            raise ValueError(f"unknown jump law {self.family!r}")

    # log scale

    def log_tail(self, s):
        """G-tail P(log W > s) = F-tail at e^s."""
        s = float(s)
        if self.family == "point-mass":
            return 1.0 if s < math.log(self.u0) else 0.0
        if self.family == "pareto-log":
            return 1.0 if s <= 1.0 else s ** (1.0 - self.k)
        if s <= 0:
            return 1.0
        return float(special.gammaincc(1.0 / self.beta, s**self.beta))

    def tail(self, x):
        """P(W > x)."""
        if x <= 0:
            return 1.0
        return self.log_tail(math.log(x))

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def log_density(self, t):
        """Density of T = log W (continuous families)."""
        t = np.asarray(t, dtype=float)
        if self.family == "pareto-log":
            safe = np.where(t >= 1.0, t, 1.0)
            return np.where(t >= 1.0, (self.k - 1.0) * safe ** (-self.k), 0.0)
        if self.family == "log-weibull":
            safe = np.where(t >= 0.0, t, 0.0)
            return np.where(t >= 0.0, np.exp(-(safe**self.beta)) / special.gamma(1.0 + 1.0 / self.beta), 0.0)
        raise ValueError("point mass has no density")

    @property
    def log_support_lo(self):
        return {"pareto-log": 1.0, "log-weibull": 0.0}.get(self.family)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(x > 0, self.log_density(np.log(safe)) / safe, 0.0)

    def sample_log(self, u):
        """Inverse-CDF draw of log W from a uniform u in (0, 1)."""
        if self.family == "point-mass":
            return math.log(self.u0)
        if self.family == "pareto-log":
            return (1.0 - u) ** (-1.0 / (self.k - 1.0))
        return float(special.gammaincinv(1.0 / self.beta, u)) ** (1.0 / self.beta)

    def sample(self, u):
        """Inverse-CDF draw of W; overflows to inf beyond the double range."""
        if self.family == "point-mass":
            return self.u0
        return _safe_exp(self.sample_log(u))

    def to_dict(self):
        if self.family == "point-mass":
            return {"family": "point-mass", "u0": self.u0}
        if self.family == "pareto-log":
            return {"family": "pareto-log", "k": self.k}
        return {"family": "log-weibull", "beta": self.beta}


# --------------------------------------------------------------------------
# analytics of F


def log_moment_finite(F: JumpLaw, q):
    """Is int (log u)^q F(du) finite (q > 0)?"""
    if F.family == "pareto-log":
        return q < F.k - 1.0
    return True


def tail_moment(F: JumpLaw, r):
    """m_r = int [log(1 + u)]^r F(du)."""
    if r <= 0:
        raise ValueError("moment order r must be positive")
    if F.family == "point-mass":
        return {"finite": True, "value": math.log1p(F.u0) ** r}
    if not log_moment_finite(F, r):
        return {"finite": False, "value": math.inf, "reason": f"r = {r:g} >= k - 1 = {F.k - 1:g}"}

    def g(t):
        # log(1 + e^t) = t + log1p(e^-t)
        return (t + math.log1p(math.exp(-t))) ** r * float(F.log_density(t))

    lo = F.log_support_lo
    val = sum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-10, limit=400)[0] for a, b in ((lo, lo + 10.0), (lo + 10.0, math.inf)))
    return {"finite": True, "value": val}


def heavy_tail_classify(F: JumpLaw):
    """Strongest obstruction: positive recurrence fails if int log u F(du) = inf,
    geometric ergodicity fails if G (the log-jump law) is heavy-tailed."""
    reasons = []
    if F.family == "point-mass":
        mean_log, heavy = math.log(F.u0), False
        reasons.append("bounded jumps: every moment of G is finite")
    elif F.family == "pareto-log":
        mean_log = (F.k - 1.0) / (F.k - 2.0) if F.k > 2 else math.inf
        heavy = True
        reasons.append(f"G has Pareto tail s^-{F.k - 1:g}: E_G[e^(kappa T)] = inf for every kappa > 0")
        if F.k <= 2:
            reasons.append(f"int t G(dt) diverges since 1 - k = {1 - F.k:g} >= -1")
    else:
        mean_log = special.gamma(2.0 / F.beta) / special.gamma(1.0 / F.beta)
        heavy = F.beta < 1
        if heavy:
            reasons.append(f"exp(kappa t - t^{F.beta:g}) is not integrable for any kappa > 0")
        elif F.beta == 1:
            reasons.append("beta = 1: E_G[e^(kappa T)] finite for kappa < 1, so G is not heavy-tailed")
        else:
            reasons.append(f"beta = {F.beta:g} > 1: G has all exponential moments")
    if not math.isfinite(mean_log):
        verdict = "not-positive-recurrent"
    elif heavy:
        verdict = "not-geometric"
    else:
        verdict = "no-obstruction"
    return {
        "verdict": verdict,
        "mean_log_jump": mean_log,
        "heavy_tailed_G": heavy,
        "not_positive_recurrent": not math.isfinite(mean_log),
        "not_geometric": heavy or not math.isfinite(mean_log),
        "reasons": reasons,
    }


# --------------------------------------------------------------------------
# model


class GeneratorUndefined(drift_mod.GeneratorUndefined):
    pass


def log_lyapunov(r, shift=None):
    """V(x) = (log(shift + x))^r with shift = e^r by default, so V >= r^r >= 1 on x >= 0."""
    a = math.exp(r) if shift is None else float(shift)

    def value(x):
        return np.log(a + np.asarray(x, dtype=float)) ** r

    def grad(x):
        y = a + np.asarray(x, dtype=float)
        return r * np.log(y) ** (r - 1.0) / y

    return TestFunction(value, grad, None, float(r), f"log(x+{a:g})^{r:g}")


class CPOUModel:
    def __init__(self, mu, lam, F: JumpLaw):
        if mu <= 0:
            raise ValueError("decay rate mu must be positive")
        if lam < 0:
            raise ValueError("jump intensity lambda must be nonnegative")
        self.mu = float(mu)
        self.lam = float(lam)
        self.F = F

    def to_dict(self):
        return {"mu": self.mu, "lambda": self.lam, "jump_law": self.F.to_dict()}

    # generator

    def jump_integral(self, V, x, tol=1e-8):
        """int (V(x + u) - V(x)) F(du), with u integrated on the log scale."""
        F = self.F
        vx = float(np.asarray(V(np.asarray([x])), dtype=float)[0])
        if F.family == "point-mass":
            return float(np.asarray(V(np.asarray([x + F.u0])), dtype=float)[0]) - vx
        if V.log_growth is not None and not log_moment_finite(F, V.log_growth):
            raise GeneratorUndefined(
                f"V grows like log^{V.log_growth:g} but only log-moments below {F.k - 1:g} are finite"
            )

        def g(t):
            return (float(V(np.asarray([x + math.exp(t)]))[0]) - vx) * float(F.log_density(t))

        lo = F.log_support_lo
        cut = max(lo, math.log(x)) if x > 0 else lo
        top = 700.0
        # the integrand changes shape where u ~ x
        pieces = [(lo, cut), (cut, min(cut + 40.0, top)), (min(cut + 40.0, top), top)]
        total = 0.0
        for a, b in pieces:
            if b > a:
                total += integrate.quad(g, a, b, epsabs=0, epsrel=tol, limit=400)[0]
        total += self._log_tail_remainder(V, vx, top)
        if not math.isfinite(total):
            raise GeneratorUndefined("jump integral diverges for this V")
        return total

    def _log_tail_remainder(self, V, vx, T):
        """int_{log u > T} (V(x + u) - V(x)) F(du) with V(x + u) ~ (log u)^q, q = V.log_growth."""
        F = self.F
        mass = F.log_tail(T)
        if mass == 0.0:
            return 0.0
        if V.log_growth is None:
            raise GeneratorUndefined("V has no declared log growth; the jump-integral tail cannot be closed")
        q = V.log_growth
        if F.family == "pareto-log":
            # int_T^inf t^q (k-1) t^-k dt
            upper = (F.k - 1.0) * T ** (q - F.k + 1.0) / (F.k - 1.0 - q)
        else:
            b = F.beta
            a = (q + 1.0) / b
            upper = special.gamma(a) * special.gammaincc(a, T**b) / (b * special.gamma(1.0 + 1.0 / b))
        return upper - vx * mass

    def generator_apply(self, V, x, tol=1e-8):
        """lambda int (V(x + u) - V(x)) F(du) - mu x V'(x)."""
        if V.grad is None:
            raise ValueError("the generator needs V'")
        jump = self.jump_integral(V, x, tol) if self.lam > 0 else 0.0
        return self.lam * jump - self.mu * x * float(np.asarray(V.grad(np.asarray([x])), dtype=float)[0])

    def apply_generator(self, V, xs):
        xs = np.asarray(xs, dtype=float)
        return np.array([self.generator_apply(V, float(x)) for x in xs.ravel()]).reshape(xs.shape)

    # hitting-time tail

    def survival_lower_bound(self, t):
        """Lower bound on P_2(tau_[0,1] > t): a jump of size >= e^(mu t) before the level 1 is reached."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        return (1.0 - 2.0 ** (-self.lam / self.mu)) * self.F.log_tail(self.mu * t)

    # certificates

    def lemma18_certificate(self, r, grid=None, eta_grid=None):
        """V = (log(e^r + x))^r, alpha = 1/r, C = [0, x_C]; predicted rate (1 + t)^(r - 1)."""
        if r <= 1:
            raise ValueError("need r > 1")
        alpha = 1.0 / r
        etas = np.array([alpha, 0.5 * (alpha + 1.0), 1.0]) if eta_grid is None else np.asarray(eta_grid, dtype=float)
        m = tail_moment(self.F, r)
        if not m["finite"]:
            return drift_mod.DriftCertificate("refused", alpha, etas, reason=f"m_r infinite: {m.get('reason', '')}")
        grid = np.geomspace(math.e**2, 1e6, 120) if grid is None else np.asarray(grid, dtype=float)
        V = log_lyapunov(r)
        spec = drift_mod.DriftSpec(V, alpha, etas, grid)

        def tail(cert):
            # jump term / V^(eta - alpha) -> 0 and the decay term tends to -mu r eta; require the
            # grid's last decade to sit below half the limit
            last = grid >= grid[-1] / 10.0
            lim = -self.mu * r * cert.eta_grid
            worst = cert.ratios[:, last].max(axis=1)
            ok = bool(np.all(worst < 0.5 * lim))
            return ok, f"ratios on the last grid decade <= {worst.max():.4g}; limits {lim.tolist()}"

        cert = drift_mod.verify(self, spec, tail_check=tail)
        cert.extra["x_C"] = float(grid[~cert.extra["in_C"]].min() if cert.certified else math.nan)
        cert.extra["m_r"] = m["value"]
        cert.extra["predicted_rate"] = polynomial_rate(r - 1.0).to_dict()
        cert.extra["predicted_rate_exponent"] = r - 1.0
        return cert

    # simulation

    def simulate(self, x0, horizon, seed, trajectory=0, tag=TAG_MAIN, stop=None, stream=None):
        """Exact event-driven path: exponential decay between Poisson jump times."""
        if x0 < 0:
            raise ValueError("start must be nonnegative")
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        st = stream or Stream(seed, trajectory, tag)
        t, x = 0.0, float(x0)
        segs = []
        while True:
            if self.lam > 0:
                gap = -math.log(st.uniform()) / self.lam
                w = self.F.sample(st.uniform())
            else:
                gap, w = math.inf, 0.0
            seg = DecaySegment(t, min(t + gap, float(horizon)), x, self.mu)
            cut = stop_at(seg, stop)
            if cut is not None:
                segs.append(cut)
                return Path(segs)
            segs.append(seg)
            if t + gap >= horizon:
                return Path(segs)
            x = x * math.exp(-self.mu * gap) + w
            t += gap

    def simulate_paths(self, x0, horizon, seed, trajectories, tag=TAG_MAIN, stop=None):
        return [self.simulate(x0, horizon, seed, stop=stop, stream=s) for s in Stream.batch(seed, trajectories, tag)]

    def sample_at(self, x0, times, seed, trajectories, tag=TAG_MAIN):
        times = np.asarray(times, dtype=float)
        T = float(times[-1]) if times[-1] > 0 else 1.0
        out = np.empty((len(trajectories), times.size))
        for j, p in enumerate(self.simulate_paths(x0, T, seed, trajectories, tag)):
            out[j] = [p(t) for t in times]
        return out
