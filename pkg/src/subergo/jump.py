"""
Star-shaped jump process on Z_+: from 0 jump to i >= 1 with probability
p_i, from i >= 1 jump back to 0; the holding time in state i is Exp(lambda_i).

Closed families for (p_i) and (lambda_i) make every series condition the
ergodicity statements rely on decidable analytically.  Transient laws of a
truncation at level N are computed by uniformization, which keeps every
probability nonnegative and the Poisson-series error explicit.
"""

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np
from scipy import sparse, special, stats

from . import drift as drift_mod
from .paths import ConstantSegment, Path, stop_at
from .rates import MenuEntry, RateNormMenu
from .rng import TAG_MAIN, Stream


class NotPositiveRecurrent(ValueError):
    pass


class Undecidable(ValueError):
    pass


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class JumpWeights:
    """Jump distribution (p_i)_{i>=1} from state 0.

    geometric: p_i = (1 - q) q^(i-1);  power: p_i = i^-s / zeta(s), s > 1;
    table: explicit finite weights summing to one.
    """

    family: str
    q: float = 0.5
    s: float = 2.0
    table: Optional[tuple] = None

    def __post_init__(self):
        if self.family == "geometric" and not 0 < self.q < 1:
            raise ValueError("geometric weights need 0 < q < 1")
        if self.family == "power" and self.s <= 1:
            raise ValueError("power weights need s > 1")
        if self.family == "table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 1 or t.size == 0 or np.any(t < 0) or abs(t.sum() - 1) > 1e-12:
                raise ValueError("table weights must be nonnegative and sum to 1")
        if self.family not in ("geometric", "power", "table"):
            raise ValueError(f"unknown weight family {self.family!r}")

    def pmf(self, i):
        i = np.asarray(i, dtype=float)
        if self.family == "geometric":
            return (1 - self.q) * self.q ** (i - 1)
        if self.family == "power":
            return i ** (-self.s) / special.zeta(self.s)
        t = np.asarray(self.table, dtype=float)
        idx = i.astype(int)
        out = np.zeros(idx.shape)
        ok = (idx >= 1) & (idx <= t.size)
        out[ok] = t[idx[ok] - 1]
        return out

    def tail(self, N):
        """sum_{i > N} p_i."""
        if self.family == "geometric":
            return self.q**N
        if self.family == "power":
            return float(special.zeta(self.s, N + 1) / special.zeta(self.s))
        return float(np.sum(np.asarray(self.table)[N:]))

    @property
    def support_max(self):
        return len(self.table) if self.family == "table" else math.inf

    def quantile(self, u):
        """Smallest i >= 1 with P(I <= i) >= u."""
        if self.family == "geometric":
            return max(1, int(math.ceil(math.log1p(-u) / math.log(self.q) - 1e-12)))
        if self.family == "table":
            cum = np.cumsum(self.table)
            return min(int(np.searchsorted(cum, u)) + 1, len(self.table))
        return _power_quantile(self.s, u)

    def to_dict(self):
        if self.family == "geometric":
            return {"family": "geometric", "q": self.q}
        if self.family == "power":
            return {"family": "power", "s": self.s}
        return {"family": "table", "values": list(self.table)}


_POWER_CDF_CACHE = {}


def _power_quantile(s, u):
    cdf = _POWER_CDF_CACHE.get(s)
    if cdf is None:
        i = np.arange(1, 2**16 + 1, dtype=float)
        cdf = np.cumsum(i ** (-s)) / special.zeta(s)
        _POWER_CDF_CACHE[s] = cdf
    if u <= cdf[-1]:
        return int(np.searchsorted(cdf, u)) + 1
    # tail: P(I > i) = zeta(s, i + 1) / zeta(s); bisect on integers
    z = special.zeta(s)
    lo, hi = cdf.size, cdf.size * 2
    while 1 - special.zeta(s, hi + 1) / z < u:
        lo, hi = hi, hi * 2
        if hi > 2**62:
            return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if 1 - special.zeta(s, mid + 1) / z >= u:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class JumpRates:
    """Holding rates (lambda_i)_{i>=1}.

    power: scale * i^-a (a >= 0); geometric: scale * rho^i (0 < rho < 1);
    constant: scale; table: explicit finite values.
    """

    family: str
    scale: float = 1.0
    a: float = 1.0
    rho: float = 0.5
    table: Optional[tuple] = None

    def __post_init__(self):
        if self.family not in ("power", "geometric", "constant", "table"):
            raise ValueError(f"unknown rate family {self.family!r}")
        if self.scale <= 0:
            raise ValueError("rates must be positive")
        if self.family == "power" and self.a < 0:
            raise ValueError("power rates need a >= 0 (bounded rates)")
        if self.family == "geometric" and not 0 < self.rho < 1:
            raise ValueError("geometric rates need 0 < rho < 1")
        if self.family == "table" and np.any(np.asarray(self.table, dtype=float) <= 0):
            raise ValueError("rates must be positive")

    def __call__(self, i):
        i = np.asarray(i, dtype=float)
        if self.family == "power":
            return self.scale * i ** (-self.a)
        if self.family == "geometric":
            return self.scale * self.rho**i
        if self.family == "constant":
            return np.full(i.shape, self.scale)
        t = np.asarray(self.table, dtype=float)
        return t[np.clip(i.astype(int), 1, t.size) - 1]

    @property
    def sup(self):
        if self.family == "table":
            return float(np.max(self.table))
        return float(self(1))

    @property
    def vanishes(self):
        """liminf lambda_i = 0."""
        if self.family == "power":
            return self.a > 0
        if self.family == "geometric":
            return True
        return False

    def sup_beyond(self, N):
        """sup_{i > N} lambda_i for the closed families (all nonincreasing)."""
        if self.family == "table":
            raise Undecidable("table rates carry no tail information")
        return float(self(N + 1))

    def to_dict(self):
        d = {"family": self.family, "scale": self.scale}
        if self.family == "power":
            d["a"] = self.a
        elif self.family == "geometric":
            d["rho"] = self.rho
        elif self.family == "table":
            d["values"] = list(self.table)
        return d


# --------------------------------------------------------------------------
# model


class InversePowerV:
    """V(0) = v0, V(i) = scale * lambda_i^(-exponent) on the jump process.

    Kept as its own type so the generator can use the closed-form series
    for sum_i p_i V(i).
    """

    def __init__(self, lam, scale, exponent, v0=1.0):
        self.lam = lam
        self.scale = float(scale)
        self.exponent = float(exponent)
        self.v0 = float(v0)
        self.name = f"{self.scale:g}*lambda^-{self.exponent:g}"

    def __call__(self, i):
        i = np.asarray(i)
        safe = np.where(i >= 1, i, 1)
        out = self.scale * self.lam(safe) ** (-self.exponent)
        return np.where(i == 0, self.v0, out)

    def power(self, eta):
        return InversePowerV(self.lam, self.scale**eta, self.exponent * eta, self.v0**eta)


@dataclass(frozen=True)
class TruncatedGenerator:
    N: int
    matrix: sparse.csr_matrix
    leak: float

    def toarray(self):
        return self.matrix.toarray()


@dataclass
class TransientResult:
    times: np.ndarray
    rows: np.ndarray  # P^t(x, i) for i <= N, one row per time
    pi: np.ndarray
    distance: np.ndarray
    error_bar: np.ndarray
    mass: np.ndarray
    poisson_terms: int


class JumpModel:
    def __init__(self, p: JumpWeights, lam: JumpRates, lambda0=1.0):
        if lambda0 <= 0:
            raise ValueError("lambda_0 must be positive")
        self.p = p
        self.lam = lam
        self.lambda0 = float(lambda0)

    @classmethod
    def from_tables(cls, p, lam):
        """``p`` = (p_1..p_N), ``lam`` = (lambda_0..lambda_N)."""
        return cls(JumpWeights("table", table=tuple(p)), JumpRates("table", table=tuple(lam[1:])), lam[0])

    def rates(self, states):
        states = np.asarray(states)
        safe = np.where(states >= 1, states, 1)
        return np.where(states == 0, self.lambda0, self.lam(safe))

    def to_dict(self):
        return {"p": self.p.to_dict(), "lambda": self.lam.to_dict(), "lambda0": self.lambda0}

    # ---------------------------------------------------------------- series

    def series_converges(self, kind, param):
        """Analytic convergence of sum_i p_i g(lambda_i).

        kind 'poly':  g = lambda^-param
        kind 'log':   g = (1 v 1/lambda) log(1 v 1/lambda)^param
        kind 'exp':   g = (1 v 1/lambda) lambda^-1/2 exp(param^2 / lambda)
        """
        pf, lf = self.p.family, self.lam.family
        if pf == "table" or lf == "table":
            if pf == "table":
                return True
            raise Undecidable("table rates: series undecidable beyond the table")
        if lf == "constant":
            return True
        if lf == "power":
            a = self.lam.a
            if a == 0:
                return True
            if pf == "power":
                s = self.p.s
                if kind == "poly":
                    return s - a * param > 1
                if kind == "log":
                    return s - a > 1
                return False
            # geometric weights against polynomially growing 1/lambda
            if kind in ("poly", "log"):
                return True
            c = self.lam.scale
            if a < 1:
                return True
            if a == 1:
                return self.p.q * math.exp(param**2 / c) < 1
            return False
        # geometric rates: 1/lambda grows exponentially
        if pf == "power":
            return param == 0 and kind == "poly"
        rho, q = self.lam.rho, self.p.q
        if kind == "poly":
            return q * rho ** (-param) < 1
        if kind == "log":
            return q / rho < 1
        return False

    def inverse_rate_moment(self, beta):
        """sum_{i>=1} p_i lambda_i^-beta, in closed form per family."""
        if not self.series_converges("poly", beta):
            return math.inf
        pf, lf = self.p.family, self.lam.family
        c = self.lam.scale
        if pf == "table":
            i = np.arange(1, len(self.p.table) + 1)
            return float(np.sum(np.asarray(self.p.table) * self.lam(i) ** (-beta)))
        if lf == "constant" or (lf == "power" and self.lam.a == 0):
            return c ** (-beta)
        if lf == "power":
            k = self.lam.a * beta
            if pf == "power":
                s = self.p.s
                return c ** (-beta) * float(special.zeta(s - k) / special.zeta(s))
            q = self.p.q
            return c ** (-beta) * (1 - q) / q * float(mpmath.polylog(-k, q))
        q, rho = self.p.q, self.lam.rho
        x = q * rho ** (-beta)
        return c ** (-beta) * (1 - q) * rho ** (-beta) / (1 - x)

    def leak(self, N):
        """sum_{i > N} p_i (1 + 1/lambda_i)."""
        pf, lf = self.p.family, self.lam.family
        if pf == "table":
            i = np.arange(N + 1, len(self.p.table) + 1)
            return float(np.sum(self.p.pmf(i) * (1 + 1 / self.lam(i))))
        if pf == "power" and lf in ("power", "constant"):
            s = self.p.s
            a = self.lam.a if lf == "power" else 0.0
            z = special.zeta(s)
            return float((special.zeta(s, N + 1) + special.zeta(s - a, N + 1) / self.lam.scale) / z)
        if not self.series_converges("poly", 1.0):
            return math.inf
        # geometric weights: terms decay geometrically, sum directly
        total, i = 0.0, N + 1
        while True:
            idx = np.arange(i, i + 4096)
            block = float(np.sum(self.p.pmf(idx) * (1 + 1 / self.lam(idx))))
            total += block
            if block <= 1e-18 * max(total, 1e-300) or block == 0.0:
                return total
            i += 4096

    def truncation_level(self, tol=1e-10, n_max=10**8):
        """Smallest N with leak(N) <= tol."""
        if self.p.family == "table":
            return len(self.p.table)
        if self.leak(1) <= tol:
            return 1
        lo, hi = 1, 2
        while self.leak(hi) > tol:
            lo, hi = hi, hi * 2
            if hi > n_max:
                raise Undecidable("no truncation level below n_max reaches the leak tolerance")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.leak(mid) <= tol:
                hi = mid
            else:
                lo = mid
        return hi

    # ------------------------------------------------------------- generator

    def generator_matrix(self, N):
        if N < 1:
            raise ValueError("truncation level must be >= 1")
        i = np.arange(1, N + 1)
        pi = self.p.pmf(i)
        li = self.lam(i)
        rows = np.concatenate([[0], np.zeros(N, int), i, i])
        cols = np.concatenate([[0], i, np.zeros(N, int), i])
        vals = np.concatenate([[-self.lambda0], self.lambda0 * pi, li, -li])
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))
        return TruncatedGenerator(N, A, self.p.tail(N))

    def apply_generator(self, V, states):
        """(A V)(x) for states x, using closed-form series for InversePowerV."""
        states = np.asarray(states)
        v = np.asarray(V(states), dtype=float)
        out = np.empty(states.shape, dtype=float)
        pos = states >= 1
        out[pos] = self.rates(states[pos]) * (float(V(np.asarray([0]))[0]) - v[pos])
        if (~pos).any():
            out[~pos] = self.lambda0 * (self._jump_mean(V) - float(V(np.asarray([0]))[0]))
        return out

    def _jump_mean(self, V):
        """sum_{i>=1} p_i V(i)."""
        if isinstance(V, InversePowerV):
            m = self.inverse_rate_moment(V.exponent)
            if not math.isfinite(m):
                raise drift_mod.GeneratorUndefined(
                    f"sum p_i lambda_i^-{V.exponent:g} diverges: V is outside the generator domain"
                )
            return V.scale * m
        if self.p.family == "table":
            i = np.arange(1, len(self.p.table) + 1)
            return float(np.sum(self.p.pmf(i) * V(i)))
        total, i = 0.0, 1
        while i < 10**7:
            idx = np.arange(i, i + 65536)
            block = float(np.sum(self.p.pmf(idx) * V(idx)))
            total += block
            if block <= 1e-15 * abs(total):
                return total
            i += 65536
        raise drift_mod.GeneratorUndefined("sum p_i V(i) does not settle; V outside the generator domain")

    # ------------------------------------------------------------ invariant

    def invariant_distribution(self, N):
        """(pi(0..N), tail mass beyond N).

        Balance across the star gives pi(i) lambda_i = pi(0) lambda_0 p_i.
        """
        S = self.inverse_rate_moment(1.0)
        if not math.isfinite(S):
            raise NotPositiveRecurrent("sum p_i / lambda_i diverges: the process is not positive recurrent")
        pi0 = 1.0 / (1.0 + self.lambda0 * S)
        i = np.arange(1, N + 1)
        pi = np.concatenate([[pi0], pi0 * self.lambda0 * self.p.pmf(i) / self.lam(i)])
        head = float(np.sum(self.p.pmf(i) / self.lam(i)))
        leak = max(0.0, pi0 * self.lambda0 * (S - head))
        return pi, leak

    # ------------------------------------------------------------ transient

    def transient(self, N, x, times, f=None, tol=1e-16):
        """Uniformization of the truncated generator, row x, at all ``times``.

        Returns P^t(x, .) on {0..N}, its f-weighted L1 distance to pi and an
        error bar covering the truncation (probability mass that left
        {0..N}) and the stationary tail beyond N.
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if x > N or x < 0:
            raise ValueError("start state outside the truncation")
        if np.any(times < 0):
            raise ValueError("times must be nonnegative")
        i = np.arange(1, N + 1)
        pw = self.lambda0 * self.p.pmf(i)
        li = self.lam(i)
        Lam = max(self.lambda0, float(li.max()))
        pi, pi_leak = self.invariant_distribution(N)
        fv = np.ones(N + 1) if f is None else np.asarray(f(np.arange(N + 1)), dtype=float)

        lt = Lam * times
        kmax = int(max(stats.poisson.isf(tol, lt.max()) if lt.max() > 0 else 0, 0)) + 10
        k = np.arange(kmax + 1)
        weights = np.array([stats.poisson.pmf(k, m) if m > 0 else (k == 0).astype(float) for m in lt])
        v = np.zeros(N + 1)
        v[x] = 1.0
        acc = np.zeros((times.size, N + 1))
        for kk in range(kmax + 1):
            acc += weights[:, kk : kk + 1] * v
            # v <- v (I + A / Lam)
            out0 = -self.lambda0 * v[0] + float(np.dot(li, v[1:]))
            nxt = v.copy()
            nxt[0] += out0 / Lam
            nxt[1:] += (v[0] * pw - li * v[1:]) / Lam
            v = nxt
        poisson_tail = np.clip(1.0 - weights.sum(axis=1), 0.0, None)
        mass = acc.sum(axis=1)
        dist = (np.abs(acc - pi[None, :]) * fv[None, :]).sum(axis=1)
        lost = np.clip(1.0 - mass, 0.0, None)
        err = (2.0 * lost + poisson_tail) * fv.max() + pi_leak * fv.max()
        return TransientResult(times, acc, pi, dist, err, mass, kmax + 1)

    def transient_distance(self, N, x, t, f=None):
        res = self.transient(N, x, [t], f)
        return float(res.distance[0]), float(res.error_bar[0])

    # ------------------------------------------------------------ obstruction

    def conductance_obstruction(self, m, i_max=1000, i_min=1, checkpoints=None):
        """Per-state bounds 2(1 - exp(-lambda_i m)) on the skeleton conductance."""
        if m <= 0:
            raise ValueError("skeleton period must be positive")
        i = np.arange(i_min, i_max + 1)
        pi, _ = self.invariant_distribution(i_max)
        keep = pi[i] <= 0.5
        i = i[keep]
        bounds = 2.0 * (-np.expm1(-self.lam(i) * m))
        if checkpoints is None:
            checkpoints = [c for c in (10, 100, 1000, 10**4, 10**5, 10**6) if i_min <= c <= i_max]
            if not checkpoints or checkpoints[-1] != i_max:
                checkpoints.append(i_max)
        prefix = np.minimum.accumulate(bounds)
        infima = [float(prefix[np.searchsorted(i, c, side="right") - 1]) for c in checkpoints]
        decreasing = all(b < a for a, b in zip(infima, infima[1:]))
        obstructed = bool(self.lam.vanishes and decreasing)
        return {
            "m": m,
            "states": i,
            "bounds": bounds,
            "infimum": float(bounds.min()),
            "checkpoints": list(checkpoints),
            "prefix_infima": infima,
            "verdict": "geometric ergodicity obstructed" if obstructed else "no obstruction found",
        }

    # ----------------------------------------------------------- certificates

    def drift_function(self, beta):
        """V(0) = 1, V(i) = lambda_i^-beta / c with c = (sup lambda)^-beta / 2, so V > 1 off 0."""
        c = 0.5 * self.lam.sup ** (-beta)
        return InversePowerV(self.lam, 1.0 / c, beta, 1.0)

    def drift_certificate(self, beta, eta_grid=None, N=1000):
        if beta < 1:
            raise ValueError("the inverse-rate drift needs beta >= 1")
        alpha = 1.0 / beta
        eta_grid = drift_mod.default_eta_grid(alpha) if eta_grid is None else np.asarray(eta_grid, dtype=float)
        if not math.isfinite(self.inverse_rate_moment(beta)):
            return drift_mod.DriftCertificate(
                "refused",
                alpha,
                eta_grid,
                reason=f"sum p_i lambda_i^-{beta:g} diverges",
            )
        V = self.drift_function(beta)
        n_top = N if self.p.family != "table" else min(N, len(self.p.table))
        spec = drift_mod.DriftSpec(V, alpha, eta_grid, np.arange(0, n_top + 1))

        def tail(cert):
            # for i > N the drift ratio is v0^eta s^(alpha-eta) lambda_i^(beta eta) - s^alpha,
            # increasing in lambda_i; bound it with sup_{i>N} lambda_i
            if self.p.family == "table":
                return True, "finite support: grid covers every state"
            try:
                lam_sup = self.lam.sup_beyond(n_top)
            except Undecidable as err:
                return False, str(err)
            s = V.scale
            worst = max(s ** (alpha - e) * lam_sup ** (beta * e) - s**alpha for e in cert.eta_grid)
            return worst < 0, f"sup of the drift ratio beyond state {n_top} is <= {worst:.6g}"

        cert = drift_mod.verify(self, spec, tail_check=tail)
        cert.extra["V"] = {"v0": V.v0, "scale": V.scale, "exponent": V.exponent}
        return cert

    def nested_ladder(self, beta, p, hit_beta=1.0, N=1000):
        """V_q = s_q lambda^(-q beta / p), f_q = -A V_q on i >= 1 (halved), a ladder of nested drift conditions."""
        rungs = []
        for q in range(1, p + 1):
            e = q * beta / p
            c = 0.5 * self.lam.sup ** (-e)
            V = InversePowerV(self.lam, 1.0 / c, e, 1.0)

            def f(i, V=V, e=e):
                i = np.asarray(i)
                safe = np.where(i >= 1, i, 1)
                lam = self.lam(safe)
                # -A V(i) = lambda_i (V(i) - 1) >= V.scale lambda_i^(1-e) / 2 since V(i) >= 2
                out = 0.5 * V.scale * lam ** (1.0 - e)
                return np.where(i == 0, out.min() if np.size(out) else 1.0, out)

            rungs.append((V, f))
        return drift_mod.NestedSpec(rungs, hit_beta, np.arange(0, N + 1))

    # ------------------------------------------------------------- predictions

    def predicted_rates(self, kind, param, grid=None, b_grid=(-1.0, 0.0, 1.0)):
        """Rate/norm pairs for kind 'poly' (beta), 'log' (beta) or 'subexp' (z)."""
        if kind == "poly":
            beta = param
            if beta < 1:
                return RateNormMenu(None, (), "polynomial rates need beta >= 1")
            if not self.series_converges("poly", beta):
                return RateNormMenu(None, (), f"sum p_i lambda_i^-{beta:g} diverges")
            kappas = np.linspace(0.0, beta - 1.0, 5) if grid is None else grid
            out = []
            for kappa in kappas:
                for b in b_grid:
                    interior = 0 < kappa < beta - 1
                    if not (interior or (kappa == 0 and b <= 0) or (kappa == beta - 1 and b >= 0)):
                        continue
                    out.append(
                        MenuEntry(beta - 1 - kappa, b, kappa, -b, kappa=kappa, base="1/lambda_x", rate_kind="polynomial")
                    )
            return RateNormMenu(1.0 / beta, tuple(out))
        if kind == "log":
            beta = param
            if beta < 0:
                return RateNormMenu(None, (), "log rates need beta >= 0")
            if not self.series_converges("log", beta):
                return RateNormMenu(None, (), f"log-moment of order {beta:g} diverges")
            kappas = np.linspace(0.0, beta, 5) if grid is None else grid
            out = [
                MenuEntry(beta - k, 0.0, k, 0.0, kappa=k, base="1+log(1 v 1/lambda_x)", rate_kind="log")
                for k in kappas
                if 0 <= k <= beta
            ]
            return RateNormMenu(None, tuple(out))
        if kind == "subexp":
            z = param
            if z <= 0:
                return RateNormMenu(None, (), "subexponential rates need z > 0")
            if not self.series_converges("exp", z):
                return RateNormMenu(None, (), f"exponential moment with z={z:g} diverges")
            ps = np.linspace(0.0, 1.0, 5) if grid is None else grid
            out = [
                MenuEntry(
                    2 * z * (1 - p), 0.0, p, 0.0, p=p, base=f"1+lambda_x^-1/2 exp({z:g}^2/lambda_x)", rate_kind="subexponential"
                )
                for p in ps
                if 0 <= p <= 1
            ]
            return RateNormMenu(None, tuple(out))
        raise ValueError(f"unknown prediction kind {kind!r}")

    # --------------------------------------------------------------- simulate

    def simulate(self, x0, horizon, seed, trajectory=0, tag=TAG_MAIN, stop=None, stream=None):
        """Exact path: Exp(lambda_state) holding times, inverse-CDF jump targets.

        Each event uses two uniforms, holding time first, so a trajectory's
        events do not depend on the horizon or on ``stop``.
        """
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        st = stream or Stream(seed, trajectory, tag)
        t, state = 0.0, int(x0)
        segs = []
        while True:
            rate = self.lambda0 if state == 0 else float(self.lam(state))
            hold = -math.log(st.uniform()) / rate
            u = st.uniform()
            seg = ConstantSegment(t, min(t + hold, float(horizon)), state)
            cut = stop_at(seg, stop)
            if cut is not None:
                segs.append(cut)
                return Path(segs)
            segs.append(seg)
            if t + hold >= horizon:
                return Path(segs)
            t += hold
            state = self.p.quantile(u) if state == 0 else 0

    def simulate_paths(self, x0, horizon, seed, trajectories, tag=TAG_MAIN, stop=None):
        streams = Stream.batch(seed, trajectories, tag)
        return [self.simulate(x0, horizon, seed, stop=stop, stream=s) for s in streams]
