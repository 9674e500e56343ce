"""
Langevin tempered diffusions  dX = b(X) dt + sigma(X) dW  on R^n with
sigma = pi^-d and b = (1 - 2d)/2 pi^-2d grad log pi, for targets with
polynomial tails.

States are plain floats (arrays of shape (m,)) when n = 1 and arrays of
shape (m, n) otherwise.  pi is used unnormalized (pi(0) = 1 for the
closed family); the normalizing constant only rescales sigma.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .functions import TestFunction
from .paths import GridSegment, Path, stop_at
from .rng import TAG_MAIN, normals

MIN_STEP = 1e-12


class StepUnderflow(RuntimeError):
    pass


class ConsistencyError(RuntimeError):
    pass


class NotRegular(ValueError):
    pass


def _sq_norm(x, n):
    x = np.asarray(x, dtype=float)
    return x**2 if n == 1 else np.sum(x**2, axis=-1)


def _dot(u, v, n):
    return u * v if n == 1 else np.sum(u * v, axis=-1)


def _times_vec(s, v, n):
    return s * v if n == 1 else np.asarray(s)[..., None] * v


@dataclass(frozen=True)
class TargetDensity:
    """Unnormalized target with log-density, gradient and Laplacian of log pi.

    ``beta`` and ``gamma`` are the tail constants of the polynomial class;
    ``radial`` marks targets depending on |x| only, for which the
    multidimensional regularity integral can be evaluated.
    """

    log_density: Callable
    grad_log: Callable
    lap_log: Callable
    n: int
    beta: float
    gamma: float
    radial: bool = False
    family: Optional[str] = None
    params: dict = field(default_factory=dict)

    @classmethod
    def polynomial_tail(cls, beta, n=1):
        """pi(x) = (1 + |x|^2)^(-1/(2 beta)), 0 < beta < 1/n."""
        if not 0 < beta < 1.0 / n:
            raise ValueError(f"tail index must satisfy 0 < beta < 1/n = {1.0 / n:g}, got {beta}")
        k = 1.0 / (2.0 * beta)

        def log_density(x):
            return -k * np.log1p(_sq_norm(x, n))

        def grad_log(x):
            x = np.asarray(x, dtype=float)
            return _times_vec(-2.0 * k / (1.0 + _sq_norm(x, n)), x, n)

        def lap_log(x):
            r2 = _sq_norm(x, n)
            return -2.0 * k * (n / (1.0 + r2) - 2.0 * r2 / (1.0 + r2) ** 2)

        return cls(log_density, grad_log, lap_log, n, beta, beta * (2 - n), True, "polynomial-tail", {"beta": beta, "n": n})

    def density(self, x):
        return np.exp(self.log_density(x))

    def a4_ratios(self, radii=(10.0, 1e2, 1e3, 1e4)):
        """|grad log pi| / pi^beta and Tr(Hess log pi) / |grad log pi|^2 along the first axis."""
        pts = self._axis_points(np.asarray(radii, dtype=float))
        g = np.sqrt(_sq_norm(self.grad_log(pts), self.n))
        ratio1 = g / np.exp(self.beta * self.log_density(pts))
        ratio2 = self.lap_log(pts) / g**2
        return {"radii": list(radii), "grad_ratio": ratio1.tolist(), "trace_ratio": ratio2.tolist()}

    def _axis_points(self, r):
        if self.n == 1:
            return r
        pts = np.zeros(r.shape + (self.n,))
        pts[..., 0] = r
        return pts

    def to_dict(self):
        return {"family": self.family, **self.params, "gamma": self.gamma}


def smoothstep(u):
    """Quintic C^2 bridge from 0 (u <= 0) to 1 (u >= 1) with its first two derivatives."""
    u = np.clip(u, 0.0, 1.0)
    s = u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    ds = 30.0 * u**2 * (1.0 - u) ** 2
    d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    return s, ds, d2s


def radial_function(g, n, name="V"):
    """TestFunction x -> G(|x|) from ``g(r) -> (G, G', G'')``.

    grad = G'(r) x/r and Laplacian = G'' + (n-1) G'/r; the caller must
    make G' vanish near r = 0.
    """

    def value(x):
        return g(np.sqrt(_sq_norm(x, n)))[0]

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(_sq_norm(x, n))
        d1 = g(r)[1]
        safe = np.where(r > 0, r, 1.0)
        return _times_vec(np.where(r > 0, d1 / safe, 0.0), x, n)

    def laplacian(x):
        r = np.sqrt(_sq_norm(x, n))
        _, d1, d2 = g(r)
        safe = np.where(r > 0, r, 1.0)
        return d2 + (n - 1) * np.where(r > 0, d1 / safe, 0.0)

    return TestFunction(value, grad, laplacian, name=name)


def tempered_lyapunov(target: TargetDensity, rho, R0=1.0):
    """V = 1 + sign(rho) pi^-rho for |x| >= 2 R0, V = 1 for |x| <= R0, C^2 bridge between.

    Needs the closed family, whose pi^-rho = (1 + r^2)^(k rho) is radial.
    """
    if target.family != "polynomial-tail":
        raise ValueError("the bridged Lyapunov function is built for the polynomial-tail family")
    if rho == 0:
        raise ValueError("rho must be nonzero")
    k = 1.0 / (2.0 * target.beta)
    e = k * rho
    sgn = math.copysign(1.0, rho)

    def g(r):
        r = np.asarray(r, dtype=float)
        q = 1.0 + r**2
        P = q**e
        dP = 2.0 * e * r * q ** (e - 1.0)
        d2P = 2.0 * e * q ** (e - 1.0) + 4.0 * e * (e - 1.0) * r**2 * q ** (e - 2.0)
        S, dS, d2S = smoothstep((r - R0) / R0)
        dS, d2S = dS / R0, d2S / R0**2
        return (
            1.0 + sgn * S * P,
            sgn * (dS * P + S * dP),
            sgn * (d2S * P + 2.0 * dS * dP + S * d2P),
        )

    return radial_function(g, target.n, name=f"1{'+' if rho > 0 else '-'}pi^{-rho:g}")


@dataclass(frozen=True)
class ScanResult:
    verdict: str  # holds | fails | condition violated | refused
    alpha: float
    c: Optional[float]
    R: float
    rho: float
    condition: float
    regime: str
    reason: str = ""
    radii: tuple = ()
    ratios: tuple = ()
    max_rel_gap: Optional[float] = None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "alpha": self.alpha,
            "c": self.c,
            "R": self.R,
            "rho": self.rho,
            "condition": self.condition,
            "regime": self.regime,
            "reason": self.reason,
            "max_rel_gap": self.max_rel_gap,
        }


@dataclass(frozen=True)
class Regime:
    regime: str  # cold | geometric
    tau_sup: Optional[float]
    norm: str
    uniform: bool
    kappa: float

    def to_dict(self):
        return {"regime": self.regime, "tau_sup": self.tau_sup, "norm": self.norm, "uniform": self.uniform, "kappa": self.kappa}


class LangevinModel:
    def __init__(self, target: TargetDensity, d=0.0, h0=0.01, noise_scale=1.0):
        if d < 0:
            raise ValueError("temperature d must be nonnegative")
        if h0 <= 0:
            raise ValueError("base step h0 must be positive")
        self.target = target
        self.n = target.n
        self.d = float(d)
        self.h0 = float(h0)
        self.noise_scale = float(noise_scale)
        self.regularity = regularity_check(self)

    def to_dict(self):
        return {"target": self.target.to_dict(), "d": self.d, "h0": self.h0}

    # coefficients

    def sigma(self, x):
        return np.exp(-self.d * self.target.log_density(x))

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        scale = 0.5 * (1.0 - 2.0 * self.d) * np.exp(-2.0 * self.d * self.target.log_density(x))
        return _times_vec(scale, self.target.grad_log(x), self.n)

    def elliptic_apply(self, V: TestFunction, x):
        """<b, grad V> + sigma^2/2 Laplacian V."""
        if V.grad is None or V.laplacian is None:
            raise ValueError("the elliptic operator needs grad and laplacian of V")
        x = np.asarray(x, dtype=float)
        return _dot(self.drift(x), np.asarray(V.grad(x), dtype=float), self.n) + 0.5 * self.sigma(x) ** 2 * np.asarray(
            V.laplacian(x), dtype=float
        )

    apply_generator = elliptic_apply

    def closed_form_LV(self, rho, x):
        """The closed-form expression for L(1 + sign(rho) pi^-rho) valid far out."""
        t = self.target
        x = np.asarray(x, dtype=float)
        lp = t.log_density(x)
        P = np.exp(-rho * lp)
        V = 1.0 + math.copysign(1.0, rho) * P
        g2 = _sq_norm(t.grad_log(x), self.n)
        ratio = np.sqrt(g2) / np.exp(t.beta * lp)
        return (
            -abs(rho)
            / 2.0
            * V
            * P
            / (1.0 + P)
            * np.exp(2.0 * (t.beta - self.d) * lp)
            * ratio**2
            * (1.0 - rho - 2.0 * self.d + t.lap_log(x) / g2)
        )

    # simulation

    def _require_regular(self):
        if self.regularity["verdict"] != "regular":
            raise NotRegular(f"simulation refused: regularity verdict is {self.regularity['verdict']!r}")

    def _step_sizes(self, x):
        b = self.drift(x)
        bn = np.abs(b) if self.n == 1 else np.sqrt(np.sum(b**2, axis=-1))
        return self.h0 / (1.0 + bn + self.sigma(x) ** 2), b

    def _noise(self, seed, traj, step, tag):
        """Standard normals for every trajectory at integer ``step``: shape (m,) or (m, n)."""
        per = (self.n + 1) // 2
        cnt = step * per + np.arange(per, dtype=np.uint64)
        z = normals(seed, np.asarray(traj, dtype=np.uint64)[:, None], cnt[None, :], tag).reshape(len(traj), -1)
        return z[:, 0] if self.n == 1 else z[:, : self.n]

    def _advance(self, x, t, t_target, seed, traj, step, tag):
        """One EM step for every active trajectory, capped at t_target."""
        h_free, b = self._step_sizes(x)
        if np.any(h_free < MIN_STEP):
            bad = int(np.argmin(h_free))
            raise StepUnderflow(f"step {h_free[bad]:.3g} < {MIN_STEP:g} at state {x[bad]!r}, time {t[bad]:.6g}")
        h = np.minimum(h_free, t_target - t)
        z = self._noise(seed, traj, step, tag)
        s = self.noise_scale * self.sigma(x) * np.sqrt(h)
        x = x + _times_vec(h, b, self.n) + _times_vec(s, z, self.n)
        t = np.where(h == t_target - t, t_target, t + h)
        return x, t

    def _initial(self, x0, m):
        x0 = np.asarray(x0, dtype=float)
        if self.n == 1:
            return np.full(m, float(x0))
        return np.broadcast_to(x0, (m, self.n)).copy()

    def sample_at(self, x0, times, seed, trajectories, tag=TAG_MAIN):
        """States of each trajectory at every observation time, shape (m, len(times)[, n])."""
        self._require_regular()
        traj = np.asarray(trajectories, dtype=np.uint64)
        m = traj.size
        x = self._initial(x0, m)
        t = np.zeros(m)
        out = np.empty((m, len(times)) + (() if self.n == 1 else (self.n,)))
        step = 0
        for j, tt in enumerate(np.asarray(times, dtype=float)):
            active = t < tt
            while active.any():
                idx = np.flatnonzero(active)
                # trajectories advance in lockstep by step index, so every trajectory
                # consumes counter ``step`` at its step-th move wherever it is
                xa, ta = self._advance(x[idx], t[idx], tt, seed, traj[idx], step, tag)
                x[idx], t[idx] = xa, ta
                step += 1
                active = t < tt
            out[:, j] = x
        return out

    def simulate(self, x0, horizon, seed, trajectory=0, tag=TAG_MAIN, stop=None, chunk=4096):
        """Dense-grid Euler-Maruyama path; same noise as ``sample_at`` for this trajectory."""
        self._require_regular()
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        traj = np.asarray([trajectory], dtype=np.uint64)
        x = self._initial(x0, 1)
        t = np.zeros(1)
        step = 0
        segs = []
        while True:
            ts, xs = [float(t[0])], [x[0].copy() if self.n > 1 else float(x[0])]
            while len(ts) <= chunk and t[0] < horizon:
                x, t = self._advance(x, t, float(horizon), seed, traj, step, tag)
                step += 1
                ts.append(float(t[0]))
                xs.append(x[0].copy() if self.n > 1 else float(x[0]))
            seg = GridSegment(ts[0], ts[-1], np.asarray(ts), np.asarray(xs))
            cut = stop_at(seg, stop)
            if cut is not None:
                segs.append(cut)
                break
            segs.append(seg)
            if t[0] >= horizon:
                break
        return Path(segs, self.n)


# --------------------------------------------------------------------------
# analytic criteria


def regularity_check(model: LangevinModel, r0=1.0, T_grid=(10.0, 1e2, 1e3, 1e4)):
    """Divergence of the one-dimensional (n = 1) or radial (n >= 2) regularity integral.

    For the polynomial-tail family the integrand grows like
    |x|^((1-2d)/beta + 1 - n) (radial form), so it diverges iff
    (1 - 2d)/beta >= n - 2.  Partial integrals on ``T_grid`` are reported
    as a numerical confirmation.
    """
    t, d, n = model.target, model.d, model.n
    if t.family != "polynomial-tail":
        return {"verdict": "inconclusive", "reason": "no analytic tail for this target", "partial_integrals": []}
    k = 1.0 / (2.0 * t.beta)
    expo = (1.0 - 2.0 * d) / t.beta
    diverges = expo >= n - 2
    partial = []
    for T in T_grid:
        if n == 1:
            # integral over [-T, T] of pi^(2d-1) = (1 + x^2)^(k(1-2d))
            val = 2.0 * integrate.quad(lambda x: (1.0 + x * x) ** (k * (1.0 - 2.0 * d)), 0.0, T, limit=200)[0]
        else:
            # sup over the sphere of <grad log pi, x> is -2k s^2/(1+s^2); the inner integral is closed form
            c = (1.0 + r0 * r0) ** (-(1.0 - 2.0 * d) * k)
            val = integrate.quad(
                lambda s: s ** (1 - n) * c * (1.0 + s * s) ** ((1.0 - 2.0 * d) * k), r0, T, limit=200
            )[0]
        partial.append(float(val))
    return {
        "verdict": "regular" if diverges else "not regular",
        "growth_exponent": expo + (0 if n == 1 else 1 - n),
        "partial_integrals": partial,
        "T_grid": list(T_grid),
    }


def drift_inequality_scan(model: LangevinModel, rho, radii=None, R0=1.0, rtol=1e-3):
    """Check L V <= -c V^(1-alpha) for |x| >= 2 R0 along the first axis, alpha = 2(beta - d)/rho."""
    if rho == 0:
        raise ValueError("rho must be nonzero")
    t = model.target
    alpha = 2.0 * (t.beta - model.d) / rho
    cond = 1.0 + t.gamma - rho - 2.0 * model.d
    regime = "polynomial" if 0 < alpha <= 1 else ("geometric" if alpha <= 0 and rho > 0 else "uniform" if rho < 0 and alpha <= 1 else "none")
    base = dict(alpha=alpha, R=2.0 * R0, rho=rho, condition=cond, regime=regime)
    if cond <= 0:
        return ScanResult("condition violated", c=None, reason=f"1 + gamma - rho - 2d = {cond:g} <= 0", **base)
    if alpha > 1:
        return ScanResult("refused", c=None, reason=f"alpha = {alpha:g} > 1: no rate/norm menu", **base)
    radii = np.geomspace(2.0 * R0, 1e4, 200) if radii is None else np.asarray(radii, dtype=float)
    radii = radii[radii >= 2.0 * R0]
    pts = t._axis_points(radii)
    V = tempered_lyapunov(t, rho, R0)
    LV = model.elliptic_apply(V, pts)
    closed = model.closed_form_LV(rho, pts)
    gap = np.abs(LV - closed) / np.maximum(np.abs(closed), 1e-300)
    if np.any((np.sign(LV) != np.sign(closed)) & (gap > rtol)):
        raise ConsistencyError("numeric L V and the closed form disagree in sign")
    v = np.asarray(V(pts), dtype=float)
    ratio = LV / np.abs(v) ** (1.0 - alpha)
    sup = float(ratio.max())
    verdict = "holds" if sup < 0 else "fails"
    return ScanResult(
        verdict,
        c=-sup if sup < 0 else None,
        radii=tuple(radii.tolist()),
        ratios=tuple(ratio.tolist()),
        max_rel_gap=float(gap.max()),
        **base,
    )


def theorem16_classify(beta, gamma, d, kappa):
    """Rate regime of the tempered diffusion for tail index beta, constant gamma and temperature d."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if d < 0:
        raise ValueError("temperature d must be nonnegative")
    if d < beta:
        top = 1.0 + gamma - 2.0 * beta
        if not 0 <= kappa < top:
            raise ValueError(f"kappa must satisfy 0 <= kappa < 1 + gamma - 2 beta = {top:g}")
        tau = (1.0 + gamma - 2.0 * beta - kappa) / (2.0 * (beta - d))
        return Regime("cold", tau, f"1+pi^-{kappa:g}", False, kappa)
    if d >= (1.0 + gamma) / 2.0:
        raise ValueError(f"d must satisfy d < (1 + gamma)/2 = {(1.0 + gamma) / 2.0:g}")
    top = 1.0 + gamma - 2.0 * d
    if not 0 < kappa < top:
        raise ValueError(f"kappa must satisfy 0 < kappa < 1 + gamma - 2d = {top:g}")
    return Regime("geometric", None, f"1+pi^-{kappa:g}", d > beta, kappa)


def general_diffusion_tau(beta_bar, gamma_bar, r_bar, l, kappa):
    """Supremum of polynomial rates for a general diffusion with the given growth constants."""
    if not l < 2:
        raise ValueError("need l < 2")
    if beta_bar <= 0 or gamma_bar <= 0:
        raise ValueError("beta_bar and gamma_bar must be positive")
    if not r_bar > (gamma_bar - beta_bar * l) / 2.0:
        raise ValueError(f"need r_bar > (gamma_bar - beta_bar l)/2 = {(gamma_bar - beta_bar * l) / 2.0:g}")
    top = l + (2.0 * r_bar - gamma_bar) / beta_bar
    if not 0 <= kappa < top:
        raise ValueError(f"kappa must satisfy 0 <= kappa < l + (2 r_bar - gamma_bar)/beta_bar = {top:g}")
    return (2.0 * (r_bar + beta_bar) - gamma_bar) / (beta_bar * (2.0 - l)) - 1.0 - kappa / (2.0 - l)


def quadrature_mean(target: TargetDensity, f):
    """pi(f) for a one-dimensional target by adaptive quadrature."""
    if target.n != 1:
        raise ValueError("quadrature reference only for n = 1")
    num = integrate.quad(lambda x: f(x) * math.exp(target.log_density(x)), -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]
    den = integrate.quad(lambda x: math.exp(target.log_density(x)), -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]
    return num / den
