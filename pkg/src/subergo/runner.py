"""Dispatch an :class:`ExperimentConfig` to the model modules and collect a
:class:`ResultBundle` of tables, JSON summaries, figures and an exit status."""

import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import convergence as conv
from . import cpou, drift, jump, langevin, plotting
from .config import ConfigError, ExperimentConfig
from .paths import ConstantSegment, HittingQuery, Interval, hitting_time, simulate_paths
from .rng import RNG_ID


@dataclass
class ResultBundle:
    metadata: dict
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)
    summary: dict = field(default_factory=dict)
    figures: list = field(default_factory=list)  # (filename, callable(path))
    gnuplot: dict = field(default_factory=dict)
    exit_status: int = 0
    failures: list = field(default_factory=list)

    def table_csv(self, name):
        cols, rows = self.tables[name]
        out = [",".join(cols)]
        for row in rows:
            out.append(",".join("" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)) for v in row))
        return "\n".join(out) + "\n"

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name in self.tables:
            p = out / f"{name}.csv"
            p.write_text(self.table_csv(name))
            written.append(p)
        for fname, fn in self.figures:
            fn(out / fname)
            written.append(out / fname)
        for fname, text in self.gnuplot.items():
            (out / fname).write_text(text)
            written.append(out / fname)
        (out / "summary.json").write_text(_dumps(self.summary))
        (out / "metadata.json").write_text(_dumps(self.metadata))
        written += [out / "summary.json", out / "metadata.json"]
        return written


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _dumps(d):
    return json.dumps(_clean(d), indent=2, sort_keys=True) + "\n"


def version_string():
    try:
        rev = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"{__version__}+g{rev}" if rev else __version__


# --------------------------------------------------------------------------
# model builders


def build_model(cfg: ExperimentConfig):
    m, kind = cfg.model, cfg.model_kind
    try:
        if kind == "jump":
            return build_jump(m)
        if kind == "langevin":
            t = langevin.TargetDensity.polynomial_tail(m.get("beta", 0.25), m.get("n", 1))
            return langevin.LangevinModel(t, m.get("d", 0.0), m.get("h0", 0.01))
        law = m.get("jump_law", {"family": "point-mass"})
        return cpou.CPOUModel(m.get("mu", 1.0), m.get("lambda", 1.0), build_law(law))
    except (TypeError, ValueError, KeyError) as err:
        raise ConfigError([f"model.{kind}: {err}"]) from err


def build_jump(m):
    p = dict(m["p"])
    lam = dict(m["lambda"])
    pf = p.pop("family")
    lf = lam.pop("family")
    if pf == "table":
        p = {"table": tuple(p["values"])}
    if lf == "table":
        lam = {"table": tuple(lam["values"])}
    return jump.JumpModel(jump.JumpWeights(pf, **p), jump.JumpRates(lf, **lam), m.get("lambda0", 1.0))


def build_law(law):
    law = dict(law)
    return cpou.JumpLaw(law.pop("family"), **law)


def _times(a):
    if "times" in a:
        return np.asarray(a["times"], dtype=float)
    return np.geomspace(a.get("t_lo", 1.0), a.get("t_hi", 100.0), int(a.get("points", 20)))


# --------------------------------------------------------------------------
# actions


def run_config(cfg: ExperimentConfig) -> ResultBundle:
    model = build_model(cfg)
    bundle = ResultBundle(
        metadata={
            "config": cfg.to_dict(),
            "version": version_string(),
            "rng": RNG_ID,
        }
    )
    handler = {
        ("jump", "converge"): _jump_converge,
        ("jump", "drift-check"): _jump_drift,
        ("jump", "nested-check"): _jump_nested,
        ("jump", "classify"): _jump_classify,
        ("jump", "rates"): _jump_rates,
        ("langevin", "converge"): _langevin_converge,
        ("langevin", "drift-check"): _langevin_drift,
        ("langevin", "classify"): _langevin_classify,
        ("langevin", "rates"): _langevin_classify,
        ("cpou", "drift-check"): _cpou_drift,
        ("cpou", "classify"): _cpou_classify,
        ("cpou", "rates"): _cpou_rates,
    }.get((cfg.model_kind, cfg.action["kind"]))
    if cfg.action["kind"] == "simulate":
        handler = _simulate
    if handler is None:
        raise ConfigError([f"action {cfg.action['kind']!r} is not available for model {cfg.model_kind!r}"])
    handler(cfg, model, bundle)
    _apply_expectations(cfg, bundle)
    return bundle


def _fail(bundle, msg):
    bundle.failures.append(msg)
    bundle.exit_status = 1


def _apply_expectations(cfg, bundle):
    s = bundle.summary
    for key, want in cfg.expect.items():
        if key == "certified":
            got = s.get("certificate", {}).get("verdict")
            if want and got != "certified":
                _fail(bundle, f"expected a certificate, got {got!r}")
        elif s.get(key) != want:
            _fail(bundle, f"expected {key} = {want!r}, got {s.get(key)!r}")
    if s.get("verdict") == "contradiction" and s.get("asserted"):
        _fail(bundle, "measured decay is slower than the guaranteed rate")


def _add_decay(bundle, name, series, fit, title):
    bundle.tables[name] = (conv.CSV_COLUMNS, series.rows())
    bundle.figures.append((f"{name}.png", lambda p: plotting.decay_figure(p, series.times, series.values, series.ci, fit, title)))
    bundle.gnuplot[f"{name}.gp"] = plotting.gnuplot_script(f"{name}.csv", f"{name}.gnuplot.png", title)


def _jump_converge(cfg, model, bundle):
    a = cfg.action
    leak_tol = cfg.numeric["leak_tol"]
    N = int(a.get("N", model.truncation_level(leak_tol)))
    t = _times(a)
    res = model.transient(N, int(a.get("x0", 0)), t)
    series = conv.DistanceSeries(t, res.distance, "exact-truncation", floor=res.error_bar, norm="TV")
    beta = float(a.get("beta", 2.0))
    tau = float(a.get("tau", beta - 1.0))
    slack = float(a.get("slack", 0.0))
    fit = conv.fit_exponent(series)
    verdict = conv.compare_to_prediction(fit, tau, slack)
    bundle.summary.update(
        {
            "N": N,
            "leak": model.leak(N),
            "max_error_bar": float(res.error_bar.max()),
            "fit": fit.to_dict(),
            "tau": tau,
            "slack": slack,
            "verdict": verdict,
            "asserted": bool(a.get("assert", True)),
        }
    )
    if a.get("certify"):
        cert = model.drift_certificate(beta)
        bundle.summary["certificate"] = cert.to_dict()
    _add_decay(bundle, "distance", series, fit, "exact TV distance to pi")


def _jump_drift(cfg, model, bundle):
    a = cfg.action
    cert = model.drift_certificate(float(a.get("beta", 2.0)), N=int(a.get("N", 1000)))
    bundle.summary["certificate"] = cert.to_dict()
    if cert.ratios is not None:
        bundle.tables["ratios"] = (
            ["state"] + [f"eta={e:.4g}" for e in cert.eta_grid],
            [[int(s)] + [float(r) for r in cert.ratios[:, k]] for k, s in enumerate(cert.domain)],
        )


def _jump_nested(cfg, model, bundle):
    a = cfg.action
    spec = model.nested_ladder(float(a.get("beta", 2.0)), int(a.get("p", 2)), float(a.get("hit_beta", 1.0)), int(a.get("N", 1000)))
    cert = drift.verify_nested(
        model,
        spec,
        delta=float(a.get("delta", 0.0)),
        mc_points=a.get("mc_points", ()),
        n_mc=int(a.get("n_mc", 0)),
        horizon=a.get("horizon"),
        seed=cfg.seed,
    )
    bundle.summary["certificate"] = cert.to_dict()


def _jump_classify(cfg, model, bundle):
    a = cfg.action
    obs = model.conductance_obstruction(float(a.get("m", 1.0)), int(a.get("i_max", 1000)))
    bundle.summary.update(
        {
            "conductance_infimum": obs["infimum"],
            "checkpoints": obs["checkpoints"],
            "prefix_infima": obs["prefix_infima"],
            "conductance_verdict": obs["verdict"],
            "obstructed": obs["verdict"] == "geometric ergodicity obstructed",
        }
    )
    bundle.tables["conductance"] = (["state", "bound"], [[int(i), float(b)] for i, b in zip(obs["states"], obs["bounds"])])
    bundle.figures.append(
        (
            "conductance.png",
            lambda p: plotting.profile_figure(p, obs["states"], [obs["bounds"]], ["2(1-exp(-lambda_i m))"], "state i", "bound"),
        )
    )
    bundle.gnuplot["conductance.gp"] = plotting.gnuplot_script("conductance.csv", "conductance.gnuplot.png", "conductance bound")


def _jump_rates(cfg, model, bundle):
    a = cfg.action
    menu = model.predicted_rates(a.get("rate_kind", "poly"), float(a.get("param", 2.0)))
    bundle.summary["menu"] = menu.to_dict()
    bundle.summary["menu_nonempty"] = bool(menu.entries)
    if "check_poly" in a:
        bundle.summary["poly_moment_finite"] = model.series_converges("poly", float(a["check_poly"]))
    bundle.tables["menu"] = (
        ["rate_kind", "rate_exponent", "log_power", "norm_base", "norm_exponent", "norm_log_power"],
        [[e.rate_kind, e.rate_exponent, e.log_power, e.base, e.norm_exponent, e.norm_log_power] for e in menu.entries],
    )


def _langevin_regime(cfg, model, bundle):
    a = cfg.action
    t = model.target
    try:
        reg = langevin.theorem16_classify(t.beta, t.gamma, model.d, float(a.get("kappa", 0.0))).to_dict()
    except ValueError as err:
        reg = {"regime": "rejected", "reason": str(err)}
    bundle.summary["classification"] = reg
    bundle.summary["regime"] = reg["regime"]
    bundle.summary["regularity"] = model.regularity
    bundle.summary["a4"] = t.a4_ratios()
    return reg


def _langevin_classify(cfg, model, bundle):
    a = cfg.action
    _langevin_regime(cfg, model, bundle)
    if "rho" in a:
        bundle.summary["scan"] = langevin.drift_inequality_scan(model, float(a["rho"])).to_dict()
    if "d_sweep" in a:
        rows = []
        for d in a["d_sweep"]:
            m2 = langevin.LangevinModel(model.target, d, model.h0)
            rows.append([float(d), m2.regularity["verdict"], float(m2.regularity["growth_exponent"])])
        bundle.tables["regularity"] = (["d", "verdict", "growth_exponent"], rows)
        bundle.summary["regular_d"] = [r[0] for r in rows if r[1] == "regular"]


def _langevin_drift(cfg, model, bundle):
    a = cfg.action
    scan = langevin.drift_inequality_scan(model, float(a.get("rho", 0.5)), R0=float(a.get("R0", 1.0)))
    bundle.summary["scan"] = scan.to_dict()
    bundle.summary["certificate"] = {"verdict": "certified" if scan.verdict == "holds" else scan.verdict}
    if scan.radii:
        bundle.tables["scan"] = (["radius", "ratio"], [[r, q] for r, q in zip(scan.radii, scan.ratios)])


def _langevin_converge(cfg, model, bundle):
    a = cfg.action
    reg = _langevin_regime(cfg, model, bundle)
    if model.n != 1:
        raise ConfigError(["langevin converge needs n = 1 (quadrature reference)"])
    t = _times(a)
    basis = [lambda x: 1.0 / (1.0 + x * x), np.tanh, lambda x: np.exp(-x * x)]
    refs = [langevin.quadrature_mean(model.target, g) for g in (lambda x: 1.0 / (1.0 + x * x), math.tanh, lambda x: math.exp(-x * x))]
    S = model.sample_at(float(a.get("x0", 0.0)), t, cfg.seed, np.arange(int(cfg.numeric["n"])))
    vals, cis = [], []
    for j in range(t.size):
        g = conv.mc_fnorm_gap(S[:, j], refs, basis)
        vals.append(g["estimate"])
        cis.append(g["half_width"])
    series = conv.DistanceSeries(t, vals, "mc-fnorm", ci=cis, norm="TV lower bound (3-function basis)")
    tau = reg.get("tau_sup")
    try:
        # Monte Carlo floors are CI half-widths, so a looser floor factor than the exact default
        fit = conv.fit_exponent(series, conv.default_window(series, floor_factor=3.0))
        verdict = conv.compare_to_prediction(fit, tau, float(a.get("slack", 0.0))) if tau else "inconclusive"
    except ValueError as err:
        fit, verdict = None, "inconclusive"
        bundle.summary["fit_error"] = str(err)
    bundle.summary.update(
        {
            "fit": None if fit is None else fit.to_dict(),
            "tau": tau,
            "verdict": verdict,
            "asserted": bool(a.get("assert", False)),
            "pi_refs": refs,
        }
    )
    _add_decay(bundle, "distance", series, fit, "MC distance lower bound")


def _cpou_drift(cfg, model, bundle):
    a = cfg.action
    grid = np.geomspace(float(a.get("grid_lo", math.e**2)), float(a.get("grid_hi", 1e6)), int(a.get("grid_points", 120)))
    cert = model.lemma18_certificate(float(a.get("r", 2.0)), grid)
    bundle.summary["certificate"] = cert.to_dict()
    if cert.ratios is not None:
        bundle.tables["ratios"] = (
            ["x"] + [f"eta={e:.4g}" for e in cert.eta_grid],
            [[float(x)] + [float(r) for r in cert.ratios[:, k]] for k, x in enumerate(grid)],
        )
        bundle.figures.append(
            (
                "ratios.png",
                lambda p: plotting.profile_figure(
                    p, grid, list(cert.ratios), [f"eta={e:.3g}" for e in cert.eta_grid], "x", "A V^eta / V^(eta-alpha)"
                ),
            )
        )


def _cpou_classify(cfg, model, bundle):
    a = cfg.action
    laws = [build_law(l) for l in a.get("laws", [])] or [model.F]
    rows = []
    for F in laws:
        c = cpou.heavy_tail_classify(F)
        rows.append([json.dumps(F.to_dict(), sort_keys=True).replace(",", ";"), c["verdict"], c["mean_log_jump"]])
    bundle.tables["classification"] = (["law", "verdict", "mean_log_jump"], rows)
    bundle.summary["classification"] = [_clean(cpou.heavy_tail_classify(F)) for F in laws]
    if "survival_times" in a:
        x0 = float(a.get("x0", 2.0))
        n = int(cfg.numeric["n"])
        ts = [float(t) for t in a["survival_times"]]
        q = HittingQuery(Interval(0.0, 1.0), 0.0)
        paths = simulate_paths(model, x0, max(ts), cfg.seed, np.arange(n), stop=q)
        taus = np.array([hitting_time(p, q) for p in paths])
        srow, ok = [], True
        for t in ts:
            s = float(np.mean(taus > t))
            hw = 1.959963984540054 * math.sqrt(max(s * (1 - s), 1e-300) / n)
            bound = model.survival_lower_bound(t)
            holds = s >= bound - 4 * hw
            ok &= holds
            srow.append([t, s, hw, bound, "yes" if holds else "no"])
        bundle.tables["survival"] = (["t", "mc_survival", "ci", "lower_bound", "holds"], srow)
        bundle.summary["survival_bound_holds"] = bool(ok)


def _cpou_rates(cfg, model, bundle):
    r = float(cfg.action.get("r", 2.0))
    m = cpou.tail_moment(model.F, r)
    bundle.summary["m_r"] = m
    bundle.summary["predicted_rate_exponent"] = r - 1.0 if m["finite"] else None


def _simulate(cfg, model, bundle):
    a = cfg.action
    x0 = a.get("x0", 0)
    T = float(cfg.numeric["horizon"])
    path = model.simulate(x0, T, cfg.seed, trajectory=int(a.get("trajectory", 0)))
    rows = []
    for seg in path.segments:
        if isinstance(seg, ConstantSegment):
            rows.append([seg.start, float(seg.state)])
        elif hasattr(seg, "times"):
            pts = seg.points if seg.points.ndim == 1 else np.linalg.norm(seg.points, axis=-1)
            rows += [[float(t), float(v)] for t, v in zip(seg.times, pts)]
        else:
            rows.append([seg.start, float(seg.x0)])
    end = path(T)
    rows.append([T, float(np.linalg.norm(end)) if np.ndim(end) else float(end)])
    bundle.tables["path"] = (["t", "state"], rows)
    bundle.summary["segments"] = len(path.segments)
    tt = np.array([r[0] for r in rows])
    vv = np.array([r[1] for r in rows])
    bundle.figures.append(
        ("path.png", lambda p: plotting.profile_figure(p, tt, [vv], ["state"], "t", "X_t", logx=False))
    )
