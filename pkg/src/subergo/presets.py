"""Built-in experiments, one per worked example of the three process families."""

import copy

_JUMP_POLY = {"p": {"family": "power", "s": 4.0}, "lambda": {"family": "power", "a": 1.0, "scale": 1.0}, "lambda0": 1.0}

PRESETS = {
    "jump-prop12": {
        "anchor": "jump process: polynomial rate beta-1 from the inverse-rate moment sum p_i lambda_i^-beta",
        "model": {"jump": _JUMP_POLY},
        "action": {
            "kind": "converge",
            "x0": 0,
            "t_lo": 5.0,
            "t_hi": 200.0,
            "points": 30,
            "beta": 2.0,
            "slack": 0.1,
            "assert": True,
            "certify": True,
        },
        "numeric": {"seed": 1},
        "expect": {"certified": True, "verdict": "no-slower"},
    },
    "jump-prop14-log": {
        "anchor": "jump process: logarithmic rates from log-moments of 1/lambda when polynomial moments fail",
        "model": {
            "jump": {"p": {"family": "geometric", "q": 0.5}, "lambda": {"family": "geometric", "rho": 0.6, "scale": 1.0}}
        },
        "action": {"kind": "rates", "rate_kind": "log", "param": 2.0, "check_poly": 2.0},
        "numeric": {"seed": 1},
        "expect": {"menu_nonempty": True},
    },
    "jump-prop14-subexp": {
        "anchor": "jump process: subexponential rates exp(2z(1-p) t^1/2) from exponential moments of 1/lambda",
        "model": {"jump": {"p": {"family": "geometric", "q": 0.5}, "lambda": {"family": "power", "a": 1.0, "scale": 1.0}}},
        "action": {"kind": "rates", "rate_kind": "subexp", "param": 0.5},
        "numeric": {"seed": 1},
        "expect": {"menu_nonempty": True},
    },
    "jump-lemma10-conductance": {
        "anchor": "jump process: vanishing skeleton conductance obstructs geometric ergodicity when liminf lambda = 0",
        "model": {"jump": _JUMP_POLY},
        "action": {"kind": "classify", "m": 1.0, "i_max": 1000},
        "numeric": {"seed": 1},
        "expect": {"obstructed": True},
    },
    "langevin-thm16-cold": {
        "anchor": "tempered Langevin diffusion, cold regime d < beta: polynomial rate bound tau < (1+gamma-2beta-kappa)/(2(beta-d))",
        "model": {"langevin": {"family": "polynomial-tail", "beta": 0.25, "n": 1, "d": 0.0, "h0": 0.01}},
        "action": {
            "kind": "converge",
            "x0": 10.0,
            "t_lo": 5.0,
            "t_hi": 100.0,
            "points": 12,
            "kappa": 0.0,
            "rho": 0.5,
            "assert": False,
        },
        "numeric": {"seed": 1, "n": 1000},
        "expect": {"regime": "cold"},
    },
    "langevin-thm16-geometric": {
        "anchor": "tempered Langevin diffusion at or above the critical temperature d = beta: geometric V-ergodicity, V = 1 + pi^-kappa",
        "model": {"langevin": {"family": "polynomial-tail", "beta": 0.25, "n": 1, "d": 0.25, "h0": 0.01}},
        "action": {"kind": "classify", "kappa": 0.5, "rho": 0.5},
        "numeric": {"seed": 1},
        "expect": {"regime": "geometric"},
    },
    "langevin-regularity-sweep": {
        "anchor": "tempered Langevin diffusion: non-explosion criterion, admissible temperatures [0, (1 + beta(2-n))/2]",
        "model": {"langevin": {"family": "polynomial-tail", "beta": 0.25, "n": 1, "d": 0.0, "h0": 0.01}},
        "action": {"kind": "classify", "kappa": 0.0, "d_sweep": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.625, 0.65, 0.7]},
        "numeric": {"seed": 1},
        "expect": {},
    },
    "cpou-lemma17-classify": {
        "anchor": "storage process: infinite log-mean jumps break positive recurrence, heavy log-jump law breaks geometric ergodicity",
        "model": {"cpou": {"mu": 1.0, "lambda": 1.0, "jump_law": {"family": "pareto-log", "k": 3.0}}},
        "action": {
            "kind": "classify",
            "laws": [
                {"family": "pareto-log", "k": 1.5},
                {"family": "pareto-log", "k": 3.0},
                {"family": "point-mass", "u0": 1.0},
                {"family": "log-weibull", "beta": 0.5},
            ],
        },
        "numeric": {"seed": 1},
        "expect": {},
    },
    "cpou-lemma18-certify": {
        "anchor": "storage process: polynomial rate (1+t)^(r-1) when the log-moment m_r is finite",
        "model": {"cpou": {"mu": 1.0, "lambda": 1.0, "jump_law": {"family": "pareto-log", "k": 4.0}}},
        "action": {"kind": "drift-check", "r": 2.0, "grid_lo": 7.38905609893065, "grid_hi": 1e6, "grid_points": 120},
        "numeric": {"seed": 1},
        "expect": {"certified": True},
    },
    "cpou-eq23-survival": {
        "anchor": "storage process: lower bound on P_2(tau_[0,1] > t) from one large early jump",
        "model": {"cpou": {"mu": 1.0, "lambda": 1.0, "jump_law": {"family": "pareto-log", "k": 3.0}}},
        "action": {"kind": "classify", "survival_times": [1.0, 2.0, 5.0], "x0": 2.0},
        "numeric": {"seed": 1, "n": 20000},
        "expect": {"survival_bound_holds": True},
    },
}


def list_presets():
    return [{"name": k, "anchor": v["anchor"], "action": v["action"]["kind"]} for k, v in PRESETS.items()]


def preset_config(name, seed=None):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; try one of {sorted(PRESETS)}")
    raw = copy.deepcopy(PRESETS[name])
    raw["name"] = name
    if seed is not None:
        raw["numeric"]["seed"] = int(seed)
    return raw
