"""Experiment configuration: TOML (or an equivalent JSON mirror) with
[model.<kind>], [action], [numeric] and [output] sections."""

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MODEL_KINDS = ("jump", "langevin", "cpou")
ACTIONS = ("simulate", "drift-check", "nested-check", "converge", "classify", "rates")
NUMERIC_DEFAULTS = {"n": 1000, "horizon": 100.0, "quad_tol": 1e-8, "leak_tol": 1e-10}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    name: str
    model_kind: str
    model: dict
    action: dict
    numeric: dict
    output: dict = field(default_factory=dict)
    anchor: str = ""
    expect: dict = field(default_factory=dict)

    @property
    def seed(self):
        return int(self.numeric["seed"])

    def to_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "model": {self.model_kind: self.model},
            "action": self.action,
            "numeric": self.numeric,
            "output": self.output,
            "expect": self.expect,
        }


def _positive_numbers(d, path, problems):
    for k, v in d.items():
        if k.endswith("tol") and not (isinstance(v, (int, float)) and v > 0):
            problems.append(f"{path}.{k} must be a positive number, got {v!r}")


def validate(raw: dict) -> ExperimentConfig:
    """Check the whole document and report every problem at once."""
    problems = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a table"])
    known = {"name", "anchor", "model", "action", "numeric", "output", "expect"}
    for k in raw:
        if k not in known:
            problems.append(f"unknown top-level section {k!r}")

    model = raw.get("model")
    kind, params = None, {}
    if not isinstance(model, dict) or not model:
        problems.append("missing [model.<kind>] section (one of jump, langevin, cpou)")
    else:
        kinds = [k for k in model if k in MODEL_KINDS]
        unknown = [k for k in model if k not in MODEL_KINDS]
        if unknown:
            problems.append(f"unknown model kind(s) {unknown}; expected one of {list(MODEL_KINDS)}")
        if len(kinds) > 1:
            problems.append(f"exactly one model section allowed, found {kinds}")
        elif len(kinds) == 1:
            kind = kinds[0]
            params = model[kind]
            if not isinstance(params, dict):
                problems.append(f"model.{kind} must be a table")
                params = {}

    action = raw.get("action")
    if not isinstance(action, dict) or "kind" not in action:
        problems.append(f"missing [action] with kind = one of {list(ACTIONS)}")
        action = {}
    elif action["kind"] not in ACTIONS:
        problems.append(f"action.kind {action['kind']!r} not one of {list(ACTIONS)}")

    numeric = raw.get("numeric")
    if not isinstance(numeric, dict):
        problems.append("missing [numeric] section")
        numeric = {}
    if "seed" not in numeric:
        problems.append("numeric.seed is mandatory")
    else:
        s = numeric["seed"]
        if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
            problems.append(f"numeric.seed must be an integer in [0, 2^64), got {s!r}")
    _positive_numbers(numeric, "numeric", problems)
    _positive_numbers(action, "action", problems)
    if "n" in numeric and not (isinstance(numeric["n"], int) and numeric["n"] >= 1):
        problems.append("numeric.n must be a positive integer")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        problems.append("[output] must be a table")
        output = {}
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        model_kind=kind,
        model=dict(params),
        action=dict(action),
        numeric={**NUMERIC_DEFAULTS, **numeric},
        output=dict(output),
        anchor=str(raw.get("anchor", "")),
        expect=dict(raw.get("expect", {})),
    )


def load(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        raw = json.loads(text)
    else:
        raw = tomllib.loads(text)
    return validate(raw)
