import json
import subprocess
import sys

import pytest

from subergo import cli, config, presets
from subergo.config import ConfigError

FAST_TOML = """
name = "two-state"

[model.jump]
lambda0 = 1.0
p = { family = "table", values = [1.0] }
lambda = { family = "table", values = [1.0] }

[action]
kind = "simulate"
x0 = 0

[numeric]
seed = 3
horizon = 10.0
"""


def test_validate_reports_every_problem():
    with pytest.raises(ConfigError) as err:
        config.validate({"model": {"jump": {}, "cpou": {}}, "action": {"kind": "dance"}, "numeric": {"quad_tol": -1}})
    msgs = "\n".join(err.value.problems)
    assert "exactly one model" in msgs
    assert "dance" in msgs
    assert "seed is mandatory" in msgs
    assert "quad_tol" in msgs


def test_defaults_filled():
    cfg = config.validate(presets.preset_config("jump-prop12"))
    assert cfg.numeric["leak_tol"] == 1e-10
    assert cfg.seed == 1


def test_load_toml_and_json(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(FAST_TOML)
    a = config.load(p)
    q = tmp_path / "c.json"
    q.write_text(json.dumps(a.to_dict()))
    b = config.load(q)
    assert a.model == b.model and a.action == b.action


def test_run_writes_bundle(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text(FAST_TOML)
    rc = cli.main(["run", str(p), "--out", str(tmp_path / "out")])
    assert rc == 0
    out = tmp_path / "out" / "two-state"
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["rng"].startswith("philox4x32-10")
    assert meta["config"]["numeric"]["seed"] == 3
    assert (out / "path.csv").read_text().startswith("t,state")
    assert (out / "path.png").stat().st_size > 0
    text = capsys.readouterr().out
    assert "experiment: two-state" in text and "exit status: 0" in text


def test_unknown_preset_and_bad_config(tmp_path, capsys):
    assert cli.main(["preset", "nope"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[action]\nkind='simulate'\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "numeric.seed is mandatory" in capsys.readouterr().err


def test_converge_not_available_for_storage_model(tmp_path):
    raw = presets.preset_config("cpou-lemma18-certify")
    raw["action"] = {"kind": "converge"}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(raw))
    assert cli.main(["run", str(p), "--out", str(tmp_path)]) == 2


def test_failed_expectation_sets_exit_status(tmp_path):
    raw = presets.preset_config("jump-prop12")
    raw["action"] = {"kind": "drift-check", "beta": 3.0}
    raw["expect"] = {"certified": True}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(raw))
    assert cli.main(["run", str(p), "--out", str(tmp_path)]) == 1


def test_list(capsys):
    assert cli.main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(presets.PRESETS)


def test_preset_seed_override():
    assert presets.preset_config("jump-prop12", seed=9)["numeric"]["seed"] == 9
    # the table itself is untouched
    assert presets.PRESETS["jump-prop12"]["numeric"]["seed"] == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "subergo", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "jump-prop12" in r.stdout


@pytest.mark.parametrize("name", ["jump-prop14-log", "jump-prop14-subexp", "langevin-thm16-geometric", "cpou-lemma17-classify"])
def test_fast_presets_pass(tmp_path, name):
    assert cli.main(["preset", name, "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / name / "summary.json").read_text())
    assert s


def test_storage_classify_preset_verdicts(tmp_path):
    cli.main(["preset", "cpou-lemma17-classify", "--out", str(tmp_path)])
    s = json.loads((tmp_path / "cpou-lemma17-classify" / "summary.json").read_text())
    assert [c["verdict"] for c in s["classification"]] == [
        "not-positive-recurrent",
        "not-geometric",
        "no-obstruction",
        "not-geometric",
    ]
