"""Command line: ``subergo run <config>``, ``subergo preset <name>``, ``subergo list``.

Each run writes a bundle (CSV tables, summary.json, metadata.json, PNG
figures and gnuplot scripts) under ``--out`` and prints a delimited
summary on stdout.  Thread count comes from ``--threads`` or
SUBERGO_THREADS.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as config_mod
from . import presets
from .config import ConfigError

DELIM = "=" * 72


def _print_summary(cfg, bundle, out_dir, written, stream):
    print(DELIM, file=stream)
    print(f"experiment: {cfg.name}", file=stream)
    if cfg.anchor:
        print(f"anchor: {cfg.anchor}", file=stream)
    print(f"model: {cfg.model_kind}  action: {cfg.action['kind']}  seed: {cfg.seed}", file=stream)
    s = bundle.summary
    for key in ("verdict", "regime", "obstructed", "survival_bound_holds", "menu_nonempty", "regular_d"):
        if key in s:
            print(f"{key}: {json.dumps(s[key])}", file=stream)
    if "fit" in s and s["fit"]:
        f = s["fit"]
        print(f"fit slope: {f['slope']:.4f} +/- {f['slope_stderr']:.4f} on [{f['window'][0]:g}, {f['window'][1]:g}]", file=stream)
    if "tau" in s and s["tau"] is not None:
        print(f"predicted rate exponent: {s['tau']:g}", file=stream)
    cert = s.get("certificate")
    if cert:
        line = f"certificate: {cert.get('verdict')}"
        if cert.get("label"):
            line += f" ({cert['label']})"
        if cert.get("reason"):
            line += f": {cert['reason']}"
        print(line, file=stream)
    for msg in bundle.failures:
        print(f"FAILED: {msg}", file=stream)
    print(f"output: {out_dir} ({len(written)} files)", file=stream)
    print(f"exit status: {bundle.exit_status}", file=stream)
    print(DELIM, file=stream)


def execute(cfg, out_root, stream=None):
    """Run a validated config, write its bundle under out_root/<name>, return the exit status."""
    from .runner import run_config

    stream = stream or sys.stdout
    bundle = run_config(cfg)
    out_dir = Path(cfg.output.get("dir", Path(out_root) / cfg.name))
    written = bundle.write(out_dir)
    _print_summary(cfg, bundle, out_dir, written, stream)
    return bundle.exit_status


def build_parser():
    ap = argparse.ArgumentParser(prog="subergo", description="Subgeometric ergodicity experiments.")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: SUBERGO_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config (TOML or JSON)")
    r.add_argument("config")
    r.add_argument("--out", default="out")

    p = sub.add_parser("preset", help="run a built-in experiment")
    p.add_argument("name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")

    sub.add_parser("list", help="list built-in experiments")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        os.environ["SUBERGO_THREADS"] = str(args.threads)

    if args.command == "list":
        for p in presets.list_presets():
            print(f"{p['name']:<28} {p['action']:<12} {p['anchor']}")
        return 0
    try:
        if args.command == "run":
            cfg = config_mod.load(args.config)
        else:
            try:
                raw = presets.preset_config(args.name, args.seed)
            except KeyError as err:
                print(f"error: {err.args[0]}", file=sys.stderr)
                return 2
            cfg = config_mod.validate(raw)
        return execute(cfg, args.out)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
