"""Command-line experiment runner.

Verbs: ``run`` (preset, config file, or manifest), ``list-presets``,
``verify-model`` and ``describe``.  Every preset parameter can be overridden
with repeated ``--set key=value`` flags; a run writes its resolved manifest
first, and re-running from that manifest reproduces the artifacts byte for
byte.  Divergent schemes are recorded results, not failures: the exit code
stays zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigInvalid, MVSDEError
from .experiments import (list_presets, preset_config, run_experiment,
                          validate_config)
from .model import builtin_model, verify_model


def _parse_set(pairs):
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigInvalid(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            overrides[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key.strip()] = raw.strip()
    return overrides


def _resolve(args):
    sources = [bool(args.preset), bool(args.config), bool(args.manifest)]
    if sum(sources) != 1:
        raise ConfigInvalid("give exactly one of: a preset name, --config, --manifest")
    preset = None
    if args.preset:
        preset = args.preset
        cfg = preset_config(preset, full=args.full)
    else:
        cfg = load_config(args.config or args.manifest)
    cfg.update(_parse_set(args.set))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.no_h_constraint:
        cfg["enforce_h_constraint"] = False
    return preset, cfg


def _cmd_run(args):
    preset, cfg = _resolve(args)
    out = Path(args.out) if args.out else Path("mvsde_runs") / (preset or "custom")
    out_dir = run_experiment(cfg, out, threads=args.threads, preset=preset)
    print(f"artifacts written to {out_dir}")
    return 0


def _cmd_describe(args):
    preset, cfg = _resolve(args)
    cfg = validate_config(cfg)
    print(json.dumps({"preset": preset, "config": cfg}, indent=2, sort_keys=True))
    return 0


def _cmd_list_presets(args):
    for name, desc in list_presets():
        print(f"{name:32s} {desc}")
    return 0


def _cmd_verify_model(args):
    model = builtin_model(args.model, args.d)
    reports = verify_model(model)
    failures = 0
    for report in reports:
        print(str(report))
        failures += 0 if report.passed else 1
    if failures:
        print(f"{failures} check(s) outside the declared constants "
              "(reported only; simulation stays available)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvsde",
        description="Interacting-particle experiments for McKean-Vlasov "
                    "equations with super-linear convolution kernels.")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a preset, config file, or manifest")
    describe = sub.add_parser("describe", help="print the resolved configuration")
    for p in (run, describe):
        p.add_argument("preset", nargs="?", help="preset name (see list-presets)")
        p.add_argument("--config", help="path to a config file")
        p.add_argument("--manifest", help="path to a manifest.json from a previous run")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory (run only)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--full", action="store_true",
                       help="use the full study grids (adds the finest h)")
        p.add_argument("--no-h-constraint", action="store_true",
                       help="disable the stepsize-rule check")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    run.set_defaults(fn=_cmd_run)
    describe.set_defaults(fn=_cmd_describe)

    lp = sub.add_parser("list-presets", help="list available presets")
    lp.set_defaults(fn=_cmd_list_presets)

    vm = sub.add_parser("verify-model", help="run the assumption verifiers")
    vm.add_argument("model", help="built-in model name")
    vm.add_argument("-d", type=int, default=None, help="state dimension")
    vm.set_defaults(fn=_cmd_verify_model)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "verify-model" and args.d is None:
        args.d = {"vdp2d": 2, "poc-dd": 2}.get(args.model, 1)
    try:
        return args.fn(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except MVSDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
