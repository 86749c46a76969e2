"""Command line entry point.

    wwlab ww-decay --system skew:3:sqrt2-1 --Ns 256:16384 --out results/skew
    wwlab bourgain-check --config configs/bourgain_j2.yaml --seed 7

Precedence for every setting: flag, then config file, then built-in default.
The seed additionally falls back to $WWLAB_SEED before the built-in 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from .config import Source, build_config, parse_text
from .errors import BudgetError, ConfigError, ThresholdError
from .runner import run

SEED_ENV = "WWLAB_SEED"
COMMANDS = {
    "ww-decay": "ww-decay",
    "bourgain-check": "bourgain",
    "vdc-check": "vdc",
    "seminorm": "seminorm",
    "return-times": "return-times",
    "rt-chain": "rt-chain",
    "classical-check": "classical",
}
CHECKS = ("bourgain", "vdc", "rt-chain", "classical")


def parse_system_flag(text: str):
    """``rotation:golden``, ``skew:3:sqrt2-1``, ``bernoulli:0.5,0.5`` or inline YAML."""
    text = text.strip()
    if text.startswith("{"):
        return yaml.safe_load(text)
    kind, *rest = text.split(":")
    if kind == "rotation" and len(rest) == 1:
        return {"kind": "rotation", "angle": rest[0]}
    if kind == "skew" and len(rest) == 2:
        return {"kind": "skew", "dim": int(rest[0]), "angle": rest[1]}
    if kind == "bernoulli" and len(rest) <= 1:
        return {"kind": "bernoulli", **({"probs": [float(p) for p in rest[0].split(",")]} if rest else {})}
    raise ConfigError(f"--system: cannot parse {text!r}")


def parse_Ns_flag(text: str):
    """``256,512,1024`` or the geometric grid ``start:stop[:factor]``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"--Ns: expected start:stop[:factor], got {text!r}")
        return {"start": parts[0], "stop": parts[1], "factor": parts[2] if len(parts) == 3 else 2}
    return [int(p) for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wwlab", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON experiment file")
        p.add_argument("--system", help="system shorthand or inline YAML mapping")
        p.add_argument("--observable", help="inline YAML observable mapping")
        p.add_argument("--order", type=int)
        p.add_argument("--Ns", help="comma list or start:stop[:factor]")
        p.add_argument("--p", type=int, choices=(1, 2))
        p.add_argument("--beta", type=float)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--oversample", type=int)
        p.add_argument("--refine", choices=("none", "parabolic", "golden"))
        p.add_argument("--workers", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output path prefix; writes <out>.csv and <out>.json")
        p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return ap


def resolve(args, environ=None):
    """Merge config file, flags and environment into a validated config."""
    environ = os.environ if environ is None else environ
    experiment = COMMANDS[args.command]
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data, src = parse_text(fh.read(), args.config)
        if data.get("experiment", experiment) != experiment:
            raise ConfigError(f"{args.config}: experiment is {data['experiment']!r} but command runs {experiment!r}")
    else:
        data, src = {}, Source("<flags>")
    data["experiment"] = experiment
    flags = {
        "system": parse_system_flag(args.system) if args.system else None,
        "observable": yaml.safe_load(args.observable) if args.observable else None,
        "order": args.order,
        "Ns": parse_Ns_flag(args.Ns) if args.Ns else None,
        "p": args.p,
        "beta": args.beta,
        "samples": args.samples,
        "seed": args.seed,
        "oversample": args.oversample,
        "refine": args.refine,
        "workers": args.workers,
        "trials": args.trials,
        "out": args.out,
    }
    if flags["seed"] is None and "seed" not in data and environ.get(SEED_ENV):
        try:
            flags["seed"] = int(environ[SEED_ENV])
        except ValueError as e:
            raise ConfigError(f"${SEED_ENV}: expected an integer, got {environ[SEED_ENV]!r}") from e
    for key, value in flags.items():
        if value is None:
            continue
        if key == "observable":
            data.pop("observables", None)
        data[key] = value
        src.lines = {k: v for k, v in src.lines.items() if not k or k[0] != key}
    return build_config(data, src)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        if args.print_config:
            print(json.dumps(cfg.describe(), indent=2, sort_keys=True))
            return 0
        result = run(cfg)
    except (ConfigError, BudgetError, ThresholdError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    csv_path, json_path = result.write(cfg.out)
    s = result.summary
    line = f"{cfg.experiment}: {s['rows']} rows -> {csv_path}, {json_path}"
    if "pass" in s:
        line += f" | pass {s['pass']} fail {s['fail']}"
    if isinstance(s.get("fit"), dict) and "slope" in s["fit"]:
        line += f" | slope {s['fit']['slope']:.4f} r2 {s['fit']['r2']:.3f}"
    print(line)
    return 1 if cfg.experiment in CHECKS and s.get("fail", 0) else 0


if __name__ == "__main__":
    sys.exit(main())
