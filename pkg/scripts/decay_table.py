"""Print the decay series and power-type fit of a ww-decay or return-times config.

    python3 scripts/decay_table.py configs/ww_decay_bernoulli.yaml --samples 64
"""

from __future__ import annotations

import argparse

from wwlab.config import load_config
from wwlab.runner import run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--samples", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    overrides = {"workers": args.workers}
    if args.samples:
        overrides["samples"] = args.samples
    cfg = load_config(args.config, overrides)
    if cfg.experiment not in ("ww-decay", "return-times"):
        ap.error(f"expected a ww-decay or return-times config, got {cfg.experiment}")
    result = run(cfg)
    print(f"{'N':>7} {'value':>14} {'certified':>14} {'stderr':>11}")
    for r in result.rows:
        print(f"{r['N']:>7} {r['value']:>14.6e} {r['certified_upper']:>14.6e} {r['stderr']:>11.3e}")
    fit = result.summary["fit"]
    print(f"slope {fit['slope']:.4f}  intercept {fit['intercept']:.4f}  r2 {fit['r2']:.4f}  points {fit['points']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
