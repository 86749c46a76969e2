"""Run every experiment config in configs/ and write CSV and JSON reports.

    python3 scripts/run_all.py                      # all configs
    python3 scripts/run_all.py --only ww_decay      # configs whose name contains ww_decay
    python3 scripts/run_all.py --out-dir results --workers 4
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from wwlab.config import load_config
from wwlab.runner import run

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--only", default="", help="substring filter on config file names")
    ap.add_argument("--out-dir", type=Path, default=ROOT / "results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    failures = 0
    for path in sorted(args.configs.glob("*.yaml")):
        if args.only not in path.stem:
            continue
        cfg = load_config(path, {"workers": args.workers, "out": str(args.out_dir / path.stem)})
        t0 = time.perf_counter()
        result = run(cfg)
        csv_path, _ = result.write(cfg.out)
        s = result.summary
        line = f"{path.stem:<24} {time.perf_counter() - t0:7.1f}s  {s['rows']:>5} rows"
        if "pass" in s:
            line += f"  pass {s['pass']} fail {s['fail']}"
            failures += s["fail"]
        if isinstance(s.get("fit"), dict) and "slope" in s["fit"]:
            line += f"  slope {s['fit']['slope']:.4f} r2 {s['fit']['r2']:.3f}"
        print(f"{line}  -> {csv_path}")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
