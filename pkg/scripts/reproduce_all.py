"""Run every stage with a config file and print the regression table.

    python3 scripts/reproduce_all.py --config configs/default.toml --out results
"""

import argparse
import time
from pathlib import Path

from dexfrag.config import load_config
from dexfrag.pipeline import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=Path("configs/default.toml"))
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--desk-scale", action="store_true")
    ap.add_argument("--svg", action="store_true")
    args = ap.parse_args()

    cfg = load_config(args.config, desk_scale=args.desk_scale)
    t0 = time.perf_counter()
    doc = run_pipeline(cfg, args.out, workers=args.workers, fmt_="svg" if args.svg else "csv")
    print(f"{len(doc['files'])} files in {time.perf_counter() - t0:.1f} s, fingerprint {doc['fingerprint']}")
    print((args.out / "table2.txt").read_text())


if __name__ == "__main__":
    main()
