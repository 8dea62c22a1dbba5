"""How the route length cap changes the win-probability sweep.

Runs the Monte Carlo grid at desk scale for each max_intermediate value
and prints the (9,1) likelihood ratio per slow mean plus the regression
R^2 of every outcome.
"""

import argparse
import math
from dataclasses import replace

from dexfrag.config import load_config
from dexfrag.pipeline import WINPROB_HEADER, winprob_rows
from dexfrag.regression import OUTCOMES, reproduce_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--caps", type=int, nargs="+", default=[0, 1, 2, 4, 8])
    ap.add_argument("--seed", type=int, default=2020)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    base = load_config(desk_scale=True, seed=args.seed)
    for cap in args.caps:
        cfg = replace(base, max_intermediate=cap)
        rows = [dict(zip(WINPROB_HEADER, r)) for r in winprob_rows(cfg, args.workers)]
        peak = [r["ratio_a_over_b"] for r in rows if r["eta_a"] == 9]
        n_inf = sum(not math.isfinite(r["ratio_a_over_b"]) for r in rows)
        print(f"max_intermediate={cap}: (9,1) ratio by slow mean "
              + " ".join(f"{x:.3g}" for x in peak) + f"  ({n_inf} infinite cells)")
        try:
            fits = reproduce_table(rows)
            print("  R2 " + "  ".join(f"{o}={fits[o].r_squared:.3f}" for o in OUTCOMES))
        except Exception as exc:  # too few finite cells to fit
            print(f"  regression failed: {exc}")


if __name__ == "__main__":
    main()
