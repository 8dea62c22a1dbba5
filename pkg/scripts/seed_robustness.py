"""Regression signs and R^2 ordering across master seeds, at desk scale."""

import argparse
from dataclasses import replace

from dexfrag.config import load_config
from dexfrag.pipeline import WINPROB_HEADER, winprob_rows
from dexfrag.regression import reproduce_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(1, 11)) + [2020])
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    base = load_config(desk_scale=True)
    held = 0
    for s in args.seeds:
        rows = [dict(zip(WINPROB_HEADER, r)) for r in winprob_rows(replace(base, seed=s), args.workers)]
        f = reproduce_table(rows)
        ratio, pb, pa = f["ratio_a_over_b"], f["p_node_b"], f["p_node_a"]
        signs = ratio.z_stats[2] > 1.96 and ratio.z_stats[3] > 1.96 and pb.z_stats[2] < -1.96
        order = ratio.r_squared > pb.r_squared > pa.r_squared
        held += signs and order
        print(f"seed {s:>5}: z ratio asym {ratio.z_stats[2]:6.2f} int {ratio.z_stats[3]:5.2f} "
              f"p_node_b asym {pb.z_stats[2]:6.2f} | R2 {ratio.r_squared:.3f} {pb.r_squared:.3f} "
              f"{pa.r_squared:.3f} | signs {signs} order {order}")
    print(f"{held}/{len(args.seeds)} seeds satisfy both")


if __name__ == "__main__":
    main()
