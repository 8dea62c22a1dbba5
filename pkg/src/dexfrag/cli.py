"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from dexfrag import pipeline
from dexfrag.config import load_config
from dexfrag.errors import ConfigError, DexfragError

log = logging.getLogger("dexfrag")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--format", choices=["csv", "svg"], default="csv",
                        help="svg also renders figure files")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--desk-scale", action="store_true",
                        help="reduced sizes: n=10^4 delays, Monte Carlo 1000 x 100")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dexfrag", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("econ", parents=[common], help="profit curves over pi (econ.csv)")
    sub.add_parser("simulate", parents=[common], help="network-wide message delays (delays.csv)")
    sub.add_parser("bootstrap", parents=[common], help="bootstrapped mean delays (bootstrap.csv)")
    sub.add_parser("distributions", parents=[common], help="density/CDF tables")
    sub.add_parser("montecarlo", parents=[common], help="win probabilities (winprob.csv)")
    r = sub.add_parser("regress", parents=[common], help="regression table (table2.csv)")
    r.add_argument("--input", type=Path, help="winprob.csv to read (default: OUT/winprob.csv)")
    sub.add_parser("protocol", parents=[common], help="timed protocol runs (protocol.csv)")
    sub.add_parser("reproduce", parents=[common], help="full pipeline plus manifest")
    return p


def run(args) -> list[Path]:
    cfg = load_config(args.config, desk_scale=args.desk_scale, seed=args.seed)
    out, w = args.out, args.workers
    cmd = args.command
    if cmd == "reproduce":
        doc = pipeline.run_pipeline(cfg, out, workers=w, fmt_=args.format)
        return [out / e["file"] for e in doc["files"]]
    if cmd == "econ":
        return pipeline.run_econ(cfg, out)
    if cmd == "simulate":
        return pipeline.run_simulate(cfg, out, w)
    if cmd == "bootstrap":
        return pipeline.run_bootstrap(cfg, out, w)
    if cmd == "distributions":
        return pipeline.run_distributions(cfg, out, w)
    if cmd == "montecarlo":
        return pipeline.run_montecarlo(cfg, out, w)
    if cmd == "regress":
        return pipeline.run_regress(cfg, out, args.input)
    if cmd == "protocol":
        return pipeline.run_protocol(cfg, out, w)
    raise AssertionError(cmd)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        for path in run(args):
            print(path)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (DexfragError, ValueError, ArithmeticError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
