"""Stages that turn an :class:`ExperimentConfig` into CSV artifacts.

Each stage is callable on its own (one CLI subcommand each) and draws its
randomness from named substreams of the master seed, so a stage run alone
writes exactly what the full pipeline writes. Numbers are written with six
significant digits; every CSV ends with a ``#`` line carrying the config
fingerprint and seed. Files are written to a temporary name and renamed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from dexfrag import econ, stats
from dexfrag.config import ExperimentConfig
from dexfrag.delays import DELAYS_HEADER, delay_rows, filter_by_source, simulate_delays
from dexfrag.errors import ManifestError
from dexfrag.montecarlo import cluster_delay_cdfs, config_stream, sweep_experiment
from dexfrag.protocol import quorum_from_faults, simulate_protocol_batch
from dexfrag.regression import reproduce_table, table_rows, format_table
from dexfrag.seeding import derive_seed, substream
from dexfrag.topology import build_topology

log = logging.getLogger(__name__)

WINPROB_HEADER = [
    "eta_a", "eta_b", "slow_mean_ms", "p_cluster_a", "p_node_a", "p_node_b",
    "ratio_a_over_b", "pi_hat", "std_across_sims", "seed",
]
TABLE2_HEADER = ["outcome", "term", "coefficient", "robust_se", "z", "stars", "r_squared"]
ECON_HEADER = [
    "pi", "profit_A_single", "profit_B_single", "profit_A_frag", "profit_B_frag", "gap", "adopts_A",
]
BOOTSTRAP_HEADER = ["eta_a", "eta_b", "slow_mean_ms", "grand_mean_ms", "std_of_means_ms"]
PROTOCOL_HEADER = [
    "run_index", "initiator_cluster", "rounds", "elapsed_ms", "committed",
    "eta_a", "eta_b", "slow_mean_ms",
]


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6g}"
    return str(value)


def write_csv(path: Path, header, rows, cfg: ExperimentConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        fh.write(f"# fingerprint={cfg.fingerprint()} seed={cfg.seed}\n")
    os.replace(tmp, path)
    return path


def read_csv(path) -> list[dict]:
    """Rows of a CSV written by :func:`write_csv`, skipping ``#`` lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("".join(lines))))


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# -- econ ---------------------------------------------------------------------

def econ_rows(cfg: ExperimentConfig):
    k = cfg.econ.pi_points
    pis = [(i + 1) / k for i in range(k)]
    rows = econ.econ_sweep(cfg.econ_params(), pis)
    return [[r[h] for h in ECON_HEADER] for r in rows]


def run_econ(cfg: ExperimentConfig, out: Path) -> list[Path]:
    return [write_csv(Path(out) / "econ.csv", ECON_HEADER, econ_rows(cfg), cfg)]


# -- network-wide delays --------------------------------------------------------

def network_seed(cfg, cluster, links) -> int:
    return derive_seed(cfg.seed, "network", *config_stream(cluster, links))


def _network_job(args):
    cfg, cluster, links = args
    return simulate_delays(
        build_topology(cluster), links, cfg.route, n=cfg.n_delays, seed=network_seed(cfg, cluster, links)
    )


def network_samples(cfg: ExperimentConfig, workers: int = 1):
    grid = cfg.grid()
    samples = _map(_network_job, [(cfg, c, l) for c, l in grid], workers)
    return list(zip(grid, samples))


def run_simulate(cfg, out, workers=1, samples=None) -> list[Path]:
    samples = samples or network_samples(cfg, workers)

    def rows():
        for (c, l), s in samples:
            yield from delay_rows(s, c.eta_a, c.eta_b, l.slow_mean)

    return [write_csv(Path(out) / "delays.csv", DELAYS_HEADER, rows(), cfg)]


# -- bootstrap --------------------------------------------------------------------

def bootstrap_rows(cfg, samples):
    rows = []
    for (c, l), s in samples:
        seed = derive_seed(cfg.seed, "bootstrap", *config_stream(c, l))
        b = stats.bootstrap_mean(s.delays, cfg.bootstrap.n_sub, cfg.bootstrap.sub_size, seed)
        rows.append([c.eta_a, c.eta_b, l.slow_mean, b.grand_mean, b.std_of_means])
    return rows


def run_bootstrap(cfg, out, workers=1, samples=None) -> list[Path]:
    samples = samples or network_samples(cfg, workers)
    return [write_csv(Path(out) / "bootstrap.csv", BOOTSTRAP_HEADER, bootstrap_rows(cfg, samples), cfg)]


# -- distributions ----------------------------------------------------------------

def _cluster_job(args):
    cfg, c, l = args
    return cluster_delay_cdfs(c, l, cfg.route, cfg.n_delays, cfg.seed)


def run_distributions(cfg, out, workers=1, samples=None) -> list[Path]:
    """density.csv, cdf.csv and dist_summary.csv for full and per-cluster samples."""
    samples = samples or network_samples(cfg, workers)
    grid = [g for g, _ in samples]
    cluster_cdfs = _map(_cluster_job, [(cfg, c, l) for c, l in grid], workers)
    d = cfg.distributions

    scoped = []  # (cluster, links, scope, values)
    for ((c, l), s), (cdf_a, cdf_b) in zip(samples, cluster_cdfs):
        scoped.append((c, l, "full", s.delays))
        scoped.append((c, l, "A", cdf_a.sorted_values))
        scoped.append((c, l, "B", cdf_b.sorted_values))

    # common evaluation grid and tail threshold per slow mean, from pooled full samples
    pooled = {}
    for c, l, scope, v in scoped:
        if scope == "full":
            pooled.setdefault(l.slow_mean, []).append(v)
    x_grid = {}
    tail_at = {}
    for m, parts in pooled.items():
        allv = np.concatenate(parts)
        x_grid[m] = np.linspace(0.0, float(allv.max()), d.cdf_points)
        tail_at[m] = float(np.quantile(allv, d.tail_quantile))

    density, cdf_rows, summary = [], [], []
    for c, l, scope, v in scoped:
        key = [c.eta_a, c.eta_b, l.slow_mean, scope]
        centers, dens, _ = stats.histogram(v, d.bins)
        density.extend(key + [x, y] for x, y in zip(centers, dens))
        cdf = stats.empirical_cdf(v)
        cdf_rows.extend(key + [x, y] for x, y in zip(x_grid[l.slow_mean], cdf(x_grid[l.slow_mean])))
        summary.append(key + [
            cdf.n, float(v.mean()), float(v.std(ddof=1)), stats.sample_skewness(v),
            tail_at[l.slow_mean], stats.tail_probability(cdf, tail_at[l.slow_mean]),
        ])

    out = Path(out)
    head = ["eta_a", "eta_b", "slow_mean_ms", "scope"]
    return [
        write_csv(out / "density.csv", head + ["bin_center_ms", "density"], density, cfg),
        write_csv(out / "cdf.csv", head + ["delay_ms", "cdf"], cdf_rows, cfg),
        write_csv(
            out / "dist_summary.csv",
            head + ["n", "mean_ms", "sd_ms", "skewness", "tail_threshold_ms", "tail_prob"],
            summary, cfg,
        ),
    ]


# -- Monte Carlo ---------------------------------------------------------------------

def winprob_rows(cfg, workers=1):
    sweep = sweep_experiment(
        cfg.grid(), cfg.montecarlo, seed=cfg.seed, route=cfg.route,
        n_delays=cfg.n_delays, workers=workers,
    )
    rows = []
    for r in sweep:
        e = r.estimate
        rows.append([
            e.eta_a, e.eta_b, r.links.slow_mean, e.p_cluster_a, e.p_node_a, e.p_node_b,
            e.likelihood_ratio, e.pi_hat, e.std_across_sims, r.seed,
        ])
    return rows


def run_montecarlo(cfg, out, workers=1) -> list[Path]:
    return [write_csv(Path(out) / "winprob.csv", WINPROB_HEADER, winprob_rows(cfg, workers), cfg)]


# -- regression ----------------------------------------------------------------------

def run_regress(cfg, out, winprob_path=None) -> list[Path]:
    out = Path(out)
    src = Path(winprob_path) if winprob_path else out / "winprob.csv"
    rows = read_csv(src)
    r = cfg.regression
    fits = reproduce_table(rows, standardize_delay=r.standardize_delay, cov_type=r.cov_type, percent=r.percent)
    body = [[t[h] for h in TABLE2_HEADER] for t in table_rows(fits)]
    path = write_csv(out / "table2.csv", TABLE2_HEADER, body, cfg)
    txt = out / "table2.txt"
    tmp = txt.with_name(".table2.txt.tmp")
    tmp.write_text(format_table(fits) + "\n")
    os.replace(tmp, txt)
    return [path, txt]


# -- protocol ------------------------------------------------------------------------

def _protocol_job(args):
    cfg, c, l = args
    p = cfg.protocol
    topo = build_topology(c)
    spec = quorum_from_faults(p.f_faulty)
    rows = []
    run_index = 0
    for initiator in p.initiators:
        rng = substream(cfg.seed, "protocol", *config_stream(c, l), initiator)
        batch = simulate_protocol_batch(topo, l, cfg.route, initiator, spec, p.rounds, p.n_runs, rng, xi=p.xi)
        tag = topo.cluster_of[initiator].value
        for t in batch.elapsed:
            rows.append([run_index, tag, p.rounds, float(t), batch.committed, c.eta_a, c.eta_b, l.slow_mean])
            run_index += 1
    return rows


def run_protocol(cfg, out, workers=1) -> list[Path]:
    parts = _map(_protocol_job, [(cfg, c, l) for c, l in cfg.grid()], workers)
    rows = [r for part in parts for r in part]
    return [write_csv(Path(out) / "protocol.csv", PROTOCOL_HEADER, rows, cfg)]


# -- full pipeline ---------------------------------------------------------------------

def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(cfg, out, files) -> Path:
    out = Path(out)
    entries = []
    for f in files:
        f = Path(f)
        if not f.exists():
            raise ManifestError(f"manifest entry missing on disk: {f}")
        entries.append({"file": f.name, "sha256": sha256(f)})
    doc = {"fingerprint": cfg.fingerprint(), "seed": cfg.seed, "files": entries}
    path = out / "manifest.json"
    tmp = path.with_name(".manifest.json.tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)
    return path


def load_manifest(out) -> dict:
    path = Path(out) / "manifest.json"
    if not path.exists():
        raise ManifestError(f"no manifest at {path}")
    doc = json.loads(path.read_text())
    for e in doc["files"]:
        if not (Path(out) / e["file"]).exists():
            raise ManifestError(f"listed file missing: {e['file']}")
    return doc


def run_pipeline(cfg: ExperimentConfig, out, workers: int = 1, fmt_: str = "csv") -> dict:
    """Every stage in order, then the manifest. Returns the manifest document."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    files += run_econ(cfg, out)
    samples = network_samples(cfg, workers)
    files += run_simulate(cfg, out, samples=samples)
    files += run_bootstrap(cfg, out, samples=samples)
    files += run_distributions(cfg, out, workers, samples=samples)
    files += run_montecarlo(cfg, out, workers)
    files += run_regress(cfg, out)
    files += run_protocol(cfg, out, workers)
    write_manifest(cfg, out, files)
    if fmt_ == "svg":
        from dexfrag.plots import emit_plots

        files += emit_plots(out, "svg")
        write_manifest(cfg, out, files)
    return load_manifest(out)
