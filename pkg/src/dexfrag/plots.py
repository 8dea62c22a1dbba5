"""SVG renderings of the pipeline CSVs, one file per figure."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from dexfrag.errors import ManifestError, ParameterError  # noqa: E402

plt.rcParams["svg.hashsalt"] = "dexfrag"
_META = {"Date": None, "Creator": "dexfrag"}


def _load(out: Path, name: str):
    from dexfrag.pipeline import load_manifest, read_csv

    listed = {e["file"] for e in load_manifest(out)["files"]}
    if name not in listed:
        raise ManifestError(f"{name} not in manifest")
    return read_csv(out / name)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _label(a, b):
    return f"({a},{b})"


def plot_econ(out: Path) -> Path:
    rows = _load(out, "econ.csv")
    pi = [float(r["pi"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, style in [("profit_A_single", "-"), ("profit_B_single", "-"),
                       ("profit_A_frag", "--"), ("profit_B_frag", "--")]:
        ax.plot(pi, [float(r[key]) for r in rows], style, label=key)
    ax.set_xlabel("speed ratio pi")
    ax.set_ylabel("expected profit per miner")
    ax.legend(fontsize=8)
    return _save(fig, out / "econ_profits.svg")


def plot_bootstrap(out: Path) -> Path:
    rows = _load(out, "bootstrap.csv")
    lines = defaultdict(list)
    for r in rows:
        lines[float(r["slow_mean_ms"])].append((_label(r["eta_a"], r["eta_b"]), float(r["grand_mean_ms"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for m, pts in sorted(lines.items()):
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{m:g} ms")
    ax.set_xlabel("cluster structure")
    ax.set_ylabel("bootstrapped mean delay (ms)")
    ax.legend(fontsize=8, title="slow links")
    return _save(fig, out / "bootstrap_means.svg")


def _dist_panels(out, scopes, slow_means, name):
    dens = _load(out, "density.csv")
    cdf = _load(out, "cdf.csv")
    fig, axes = plt.subplots(len(slow_means), 2, figsize=(9, 3.2 * len(slow_means)), squeeze=False)
    for i, m in enumerate(slow_means):
        for src, ax, xk, yk in [(dens, axes[i][0], "bin_center_ms", "density"),
                                (cdf, axes[i][1], "delay_ms", "cdf")]:
            curves = defaultdict(lambda: ([], []))
            for r in src:
                if float(r["slow_mean_ms"]) != m or r["scope"] not in scopes:
                    continue
                k = f"{_label(r['eta_a'], r['eta_b'])} {r['scope']}"
                curves[k][0].append(float(r[xk]))
                curves[k][1].append(float(r[yk]))
            for k, (x, y) in curves.items():
                ax.plot(x, y, lw=1, label=k)
            ax.set_title(f"slow links {m:g} ms: {yk}", fontsize=9)
            ax.set_xlabel("delay (ms)")
        axes[i][0].legend(fontsize=6)
    return _save(fig, out / name)


def plot_winprob(out: Path) -> list[Path]:
    rows = _load(out, "winprob.csv")
    paths = []
    for key, name, ylabel in [
        ("p_cluster_a", "cluster_winprob.svg", "P(cluster A has smallest delay)"),
        ("p_node_a", "node_winprob_a.svg", "P(given A node has smallest delay)"),
        ("p_node_b", "node_winprob_b.svg", "P(given B node has smallest delay)"),
        ("ratio_a_over_b", "winprob_ratio.svg", "winning likelihood ratio A/B"),
    ]:
        lines = defaultdict(list)
        for r in rows:
            lines[float(r["slow_mean_ms"])].append((_label(r["eta_a"], r["eta_b"]), float(r[key])))
        fig, ax = plt.subplots(figsize=(6, 4))
        for m, pts in sorted(lines.items()):
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{m:g} ms")
        ax.set_xlabel("cluster structure")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8, title="slow links")
        paths.append(_save(fig, out / name))
    return paths


def emit_plots(out, format: str = "svg") -> list[Path]:
    """Render figure analogues from the CSVs listed in ``out/manifest.json``.

    ``format="csv"`` renders nothing.
    """
    if format == "csv":
        return []
    if format != "svg":
        raise ParameterError(f"unknown plot format {format!r}")
    out = Path(out)
    slow = sorted({float(r["slow_mean_ms"]) for r in _load(out, "bootstrap.csv")})
    paths = [plot_econ(out), plot_bootstrap(out)]
    paths.append(_dist_panels(out, {"full"}, [slow[0], slow[-1]], "delay_distributions.svg"))
    paths.append(_dist_panels(out, {"A", "B"}, [slow[-1]], "cluster_distributions.svg"))
    paths += plot_winprob(out)
    return paths
