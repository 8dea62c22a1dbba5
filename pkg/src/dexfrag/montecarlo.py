"""Monte Carlo estimate of which cluster posts a transaction first.

For every round, each of the eta_A nodes of cluster A draws a delay from
A's cluster-conditional empirical distribution and each of the eta_B nodes
of B from B's; the node with the smallest delay wins. A simulation is
``n_draws`` rounds; the cluster-level probability is the average over
``n_sim`` simulations of the per-simulation win share of A.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from dexfrag.delays import simulate_delays
from dexfrag.errors import ConfigError, DexfragError, ParameterError
from dexfrag.seeding import derive_seed
from dexfrag.stats import EmpiricalCdf, empirical_cdf
from dexfrag.topology import ClusterConfig, LinkDelayModel, RouteParams, build_topology

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonteCarloParams:
    n_draws: int = 10_000
    n_sim: int = 1_000

    def __post_init__(self):
        if self.n_draws < 1 or self.n_sim < 1:
            raise ConfigError("n_draws and n_sim must be >= 1", key="montecarlo")


@dataclass(frozen=True, eq=False)
class MonteCarloEstimate:
    eta_a: int
    eta_b: int
    p_cluster_a: float
    p_node_a: float
    p_node_b: float
    likelihood_ratio: float  # p_node_a / p_node_b, the displayed local advantage
    pi_hat: float  # p_node_b / p_node_a, comparable to the economic model's pi
    per_simulation_p: np.ndarray = field(repr=False)
    std_across_sims: float

    @property
    def n_sim(self) -> int:
        return int(self.per_simulation_p.size)

    @property
    def standard_error(self) -> float:
        """Standard error of ``p_cluster_a`` from the spread across simulations."""
        return self.std_across_sims / math.sqrt(self.n_sim) if self.n_sim > 1 else math.nan


def node_win_prob(p_cluster: float, eta: int) -> float:
    if eta < 1:
        raise ParameterError(f"eta must be >= 1, got {eta}")
    return p_cluster / eta


def likelihood_ratio(p_node_a: float, p_node_b: float) -> float:
    """p_node_a / p_node_b; ``math.inf`` when B never wins."""
    if p_node_b < 0 or p_node_a < 0:
        raise ParameterError("probabilities must be non-negative")
    if p_node_b == 0:
        return math.inf
    return p_node_a / p_node_b


def _one_simulation(values_a, values_b, eta_a, eta_b, n_draws, rng) -> float:
    da = values_a[rng.integers(0, values_a.size, size=(n_draws, eta_a))]
    db = values_b[rng.integers(0, values_b.size, size=(n_draws, eta_b))]
    u = rng.random(n_draws)
    min_a = da.min(axis=1)
    min_b = db.min(axis=1)
    a_wins = min_a < min_b
    tied = min_a == min_b
    if tied.any():
        # uniform over tied nodes keeps every node exchangeable
        m = min_a[tied][:, None]
        ka = (da[tied] == m).sum(axis=1)
        kb = (db[tied] == m).sum(axis=1)
        a_wins[tied] = u[tied] * (ka + kb) < ka
    return float(a_wins.mean())


def estimate_cluster_win(
    cdf_a: EmpiricalCdf,
    cdf_b: EmpiricalCdf,
    eta_a: int,
    eta_b: int,
    n_draws: int = 10_000,
    n_sim: int = 1_000,
    seed: int = 0,
) -> MonteCarloEstimate:
    if min(eta_a, eta_b, n_draws, n_sim) < 1:
        raise ParameterError("eta_a, eta_b, n_draws and n_sim must all be >= 1")
    values_a = cdf_a.sorted_values
    values_b = cdf_b.sorted_values
    per_sim = np.empty(n_sim)
    for k in range(n_sim):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        per_sim[k] = _one_simulation(values_a, values_b, eta_a, eta_b, n_draws, rng)
    p = float(per_sim.mean())
    pa = node_win_prob(p, eta_a)
    pb = node_win_prob(1.0 - p, eta_b)
    return MonteCarloEstimate(
        eta_a=eta_a,
        eta_b=eta_b,
        p_cluster_a=p,
        p_node_a=pa,
        p_node_b=pb,
        likelihood_ratio=likelihood_ratio(pa, pb),
        pi_hat=math.inf if pa == 0 else pb / pa,
        per_simulation_p=per_sim,
        std_across_sims=float(per_sim.std(ddof=1)) if n_sim > 1 else 0.0,
    )


@dataclass(frozen=True, eq=False)
class SweepRow:
    cluster: ClusterConfig
    links: LinkDelayModel
    estimate: MonteCarloEstimate
    seed: int


def config_stream(cluster: ClusterConfig, links: LinkDelayModel) -> tuple:
    """Substream names for one configuration, independent of its list position."""
    return (cluster.eta_a, cluster.eta_b, repr(float(links.slow_mean)), repr(float(links.slow_half_width)))


def cluster_delay_cdfs(cluster, links, route, n_delays, master_seed):
    """Cluster-conditional empirical CDFs, ``n_delays`` draws each."""
    topo = build_topology(cluster)
    names = config_stream(cluster, links)
    out = []
    for tag in ("A", "B"):
        seed = derive_seed(master_seed, "delays", *names, tag)
        s = simulate_delays(topo, links, route, n=n_delays, seed=seed, source_cluster=tag)
        out.append(empirical_cdf(s.delays))
    return out


def _sweep_one(args):
    cluster, links, route, n_delays, mc, master_seed = args
    try:
        cdf_a, cdf_b = cluster_delay_cdfs(cluster, links, route, n_delays, master_seed)
        seed = derive_seed(master_seed, "montecarlo", *config_stream(cluster, links))
        est = estimate_cluster_win(
            cdf_a, cdf_b, cluster.eta_a, cluster.eta_b, mc.n_draws, mc.n_sim, seed
        )
    except DexfragError as exc:
        raise type(exc)(
            f"config ({cluster.eta_a},{cluster.eta_b}) slow_mean={links.slow_mean}: {exc}"
        ) from exc
    return SweepRow(cluster=cluster, links=links, estimate=est, seed=master_seed)


def sweep_experiment(
    configs,
    mc: MonteCarloParams = MonteCarloParams(),
    seed: int = 0,
    route: RouteParams = RouteParams(),
    n_delays: int = 100_000,
    workers: int = 1,
) -> list[SweepRow]:
    """One :class:`MonteCarloEstimate` per (ClusterConfig, LinkDelayModel) pair.

    Results come back in input order and do not depend on ``workers``.
    """
    configs = list(configs)
    if not configs:
        raise ConfigError("empty configuration list", key="sweep")
    jobs = [(c, l, route, n_delays, mc, seed) for c, l in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    for r in rows:
        e = r.estimate
        log.debug("(%d,%d) slow=%g p_A=%.4f ratio=%.3g", e.eta_a, e.eta_b,
                  r.links.slow_mean, e.p_cluster_a, e.likelihood_ratio)
    return rows
