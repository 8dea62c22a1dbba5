"""End-to-end message delays over the two-cluster network.

Each draw picks a source and a distinct destination uniformly among quorum
nodes, samples a random route between them and sums per-hop link delays.
Draws are generated in fixed-size shards, each with its own substream of the
seed, so the output does not depend on how many workers produced it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from dexfrag.econ import Region
from dexfrag.errors import ParameterError
from dexfrag.seeding import fingerprint
from dexfrag.topology import (
    ClusterTopology,
    LinkDelayModel,
    RouteParams,
    batch_route_delays,
)

SHARD_SIZE = 10_000


@dataclass(frozen=True, eq=False)
class DelaySampleSet:
    delays: np.ndarray
    source_cluster: np.ndarray  # "A"/"B" per draw
    config_fingerprint: str
    seed: int | None = None

    def __post_init__(self):
        if self.delays.shape != self.source_cluster.shape:
            raise ParameterError("delays and source tags differ in length")

    @property
    def n(self) -> int:
        return int(self.delays.shape[0])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, DelaySampleSet):
            return NotImplemented
        return (
            self.config_fingerprint == other.config_fingerprint
            and np.array_equal(self.delays, other.delays)
            and np.array_equal(self.source_cluster, other.source_cluster)
        )

    __hash__ = None


def _shard(topology, model, max_h, n, seed, shard, source_cluster):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))
    q = topology.quorum_index
    codes = topology.codes
    if source_cluster is None:
        pool = q
    else:
        want = 0 if Region.coerce(source_cluster) is Region.A else 1
        pool = q[codes[q] == want]
        if pool.size == 0:
            raise ParameterError(f"no quorum node in cluster {source_cluster}")
    src = pool[rng.integers(0, pool.size, size=n)]
    # destination: uniform over the other quorum members
    m = q.size
    pos = np.full(len(topology.nodes), -1)
    pos[q] = np.arange(m)
    offset = rng.integers(1, m, size=n)
    dst = q[(pos[src] + offset) % m]
    delays = batch_route_delays(topology, model, src, dst, max_h, rng)
    return delays, codes[src]


def simulate_delays(
    topology: ClusterTopology,
    model: LinkDelayModel,
    route: RouteParams = RouteParams(),
    n: int = 100_000,
    seed: int = 0,
    source_cluster=None,
    workers: int = 1,
) -> DelaySampleSet:
    """Simulate ``n`` independent one-way message delays (ms).

    With ``source_cluster`` set, sources are drawn only from that cluster;
    this gives the cluster-conditional samples used by the Monte Carlo.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    max_h = route.resolve(len(topology.quorum))
    sizes = [SHARD_SIZE] * (n // SHARD_SIZE)
    if n % SHARD_SIZE:
        sizes.append(n % SHARD_SIZE)

    def run(k):
        return _shard(topology, model, max_h, sizes[k], seed, k, source_cluster)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]

    delays = np.concatenate([p[0] for p in parts])
    tags = np.where(np.concatenate([p[1] for p in parts]) == 0, "A", "B")
    fp = fingerprint(
        topology.config, topology.quorum, model, route, int(seed),
        None if source_cluster is None else Region.coerce(source_cluster).value,
    )
    return DelaySampleSet(delays=delays, source_cluster=tags, config_fingerprint=fp, seed=seed)


def filter_by_source(samples: DelaySampleSet, cluster) -> DelaySampleSet:
    if samples.n == 0:
        raise ParameterError("empty sample set")
    tag = Region.coerce(cluster).value
    keep = samples.source_cluster == tag
    return DelaySampleSet(
        delays=samples.delays[keep],
        source_cluster=samples.source_cluster[keep],
        config_fingerprint=f"{samples.config_fingerprint}/{tag}",
        seed=samples.seed,
    )


DELAYS_HEADER = ["draw_index", "source_cluster", "delay_ms", "eta_a", "eta_b", "slow_mean_ms", "seed"]


def delay_rows(samples: DelaySampleSet, eta_a: int, eta_b: int, slow_mean: float):
    """Yield rows for delays.csv, streaming to keep memory flat."""
    for i, (d, t) in enumerate(zip(samples.delays, samples.source_cluster)):
        yield [i, str(t), float(d), eta_a, eta_b, slow_mean, samples.seed]

