"""Two-cluster, fully connected network and its link-delay model.

Links inside a cluster are fast, links between clusters are slow. A message
travels along a random simple route and its delay is the sum of per-hop
link delays, each uniform on the interval of its link class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dexfrag.econ import Region
from dexfrag.errors import ConfigError, ParameterError


class LinkClass(str, Enum):
    FAST = "fast"
    SLOW = "slow"


@dataclass(frozen=True)
class ClusterConfig:
    eta_a: int
    eta_b: int
    total: int = 10

    def __post_init__(self):
        if self.eta_a + self.eta_b != self.total:
            raise ConfigError(
                f"eta_a + eta_b = {self.eta_a + self.eta_b}, expected total {self.total}",
                key="cluster",
            )
        if self.eta_b < 1 or self.eta_a < self.eta_b:
            raise ConfigError(
                f"need eta_a >= eta_b >= 1, got ({self.eta_a}, {self.eta_b})", key="cluster"
            )

    @property
    def asymmetry(self) -> float:
        return self.eta_a / self.eta_b


@dataclass(frozen=True)
class LinkDelayModel:
    """Per-hop delay intervals in milliseconds.

    Fast hops are uniform on [fast_low, fast_high]; slow hops on
    slow_mean +/- slow_half_width.
    """

    fast_low: float = 10.0
    fast_high: float = 30.0
    slow_mean: float = 300.0
    slow_half_width: float = 20.0

    def __post_init__(self):
        if not 0 < self.fast_low < self.fast_high:
            raise ConfigError("need 0 < fast_low < fast_high", key="links")
        if self.slow_half_width < 0:
            raise ConfigError("slow_half_width must be >= 0", key="links")
        # equality admitted: the stock 50 ms / 20 ms setting sits exactly on it
        if self.slow_mean - self.slow_half_width < self.fast_high:
            raise ConfigError(
                f"slow interval [{self.slow_low}, {self.slow_high}] overlaps fast links",
                key="links",
            )

    @property
    def slow_low(self) -> float:
        return self.slow_mean - self.slow_half_width

    @property
    def slow_high(self) -> float:
        return self.slow_mean + self.slow_half_width


@dataclass(frozen=True)
class RouteParams:
    """``max_intermediate=None`` allows every feasible simple-path length."""

    max_intermediate: int | None = None

    def resolve(self, quorum_size: int) -> int:
        limit = quorum_size - 2
        h = limit if self.max_intermediate is None else self.max_intermediate
        if not 0 <= h <= limit:
            raise ParameterError(f"max_intermediate must be in [0, {limit}], got {h}")
        return h


@dataclass(frozen=True)
class ClusterTopology:
    nodes: tuple[str, ...]
    cluster_of: dict = field(hash=False)
    quorum: tuple[str, ...]

    @property
    def config(self) -> ClusterConfig:
        eta_a = sum(1 for n in self.nodes if self.cluster_of[n] is Region.A)
        return ClusterConfig(eta_a, len(self.nodes) - eta_a, len(self.nodes))

    def index(self, node: str) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise ParameterError(f"unknown node {node!r}") from None

    @property
    def codes(self) -> np.ndarray:
        """0 for cluster A, 1 for B, aligned with ``nodes``."""
        return np.array([0 if self.cluster_of[n] is Region.A else 1 for n in self.nodes])

    @property
    def quorum_index(self) -> np.ndarray:
        return np.array([self.index(n) for n in self.quorum])

    def links(self):
        """Every unordered node pair (the network is complete)."""
        return [(a, b) for i, a in enumerate(self.nodes) for b in self.nodes[i + 1:]]


def build_topology(config: ClusterConfig, quorum=None) -> ClusterTopology:
    nodes = tuple(f"A{i}" for i in range(config.eta_a)) + tuple(
        f"B{i}" for i in range(config.eta_b)
    )
    cluster_of = {n: Region(n[0]) for n in nodes}
    if quorum is None:
        quorum = nodes
    else:
        quorum = tuple(quorum)
        missing = [q for q in quorum if q not in cluster_of]
        if missing or len(set(quorum)) != len(quorum) or len(quorum) < 2:
            raise ConfigError(f"bad quorum {quorum!r}", key="quorum")
    return ClusterTopology(nodes=nodes, cluster_of=cluster_of, quorum=quorum)


def link_class(topology: ClusterTopology, i: str, j: str) -> LinkClass:
    if i not in topology.cluster_of or j not in topology.cluster_of:
        raise ParameterError(f"unknown node in ({i!r}, {j!r})")
    if i == j:
        raise ParameterError("a node has no link to itself")
    same = topology.cluster_of[i] is topology.cluster_of[j]
    return LinkClass.FAST if same else LinkClass.SLOW


def sample_link_delay(cls, model: LinkDelayModel, rng: np.random.Generator, size=None):
    cls = LinkClass(cls)
    if cls is LinkClass.FAST:
        return rng.uniform(model.fast_low, model.fast_high, size)
    return rng.uniform(model.slow_low, model.slow_high, size)


def sample_route(
    topology: ClusterTopology,
    source: str,
    dest: str,
    max_intermediate: int,
    rng: np.random.Generator,
) -> list[str]:
    """Random simple path from ``source`` to ``dest`` through quorum nodes.

    The number of intermediate hops is uniform on {0, ..., max_intermediate};
    intermediates are drawn without replacement from the other quorum nodes.
    """
    if source == dest:
        raise ParameterError("source and dest must differ")
    if source not in topology.quorum or dest not in topology.quorum:
        raise ParameterError(f"route endpoints must be quorum nodes: {source!r}, {dest!r}")
    if not 0 <= max_intermediate <= len(topology.quorum) - 2:
        raise ParameterError(f"max_intermediate out of range: {max_intermediate}")
    h = int(rng.integers(0, max_intermediate + 1))
    others = [n for n in topology.quorum if n not in (source, dest)]
    picks = rng.choice(len(others), size=h, replace=False) if h else []
    return [source, *(others[k] for k in picks), dest]


def route_delay(topology: ClusterTopology, route, model: LinkDelayModel, rng) -> float:
    return float(
        sum(
            sample_link_delay(link_class(topology, a, b), model, rng)
            for a, b in zip(route[:-1], route[1:])
        )
    )


def batch_route_delays(
    topology: ClusterTopology,
    model: LinkDelayModel,
    src: np.ndarray,
    dst: np.ndarray,
    max_intermediate: int,
    rng: np.random.Generator,
    return_hops: bool = False,
):
    """Vectorised route sampling plus delay summation.

    ``src`` and ``dst`` are node indices (into ``topology.nodes``) of equal
    length, pairwise distinct. Same route law as :func:`sample_route`.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    n = src.shape[0]
    q = topology.quorum_index
    codes = topology.codes
    m = q.shape[0]
    if not 0 <= max_intermediate <= m - 2:
        raise ParameterError(f"max_intermediate out of range: {max_intermediate}")

    hops = rng.integers(0, max_intermediate + 1, size=n)
    keys = rng.random((n, m))
    # a full node-sized lookup lets us blank out src/dst columns by quorum position
    pos = np.full(len(topology.nodes), -1)
    pos[q] = np.arange(m)
    rows = np.arange(n)
    keys[rows, pos[src]] = np.inf
    keys[rows, pos[dst]] = np.inf
    inter = q[np.argsort(keys, axis=1)[:, :max_intermediate]]
    u = rng.random((n, max_intermediate + 1))

    fast_w = model.fast_high - model.fast_low
    slow_w = model.slow_high - model.slow_low
    def hop(a, b, uk):
        fast = codes[a] == codes[b]
        return np.where(fast, model.fast_low + uk * fast_w, model.slow_low + uk * slow_w)

    total = np.zeros(n)
    prev = src.copy()
    for k in range(max_intermediate):
        step = k < hops
        nxt = inter[:, k]
        total += np.where(step, hop(prev, nxt, u[:, k]), 0.0)
        prev = np.where(step, nxt, prev)
    total += hop(prev, dst, u[:, max_intermediate])
    if return_hops:
        return total, hops
    return total
