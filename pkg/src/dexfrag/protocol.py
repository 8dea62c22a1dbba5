"""Quorum arithmetic, message counts and a timed model of the validation protocol.

A run goes INVITATION (initiator to every other quorum node), ACKNOWLEDGE
and TRANSACTION OK (back to the initiator), then ``rounds`` all-to-all
consensus rounds. Each phase ends when its slowest message arrives; the
fixed computation time ``xi`` is spent once, during hash verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from dexfrag.errors import ParameterError
from dexfrag.topology import ClusterTopology, LinkDelayModel, RouteParams, batch_route_delays


class ProtocolPhase(str, Enum):
    INVITATION = "Invitation"
    ACKNOWLEDGE = "Acknowledge"
    TRANSACTION_OK = "TransactionOk"
    CONSENSUS_ROUNDS = "ConsensusRounds"
    COMMITTED = "Committed"
    ABORTED = "Aborted"


PHASE_ORDER = (
    ProtocolPhase.INVITATION,
    ProtocolPhase.ACKNOWLEDGE,
    ProtocolPhase.TRANSACTION_OK,
    ProtocolPhase.CONSENSUS_ROUNDS,
    ProtocolPhase.COMMITTED,
)


@dataclass(frozen=True)
class QuorumSpec:
    n_nodes: int
    f_faulty: int

    def __post_init__(self):
        if self.f_faulty < 0 or self.n_nodes != 3 * self.f_faulty + 1:
            raise ParameterError(
                f"quorum needs n = 3f + 1, got n={self.n_nodes}, f={self.f_faulty}"
            )

    @property
    def threshold(self) -> int:
        return 2 * self.f_faulty + 1


def quorum_from_faults(f: int) -> QuorumSpec:
    if f < 0:
        raise ParameterError(f"f must be >= 0, got {f}")
    return QuorumSpec(n_nodes=3 * f + 1, f_faulty=f)


def validate(votes: int, spec: QuorumSpec) -> bool:
    if votes < 0 or votes > spec.n_nodes:
        raise ParameterError(f"votes must be in [0, {spec.n_nodes}], got {votes}")
    return votes >= spec.threshold


def _log_k(n: int, k: int) -> float:
    e = round(math.log(n) / math.log(k))
    if k**e == n:
        return float(e)
    return math.log(n) / math.log(k)


def message_count(algorithm: str, n: int, k: int = 2) -> float:
    """Messages needed to reach consensus among ``n`` nodes.

    ``pbft``: 2 n^2. ``scalable_multiagent``: k n log_k n, for nodes that
    talk in groups of ``k``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if algorithm == "pbft":
        return float(2 * n * n)
    if algorithm == "scalable_multiagent":
        if k < 2:
            raise ParameterError(f"group size k must be >= 2, got {k}")
        return k * n * _log_k(n, k)
    raise ParameterError(f"unknown algorithm {algorithm!r}")


def message_count_ceil(algorithm: str, n: int, k: int = 2) -> int:
    return math.ceil(message_count(algorithm, n, k))


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    elapsed: float
    committed: bool
    votes: int
    trace: tuple  # (ProtocolPhase, cumulative ms) pairs


@dataclass(frozen=True, eq=False)
class ProtocolBatch:
    elapsed: np.ndarray
    committed: bool
    votes: int
    phase_times: dict  # phase -> per-run duration array


def _phase_max(topology, model, max_h, src, dst, n_runs, rng, mask=None):
    """Per-run maximum delay over a fixed message set (src[j] -> dst[j])."""
    m = len(src)
    if m == 0:
        return np.zeros(n_runs)
    s = np.tile(np.asarray(src), n_runs)
    d = np.tile(np.asarray(dst), n_runs)
    delays = batch_route_delays(topology, model, s, d, max_h, rng).reshape(n_runs, m)
    if mask is not None:
        delays = np.where(mask, delays, -np.inf)
        out = delays.max(axis=1)
        return np.where(np.isfinite(out), out, 0.0)
    return delays.max(axis=1)


def simulate_protocol_batch(
    topology: ClusterTopology,
    model: LinkDelayModel,
    route: RouteParams,
    initiator: str,
    spec: QuorumSpec,
    rounds: int,
    n_runs: int,
    rng: np.random.Generator,
    xi: float = 0.0,
    n_silent: int = 0,
) -> ProtocolBatch:
    """Vectorised protocol runs sharing one initiator.

    ``n_silent`` invited nodes (chosen at random per run) never answer. If
    fewer than 2f + 1 nodes acknowledge, the run aborts after ACKNOWLEDGE.
    """
    if initiator not in topology.cluster_of:
        raise ParameterError(f"unknown initiator {initiator!r}")
    if initiator not in topology.quorum:
        raise ParameterError(f"initiator {initiator!r} is not a quorum member")
    if rounds < 0 or n_runs < 1 or xi < 0:
        raise ParameterError("rounds >= 0, n_runs >= 1 and xi >= 0 required")
    max_h = route.resolve(len(topology.quorum))
    init = topology.index(initiator)
    others = [topology.index(n) for n in topology.quorum if n != initiator]
    if not 0 <= n_silent <= len(others):
        raise ParameterError(f"n_silent must be in [0, {len(others)}]")
    votes = len(others) - n_silent
    committed = validate(votes, spec)

    # silent[r, j]: invited node others[j] stays quiet in run r
    silent = np.zeros((n_runs, len(others)), dtype=bool)
    if n_silent:
        order = np.argsort(rng.random((n_runs, len(others))), axis=1)
        np.put_along_axis(silent, order[:, :n_silent], True, axis=1)
    answer = ~silent

    times = {}
    times[ProtocolPhase.INVITATION] = _phase_max(
        topology, model, max_h, [init] * len(others), others, n_runs, rng
    )
    times[ProtocolPhase.ACKNOWLEDGE] = _phase_max(
        topology, model, max_h, others, [init] * len(others), n_runs, rng, answer
    )
    elapsed = times[ProtocolPhase.INVITATION] + times[ProtocolPhase.ACKNOWLEDGE]
    if not committed:
        return ProtocolBatch(elapsed=elapsed, committed=False, votes=votes, phase_times=times)

    times[ProtocolPhase.TRANSACTION_OK] = xi + _phase_max(
        topology, model, max_h, others, [init] * len(others), n_runs, rng, answer
    )
    members = [init] + others
    active = np.column_stack([np.ones(n_runs, dtype=bool), answer])
    pairs = [(a, b) for a in range(len(members)) for b in range(len(members)) if a != b]
    src = [members[a] for a, _ in pairs]
    dst = [members[b] for _, b in pairs]
    pair_mask = active[:, [a for a, _ in pairs]] & active[:, [b for _, b in pairs]]
    total_rounds = np.zeros(n_runs)
    for _ in range(rounds):
        total_rounds += _phase_max(topology, model, max_h, src, dst, n_runs, rng, pair_mask)
    times[ProtocolPhase.CONSENSUS_ROUNDS] = total_rounds
    elapsed = elapsed + times[ProtocolPhase.TRANSACTION_OK] + total_rounds
    return ProtocolBatch(elapsed=elapsed, committed=True, votes=votes, phase_times=times)


def simulate_protocol_run(
    topology: ClusterTopology,
    model: LinkDelayModel,
    route: RouteParams,
    initiator: str,
    spec: QuorumSpec,
    rounds: int,
    rng: np.random.Generator,
    xi: float = 0.0,
    n_silent: int = 0,
) -> ProtocolRun:
    batch = simulate_protocol_batch(
        topology, model, route, initiator, spec, rounds, 1, rng, xi=xi, n_silent=n_silent
    )
    t = 0.0
    trace = []
    for phase in PHASE_ORDER[:-1]:
        if phase not in batch.phase_times:
            break
        t += float(batch.phase_times[phase][0])
        trace.append((phase, t))
    trace.append((ProtocolPhase.COMMITTED if batch.committed else ProtocolPhase.ABORTED, t))
    return ProtocolRun(elapsed=float(batch.elapsed[0]), committed=batch.committed,
                       votes=batch.votes, trace=tuple(trace))
