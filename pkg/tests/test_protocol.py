import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dexfrag.errors import ParameterError
from dexfrag.protocol import (
    PHASE_ORDER,
    ProtocolPhase,
    QuorumSpec,
    message_count,
    message_count_ceil,
    quorum_from_faults,
    simulate_protocol_batch,
    simulate_protocol_run,
    validate,
)
from dexfrag.topology import ClusterConfig, LinkDelayModel, RouteParams, build_topology

F3 = quorum_from_faults(3)


def topo(c=(5, 5), quorum=None):
    return build_topology(ClusterConfig(*c), quorum)


class TestArithmetic:
    def test_message_counts(self):
        assert message_count("pbft", 10) == 200
        assert message_count("pbft", 1) == 2
        assert message_count("scalable_multiagent", 8, 2) == 48
        assert message_count_ceil("scalable_multiagent", 10, 2) == 67
        with pytest.raises(ParameterError):
            message_count("scalable_multiagent", 8, 1)
        with pytest.raises(ParameterError):
            message_count("raft", 8)

    def test_pbft_outgrows_scalable(self):
        ratios = [message_count("pbft", n) / message_count("scalable_multiagent", n, 2) for n in (4, 16, 64, 256)]
        assert all(a < b for a, b in zip(ratios, ratios[1:]))

    def test_quorum(self):
        assert (F3.n_nodes, F3.threshold) == (10, 7)
        q0 = quorum_from_faults(0)
        assert (q0.n_nodes, q0.threshold) == (1, 1)
        with pytest.raises(ParameterError):
            QuorumSpec(9, 3)

    @given(st.integers(0, 10_000))
    def test_majority(self, f):
        q = quorum_from_faults(f)
        assert q.threshold / q.n_nodes > 0.5

    def test_validate(self):
        assert validate(7, F3) and not validate(6, F3)
        assert validate(1, quorum_from_faults(0))
        with pytest.raises(ParameterError):
            validate(11, F3)

    @given(st.integers(0, 30))
    def test_validate_monotone(self, f):
        q = quorum_from_faults(f)
        results = [validate(v, q) for v in range(q.n_nodes + 1)]
        assert results == sorted(results)


class TestRun:
    def test_two_node_run(self):
        t = topo(quorum=["A0", "B0"])
        m = LinkDelayModel(slow_mean=100.0)
        run = simulate_protocol_run(t, m, RouteParams(), "A0", quorum_from_faults(0), 0,
                                    np.random.default_rng(0), xi=5.0)
        assert run.committed
        assert 3 * m.slow_low + 5 <= run.elapsed <= 3 * m.slow_high + 5
        assert run.trace[-1] == (ProtocolPhase.COMMITTED, pytest.approx(run.elapsed))

    def test_trace_order(self):
        run = simulate_protocol_run(topo(), LinkDelayModel(), RouteParams(), "B2", F3, 2, np.random.default_rng(1))
        phases = [p for p, _ in run.trace]
        assert phases == list(PHASE_ORDER)
        times = [t for _, t in run.trace]
        assert times == sorted(times)

    def test_abort(self):
        run = simulate_protocol_run(topo(), LinkDelayModel(), RouteParams(), "A0", F3, 2,
                                    np.random.default_rng(2), n_silent=3)
        assert not run.committed and run.votes == 6
        assert run.trace[-1][0] is ProtocolPhase.ABORTED
        assert [p for p, _ in run.trace[:-1]] == [ProtocolPhase.INVITATION, ProtocolPhase.ACKNOWLEDGE]

    def test_unknown_initiator(self):
        with pytest.raises(ParameterError):
            simulate_protocol_run(topo(), LinkDelayModel(), RouteParams(), "C0", F3, 1, np.random.default_rng(0))

    def test_deterministic(self):
        args = (topo(), LinkDelayModel(), RouteParams(), "A0", F3, 1, 50)
        a = simulate_protocol_batch(*args, np.random.default_rng(5))
        b = simulate_protocol_batch(*args, np.random.default_rng(5))
        assert np.array_equal(a.elapsed, b.elapsed)

    def test_nondecreasing_in_rounds(self):
        # same stream prefix: extra rounds only add non-negative phase time
        prev = None
        for rounds in range(4):
            e = simulate_protocol_batch(topo(), LinkDelayModel(), RouteParams(), "A0", F3, rounds, 200,
                                        np.random.default_rng(7), xi=1.0).elapsed
            if prev is not None:
                assert np.all(e >= prev)
            prev = e

    def test_asymmetric_network_is_faster(self):
        m = LinkDelayModel(slow_mean=300.0)
        means = [
            simulate_protocol_batch(topo(c), m, RouteParams(), "A0", F3, 2, 10_000,
                                    np.random.default_rng(8)).elapsed.mean()
            for c in [(5, 5), (9, 1)]
        ]
        assert means[1] < means[0]
