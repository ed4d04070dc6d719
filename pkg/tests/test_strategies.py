"""Protocol bookkeeping, exercised mostly through scripted samplers."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import twin_glass
from scqubo.qubo import QuboProblem, SampleSet
from scqubo.samplers.base import SamplerRequest
from scqubo.samplers.sa import SaConfig, simulated_annealing
from scqubo.seeding import TAG_INIT, TAG_KERNEL, derived_seed, spawn_rng
from scqubo.strategies import (
    ChainAbort,
    ChainTrace,
    ReverseScheduleConfig,
    iterated_warm_start,
    qemc_chain,
    reverse_sa_sampler,
)

# h = (1, 2) gives every state of this problem a distinct energy:
# (0,0)=0  (1,0)=1  (0,1)=2  (1,1)=3
LADDER = QuboProblem(2, np.array([1.0, 2.0]))


def scripted(problem, script, name="scripted"):
    """Sampler that replays canned batches and logs every request."""
    calls = []

    def sampler(request):
        states = script[min(len(calls), len(script) - 1)]
        calls.append(request)
        return SampleSet.from_states(
            problem, np.array(states, dtype=np.uint8), sampler=name, seed=request.seed
        )

    return sampler, calls


def counting(problem):
    """Sampler that honors num_reads exactly, for resource accounting."""
    calls = []

    def sampler(request):
        calls.append(request)
        rng = np.random.default_rng(request.seed)
        states = rng.integers(0, 2, size=(request.reads_or(1), problem.n), dtype=np.uint8)
        return SampleSet.from_states(problem, states, sampler="counting", seed=request.seed)

    return sampler, calls


def failing_after(problem, good_calls):
    calls = []

    def sampler(request):
        calls.append(request)
        if len(calls) > good_calls:
            raise RuntimeError("backend went away")
        return SampleSet.from_states(
            problem, np.zeros((1, problem.n), dtype=np.uint8), sampler="flaky", seed=0
        )

    return sampler


# ---------------------------------------------------------------------------
# iterated warm start
# ---------------------------------------------------------------------------


def test_warm_start_iteration_zero_uses_the_seeded_random_state():
    sampler, calls = scripted(LADDER, [[[0, 0]]])
    iterated_warm_start(LADDER, sampler, iterations=1, seed=42)
    expected = spawn_rng(42, TAG_INIT).integers(0, 2, size=2, dtype=np.uint8)
    assert np.array_equal(calls[0].initial_state, expected)
    assert calls[0].seed == derived_seed(42, TAG_KERNEL, 0)


def test_warm_start_feeds_each_best_forward():
    script = [[[1, 0]], [[0, 1]], [[0, 0]]]
    sampler, calls = scripted(LADDER, script)
    trace = iterated_warm_start(LADDER, sampler, iterations=3, seed=0)
    assert np.array_equal(calls[1].initial_state, [1, 0])
    assert np.array_equal(calls[2].initial_state, [0, 1])
    assert [c.seed for c in calls] == [derived_seed(0, TAG_KERNEL, k) for k in range(3)]
    assert [r.iteration for r in trace.records] == [0, 1, 2]


def test_warm_start_single_iteration_is_one_plain_call():
    sampler, calls = scripted(LADDER, [[[0, 1], [1, 0], [0, 1]]])
    trace = iterated_warm_start(LADDER, sampler, iterations=1, seed=5)
    assert len(calls) == 1
    assert len(trace.records) == 1
    assert trace.best_energy == pytest.approx(1.0)  # (1,0) beats (0,1)
    assert trace.records[0].batch_size == 3


def test_warm_start_incumbent_may_regress_but_global_best_does_not():
    script = [[[0, 0]], [[1, 1]], [[1, 0]]]
    sampler, _ = scripted(LADDER, script)
    trace = iterated_warm_start(LADDER, sampler, iterations=3, seed=0)
    assert trace.incumbent_series() == pytest.approx([0.0, 3.0, 1.0])
    assert trace.global_best_series() == pytest.approx([0.0, 0.0, 0.0])
    assert trace.best_energy == 0.0
    assert list(trace.best_state) == [0, 0]
    assert trace.metadata["protocol"] == "warm-start"


def test_warm_start_abort_preserves_partial_trace():
    sampler = failing_after(LADDER, good_calls=2)
    with pytest.raises(ChainAbort, match="iteration 2") as excinfo:
        iterated_warm_start(LADDER, sampler, iterations=5, seed=0)
    partial = excinfo.value.trace
    assert isinstance(partial, ChainTrace)
    assert len(partial.records) == 2
    assert partial.best_energy == 0.0


def test_warm_start_checksum_is_reproducible():
    problem = twin_glass(3)
    sa = lambda request: simulated_annealing(request, SaConfig(sweeps=40, reads=20))
    a = iterated_warm_start(problem, sa, iterations=4, seed=9)
    b = iterated_warm_start(problem, sa, iterations=4, seed=9)
    c = iterated_warm_start(problem, sa, iterations=4, seed=10)
    assert a.checksum() == b.checksum()
    assert a.checksum() != c.checksum()


def test_chain_trace_csv_layout(tmp_path):
    script = [[[0, 1]], [[1, 0]], [[1, 1]]]
    sampler, _ = scripted(LADDER, script)
    trace = iterated_warm_start(LADDER, sampler, iterations=3, seed=0)
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,batch_min_energy,incumbent_energy,global_best_energy"
    assert lines[1] == "0,2.0,2.0,2.0"
    assert lines[3] == "2,3.0,3.0,1.0"  # global best sticks at the iteration-1 value


# ---------------------------------------------------------------------------
# qemc chain
# ---------------------------------------------------------------------------


def test_qemc_cold_start_request_shape():
    sampler, calls = scripted(LADDER, [[[0, 0]]])
    qemc_chain(LADDER, sampler, iterations=2, batch=7, seed=13)
    assert calls[0].initial_state is None
    assert calls[0].num_reads == 7
    assert calls[0].seed == derived_seed(13, TAG_KERNEL, 0)
    assert all(c.initial_state is not None for c in calls[1:])
    assert [c.seed for c in calls[1:]] == [
        derived_seed(13, TAG_KERNEL, k) for k in (1, 2)
    ]


def test_qemc_records_cold_start_plus_every_iteration():
    sampler, _ = scripted(LADDER, [[[1, 0]]])
    trace = qemc_chain(LADDER, sampler, iterations=3, batch=2, seed=0)
    assert [r.iteration for r in trace.records] == [0, 1, 2, 3]
    assert np.array_equal(trace.records[0].incumbent, [1, 0])
    assert trace.metadata["protocol"] == "qemc"
    assert trace.metadata["batch"] == 2


def test_qemc_incumbent_adopts_batch_min_even_when_worse():
    script = [[[1, 0]], [[0, 1]], [[0, 0]]]
    sampler, calls = scripted(LADDER, script)
    trace = qemc_chain(LADDER, sampler, iterations=2, batch=1, seed=0)
    assert trace.incumbent_series() == pytest.approx([1.0, 2.0, 0.0])
    assert np.array_equal(calls[2].initial_state, [0, 1])  # the regressed incumbent
    assert trace.global_best_series() == pytest.approx([1.0, 1.0, 0.0])
    assert trace.best_energy == 0.0


def test_qemc_elitist_keeps_the_better_incumbent():
    script = [[[1, 0]], [[0, 1]], [[0, 0]]]
    sampler, calls = scripted(LADDER, script)
    trace = qemc_chain(LADDER, sampler, iterations=2, batch=1, seed=0, elitist=True)
    assert trace.incumbent_series() == pytest.approx([1.0, 1.0, 0.0])
    assert np.array_equal(calls[2].initial_state, [1, 0])
    assert trace.records[1].batch_min_energy == pytest.approx(2.0)  # still recorded
    assert trace.metadata["elitist"] is True


def test_qemc_cold_sampler_covers_the_cold_start():
    cold, cold_calls = scripted(LADDER, [[[0, 1]]], name="cold")
    main, main_calls = scripted(LADDER, [[[0, 0]]], name="main")
    trace = qemc_chain(LADDER, main, iterations=2, batch=3, seed=1, cold_sampler=cold)
    assert len(cold_calls) == 1 and cold_calls[0].initial_state is None
    assert len(main_calls) == 2
    assert all(c.initial_state is not None for c in main_calls)
    assert trace.metadata["cold_sampler"] == "cold"
    assert trace.metadata["sampler"] == "main"


def test_qemc_consumes_exactly_batch_reads_per_step():
    sampler, calls = counting(LADDER)
    trace = qemc_chain(LADDER, sampler, iterations=5, batch=16, seed=3)
    assert all(c.num_reads == 16 for c in calls)
    assert sum(r.batch_size for r in trace.records) == (5 + 1) * 16


def test_qemc_zero_iterations_is_just_the_cold_start():
    sampler, calls = scripted(LADDER, [[[0, 0]]])
    trace = qemc_chain(LADDER, sampler, iterations=0, batch=4, seed=0)
    assert len(calls) == 1
    assert len(trace.records) == 1
    assert trace.best_energy == 0.0


def test_qemc_cold_start_failure_aborts_with_empty_trace():
    sampler = failing_after(LADDER, good_calls=0)
    with pytest.raises(ChainAbort, match="cold-start sampler failed") as excinfo:
        qemc_chain(LADDER, sampler, iterations=2, batch=1, seed=0)
    assert excinfo.value.trace.records == ()


def test_qemc_mid_chain_failure_keeps_completed_records():
    sampler = failing_after(LADDER, good_calls=3)
    with pytest.raises(ChainAbort, match="iteration 3") as excinfo:
        qemc_chain(LADDER, sampler, iterations=5, batch=1, seed=0)
    assert [r.iteration for r in excinfo.value.trace.records] == [0, 1, 2]


def test_qemc_reverse_schedule_end_to_end_checksum():
    problem = twin_glass(4)
    config = ReverseScheduleConfig(s=0.6, sweeps=60, reads=30)
    rev = lambda request: reverse_sa_sampler(request, config)
    cold = lambda request: simulated_annealing(
        request, SaConfig(sweeps=60, reads=request.reads_or(30))
    )
    a = qemc_chain(problem, rev, iterations=3, batch=30, seed=2, cold_sampler=cold)
    b = qemc_chain(problem, rev, iterations=3, batch=30, seed=2, cold_sampler=cold)
    assert a.checksum() == b.checksum()
    assert a.metadata["cold_sampler"] == "sa"
    assert a.metadata["sampler"] == "reverse-sa"


def test_chain_checksum_ignores_duration():
    sampler, _ = scripted(LADDER, [[[1, 0]]])
    trace = qemc_chain(LADDER, sampler, iterations=1, batch=1, seed=0)
    slow = ChainTrace(
        trace.records,
        trace.best_state,
        trace.best_energy,
        {**trace.metadata, "duration_s": 99.0},
    )
    assert slow.checksum() == trace.checksum()


def test_protocol_argument_validation():
    sampler, _ = scripted(LADDER, [[[0, 0]]])
    with pytest.raises(ValueError, match="iterations"):
        iterated_warm_start(LADDER, sampler, iterations=0)
    with pytest.raises(ValueError, match="iterations"):
        qemc_chain(LADDER, sampler, iterations=-1)
    with pytest.raises(ValueError, match="batch"):
        qemc_chain(LADDER, sampler, batch=0)
