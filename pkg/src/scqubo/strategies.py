"""Iterative improvement protocols layered over any sampler.

Two protocols: iterated warm starting (each run initialized at the
previous run's best state) and a QEMC-style chain (a cold-start batch
followed by batches initialized at the running incumbent). Both work
with any ``SamplerFn`` and record a ChainTrace. A reverse-annealing
schedule is emulated classically by re-heating the Metropolis beta
trajectory part-way and re-freezing it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .qubo import QuboProblem, SampleSet, energy
from .samplers.base import SamplerFn, SamplerRequest
from .samplers.sa import default_beta_range, run_metropolis
from .seeding import TAG_INIT, TAG_KERNEL, derived_seed, spawn_rng


class ChainAbort(RuntimeError):
    """Sampler failure mid-chain; the partial trace is on .trace."""

    def __init__(self, message: str, trace: "ChainTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ChainRecord:
    """One protocol iteration.

    ``incumbent`` is the state carried forward after this iteration's
    update (for a cold start, the selected initial incumbent);
    ``batch_min_energy`` is the best energy this iteration's batch
    found; ``batch_size`` counts the samples it drew.
    """

    iteration: int
    incumbent: np.ndarray
    incumbent_energy: float
    batch_min_energy: float
    batch_size: int


@dataclass(frozen=True)
class ChainTrace:
    records: tuple[ChainRecord, ...]
    best_state: np.ndarray
    best_energy: float
    metadata: dict

    def global_best_series(self) -> np.ndarray:
        """Running minimum of the batch minima; non-increasing by construction."""
        return np.minimum.accumulate([r.batch_min_energy for r in self.records])

    def incumbent_series(self) -> np.ndarray:
        return np.array([r.incumbent_energy for r in self.records])

    def to_csv(self, destination: str | Path) -> None:
        gbest = self.global_best_series()
        lines = ["iteration,batch_min_energy,incumbent_energy,global_best_energy"]
        for rec, g in zip(self.records, gbest):
            lines.append(
                f"{rec.iteration},{rec.batch_min_energy!r},{rec.incumbent_energy!r},{float(g)!r}"
            )
        Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def checksum(self) -> str:
        import hashlib
        import json

        m = hashlib.sha256()
        meta = {k: v for k, v in self.metadata.items() if k != "duration_s"}
        m.update(json.dumps(meta, sort_keys=True, default=str).encode())
        for rec in self.records:
            m.update(rec.incumbent.tobytes())
            m.update(np.float64(rec.incumbent_energy).tobytes())
            m.update(np.float64(rec.batch_min_energy).tobytes())
            m.update(str(rec.batch_size).encode())
        m.update(self.best_state.tobytes())
        m.update(np.float64(self.best_energy).tobytes())
        return m.hexdigest()


def _frozen(state: np.ndarray) -> np.ndarray:
    out = np.array(state, dtype=np.uint8)
    out.setflags(write=False)
    return out


def iterated_warm_start(
    problem: QuboProblem,
    sampler: SamplerFn,
    iterations: int = 100,
    seed: int = 0,
    num_reads: Optional[int] = None,
    metadata: Optional[dict] = None,
) -> ChainTrace:
    """Run the sampler `iterations` times, feeding each run's best state forward.

    Iteration 0 starts from a seeded uniform random state. The incumbent
    passed on is the best of the previous run (not the global best), so
    regression is possible; the global best is tracked separately.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be positive, got {iterations}")
    start = time.perf_counter()
    init = spawn_rng(seed, TAG_INIT).integers(0, 2, size=problem.n, dtype=np.uint8)
    records: list[ChainRecord] = []
    meta = dict(metadata or {})
    meta.update({"protocol": "warm-start", "seed": int(seed), "iterations": iterations})
    incumbent = _frozen(init)
    best_state, best_energy = incumbent, float("inf")
    for k in range(iterations):
        request = SamplerRequest(
            problem,
            num_reads=num_reads,
            initial_state=incumbent,
            seed=derived_seed(seed, TAG_KERNEL, k),
        )
        try:
            sampleset = sampler(request)
        except Exception as exc:
            trace = _finish_trace(records, best_state, best_energy, meta, start)
            raise ChainAbort(f"sampler failed at iteration {k}: {exc}", trace) from exc
        meta.setdefault("sampler", sampleset.metadata["sampler"])
        b_state, b_energy = sampleset.best
        if b_energy < best_energy:
            best_state, best_energy = _frozen(b_state), b_energy
        incumbent = _frozen(b_state)
        records.append(
            ChainRecord(k, incumbent, b_energy, b_energy, sampleset.num_samples)
        )
    return _finish_trace(records, best_state, best_energy, meta, start)


def qemc_chain(
    problem: QuboProblem,
    sampler: SamplerFn,
    iterations: int = 100,
    batch: int = 1000,
    seed: int = 0,
    cold_sampler: Optional[SamplerFn] = None,
    elitist: bool = False,
    metadata: Optional[dict] = None,
) -> ChainTrace:
    """Cold-start batch, then `iterations` batches chained on the incumbent.

    The incumbent becomes each batch's minimum (ties: first occurrence),
    so it may regress when the schedule is hot; pass elitist=True to
    keep the better of old and new instead. ``cold_sampler`` covers
    samplers that cannot cold-start (the reverse schedule needs an
    initial state), defaulting to ``sampler`` itself. Total reads:
    (iterations + 1) * batch.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be nonnegative, got {iterations}")
    if batch < 1:
        raise ValueError(f"batch must be positive, got {batch}")
    start = time.perf_counter()
    meta = dict(metadata or {})
    meta.update(
        {
            "protocol": "qemc",
            "seed": int(seed),
            "iterations": iterations,
            "batch": batch,
            "elitist": elitist,
        }
    )
    records: list[ChainRecord] = []
    cold = cold_sampler or sampler
    request = SamplerRequest(problem, num_reads=batch, seed=derived_seed(seed, TAG_KERNEL, 0))
    try:
        sampleset = cold(request)
    except Exception as exc:
        trace = _finish_trace(records, np.zeros(problem.n, np.uint8), float("inf"), meta, start)
        raise ChainAbort(f"cold-start sampler failed: {exc}", trace) from exc
    meta.setdefault("cold_sampler", sampleset.metadata["sampler"])
    inc_state, inc_energy = sampleset.best
    inc_state = _frozen(inc_state)
    best_state, best_energy = inc_state, inc_energy
    records.append(ChainRecord(0, inc_state, inc_energy, inc_energy, sampleset.num_samples))
    for k in range(1, iterations + 1):
        request = SamplerRequest(
            problem,
            num_reads=batch,
            initial_state=inc_state,
            seed=derived_seed(seed, TAG_KERNEL, k),
        )
        try:
            sampleset = sampler(request)
        except Exception as exc:
            trace = _finish_trace(records, best_state, best_energy, meta, start)
            raise ChainAbort(f"sampler failed at iteration {k}: {exc}", trace) from exc
        meta.setdefault("sampler", sampleset.metadata["sampler"])
        b_state, b_energy = sampleset.best
        if b_energy < best_energy:
            best_state, best_energy = _frozen(b_state), b_energy
        if not elitist or b_energy <= inc_energy:
            inc_state, inc_energy = _frozen(b_state), b_energy
        records.append(ChainRecord(k, inc_state, inc_energy, b_energy, sampleset.num_samples))
    return _finish_trace(records, best_state, best_energy, meta, start)


def _finish_trace(records, best_state, best_energy, meta, start) -> ChainTrace:
    meta = dict(meta)
    meta["duration_s"] = time.perf_counter() - start
    return ChainTrace(tuple(records), _frozen(best_state), float(best_energy), meta)


# ---------------------------------------------------------------------------
# Reverse-annealing schedule, emulated on the Metropolis kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReverseScheduleConfig:
    """Ramp down from cold to beta(s), hold, ramp back up to cold.

    ``s`` is the retention fraction: beta(s) = beta_hot * (beta_cold /
    beta_hot)^s, so s -> 1 stays cold (initial state refined in place)
    and s -> 0 re-heats fully (initial state forgotten).
    """

    s: float
    fractions: tuple[float, float, float] = (0.10, 0.80, 0.10)
    beta_range: Optional[tuple[float, float]] = None
    sweeps: int = 1000
    reads: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        f = tuple(float(x) for x in self.fractions)
        if len(f) != 3 or any(x <= 0.0 for x in f) or abs(sum(f) - 1.0) > 1e-9:
            raise ValueError(f"fractions must be three positive values summing to 1, got {f}")
        object.__setattr__(self, "fractions", f)
        if self.sweeps < 3:
            raise ValueError(f"sweeps must be at least 3, got {self.sweeps}")
        if self.reads < 1:
            raise ValueError(f"reads must be positive, got {self.reads}")
        if self.beta_range is not None:
            hot, cold = self.beta_range
            if not (0.0 < hot < cold):
                raise ValueError(f"need 0 < beta_hot < beta_cold, got {self.beta_range}")
            object.__setattr__(self, "beta_range", (float(hot), float(cold)))


def reverse_beta_values(problem: QuboProblem, config: ReverseScheduleConfig) -> np.ndarray:
    """Per-sweep betas tracing the down/hold/up schedule in exponent space."""
    hot, cold = config.beta_range or default_beta_range(problem)
    f_down, _, f_up = config.fractions
    n_down = max(1, round(f_down * config.sweeps))
    n_up = max(1, round(f_up * config.sweeps))
    n_hold = config.sweeps - n_down - n_up
    if n_hold < 1:
        raise ValueError(f"sweeps={config.sweeps} too few for fractions {config.fractions}")
    exponents = np.concatenate(
        [
            np.linspace(1.0, config.s, n_down, endpoint=False),
            np.full(n_hold, config.s),
            np.linspace(config.s, 1.0, n_up),
        ]
    )
    return hot * (cold / hot) ** exponents


def reverse_sa_sampler(
    request: SamplerRequest, config: ReverseScheduleConfig
) -> SampleSet:
    """Metropolis reads over the reverse schedule; initial_state is mandatory."""
    if request.initial_state is None:
        raise ValueError("reverse schedule requires an initial_state to retain")
    reads = request.reads_or(config.reads)
    betas = reverse_beta_values(request.problem, config)
    start = time.perf_counter()
    states = run_metropolis(request.problem, betas, reads, request.seed, request.initial_state)
    hot, cold = config.beta_range or default_beta_range(request.problem)
    params = {
        "num_reads": reads,
        "sweeps": config.sweeps,
        "s": config.s,
        "fractions": list(config.fractions),
        "beta_hot": hot,
        "beta_cold": cold,
    }
    return SampleSet.from_states(
        request.problem,
        states,
        sampler="reverse-sa",
        seed=request.seed,
        params=params,
        duration_s=time.perf_counter() - start,
    )
