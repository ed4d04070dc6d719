"""Simulated annealing with per-sweep Metropolis updates.

Each read anneals independently: ``sweeps`` full passes over the
variables in index order, sweep k using the k-th inverse temperature of
the schedule (every beta is used exactly once). The compiled kernel is
shared with the reverse-schedule sampler, which only changes the beta
trajectory.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ..qubo import QuboProblem, SampleSet
from ..seeding import TAG_KERNEL, kernel_seeds
from .base import SamplerRequest

_SCHEDULES = ("geometric", "linear")


@dataclass(frozen=True)
class SaConfig:
    sweeps: int = 1000
    beta_schedule: str = "geometric"
    beta_range: Optional[tuple[float, float]] = None
    reads: int = 1000

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be positive, got {self.sweeps}")
        if self.reads < 1:
            raise ValueError(f"reads must be positive, got {self.reads}")
        if self.beta_schedule not in _SCHEDULES:
            raise ValueError(f"beta_schedule must be one of {_SCHEDULES}")
        if self.beta_range is not None:
            hot, cold = self.beta_range
            if not (0.0 < hot < cold):
                raise ValueError(f"need 0 < beta_hot < beta_cold, got {self.beta_range}")
            object.__setattr__(self, "beta_range", (float(hot), float(cold)))


def default_beta_range(problem: QuboProblem) -> tuple[float, float]:
    """Coefficient-derived (beta_hot, beta_cold).

    Hot end accepts a worst-case uphill flip with probability 1/2; cold
    end rejects the smallest possible nonzero uphill flip with
    probability 99/100. Problems with no nonzero coefficient fall back
    to (ln 2, ln 100) since every schedule is equivalent on them.
    """
    abs_h = np.abs(problem.h)
    abs_q = np.abs(problem.dense_symmetric)
    stiffness = abs_h + abs_q.sum(axis=1)
    s_max = float(stiffness.max())
    if s_max == 0.0:
        return (math.log(2.0), math.log(100.0))
    per_var_min = []
    for i in range(problem.n):
        magnitudes = np.concatenate(([abs_h[i]], abs_q[i]))
        nonzero = magnitudes[magnitudes > 0.0]
        if nonzero.size:
            per_var_min.append(float(nonzero.min()))
    s_min = min(per_var_min)
    return (math.log(2.0) / s_max, math.log(100.0) / max(s_min, 1e-9))


def beta_values(beta_range: tuple[float, float], sweeps: int, kind: str) -> np.ndarray:
    hot, cold = beta_range
    if not (0.0 < hot < cold):
        raise ValueError(f"need 0 < beta_hot < beta_cold, got {beta_range}")
    if kind == "geometric":
        return np.geomspace(hot, cold, sweeps)
    if kind == "linear":
        return np.linspace(hot, cold, sweeps)
    raise ValueError(f"beta_schedule must be one of {_SCHEDULES}")


@njit(cache=True, nogil=True)
def _metropolis_kernel(h, qmat, betas, seeds, init_state, use_init, states):
    n = h.size
    reads = states.shape[0]
    for r in range(reads):
        np.random.seed(seeds[r])
        a = np.zeros(n, dtype=np.uint8)
        if use_init:
            for i in range(n):
                a[i] = init_state[i]
        else:
            for i in range(n):
                if np.random.random() < 0.5:
                    a[i] = 1
        # f[i] = h[i] + sum_j Q[i,j] a[j], maintained incrementally
        f = h.copy()
        for i in range(n):
            if a[i] == 1:
                for j in range(n):
                    q = qmat[j, i]
                    if q != 0.0:
                        f[j] += q
        for s in range(betas.size):
            beta = betas[s]
            for i in range(n):
                d = f[i] if a[i] == 0 else -f[i]
                if d <= 0.0 or np.random.random() < math.exp(-beta * d):
                    if a[i] == 0:
                        a[i] = 1
                        for j in range(n):
                            q = qmat[i, j]
                            if q != 0.0:
                                f[j] += q
                    else:
                        a[i] = 0
                        for j in range(n):
                            q = qmat[i, j]
                            if q != 0.0:
                                f[j] -= q
        for i in range(n):
            states[r, i] = a[i]


def run_metropolis(
    problem: QuboProblem,
    betas: np.ndarray,
    reads: int,
    seed: int,
    initial_state: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Run `reads` independent anneals over the given beta trajectory."""
    seeds = kernel_seeds(seed, TAG_KERNEL, count=reads)
    states = np.empty((reads, problem.n), dtype=np.uint8)
    if initial_state is None:
        init = np.zeros(problem.n, dtype=np.uint8)
        use_init = False
    else:
        init = np.ascontiguousarray(initial_state, dtype=np.uint8)
        use_init = True
    _metropolis_kernel(
        problem.h,
        problem.dense_symmetric,
        np.ascontiguousarray(betas, dtype=np.float64),
        seeds,
        init,
        use_init,
        states,
    )
    return states


def simulated_annealing(request: SamplerRequest, config: SaConfig | None = None) -> SampleSet:
    config = config or SaConfig()
    reads = request.reads_or(config.reads)
    beta_range = config.beta_range or default_beta_range(request.problem)
    betas = beta_values(beta_range, config.sweeps, config.beta_schedule)
    start = time.perf_counter()
    states = run_metropolis(request.problem, betas, reads, request.seed, request.initial_state)
    params = {
        "num_reads": reads,
        "sweeps": config.sweeps,
        "beta_schedule": config.beta_schedule,
        "beta_hot": beta_range[0],
        "beta_cold": beta_range[1],
        "warm_start": request.initial_state is not None,
    }
    return SampleSet.from_states(
        request.problem,
        states,
        sampler="sa",
        seed=request.seed,
        params=params,
        duration_s=time.perf_counter() - start,
    )
