"""Common sampler contract: one request type, SampleSet out.

Every sampler is a callable ``(SamplerRequest) -> SampleSet`` (extra
config arguments are bound by the caller). ``num_reads=None`` defers to
the sampler's own default so callers need not know each one's
convention.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..qubo import QuboProblem, SampleSet, as_state
from ..seeding import TAG_INIT, spawn_rng


@dataclass(frozen=True)
class SamplerRequest:
    problem: QuboProblem
    num_reads: Optional[int] = None
    initial_state: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_reads is not None and self.num_reads < 1:
            raise ValueError(f"num_reads must be positive, got {self.num_reads}")
        if self.initial_state is not None:
            s = as_state(self.initial_state)
            if s.size != self.problem.n:
                raise ValueError(
                    f"initial_state length {s.size} does not match n={self.problem.n}"
                )
            s.setflags(write=False)
            object.__setattr__(self, "initial_state", s)
        object.__setattr__(self, "seed", int(self.seed))

    def reads_or(self, default: int) -> int:
        return default if self.num_reads is None else self.num_reads


SamplerFn = Callable[[SamplerRequest], SampleSet]


def random_sampler(request: SamplerRequest) -> SampleSet:
    """Uniform i.i.d. states; the baseline everything else must beat."""
    reads = request.reads_or(1000)
    start = time.perf_counter()
    rng = spawn_rng(request.seed, TAG_INIT)
    states = rng.integers(0, 2, size=(reads, request.problem.n), dtype=np.uint8)
    return SampleSet.from_states(
        request.problem,
        states,
        sampler="random",
        seed=request.seed,
        params={"num_reads": reads},
        duration_s=time.perf_counter() - start,
    )
