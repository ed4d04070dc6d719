"""Non-equilibrium Boltzmann machine: driven spiking dynamics over a QUBO.

One neuron per variable. Each step updates membrane potentials from the
current spike vector, draws new spikes through a logistic activation
tempered by a cyclic cooling schedule, and applies a refractory penalty
plus a forced hold after every spike change:

    v_i(t+1) = alpha*v_i(t) - (h_i + sum_j Q_ij a_j(t)) - kappa_i*r_i(t) + gamma*eta_i
    P(a_i(t+1) = 1) = 1 / (1 + exp(-v_i(t+1) / T(t)))
    r_i(t+1) = rho*r_i(t) + a_i(t)

The drive enters negated so that lower-energy configurations spike more;
eta is standard logistic noise. kappa_i = kappa / 2^k_i with a per-run,
per-neuron integer draw k_i, and a neuron whose output just changed is
frozen for a drawn number of steps. The spike vector is recorded every
``sample_interval`` steps.
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


@dataclass(frozen=True)
class NebmConfig:
    t_max: float = 15.0
    delta_t: float = 1.0
    steps_per_temperature: int = 20
    total_steps: int = 6000
    sample_interval: int = 20
    alpha: float = 0.5
    gamma: float = 1.0
    rho: float = 0.7
    kappa: float = 1.0
    refract_hold: tuple[int, int] = (5, 10)
    refract_scaling: tuple[int, int] = (4, 8)
    t_min: float = 1.0
    theta: Optional[float] = None  # accepted for config compatibility; unused
    hold_at_floor: bool = False

    def __post_init__(self) -> None:
        if not (self.t_max > self.t_min > 0.0):
            raise ValueError(f"need t_max > t_min > 0, got {self.t_max}, {self.t_min}")
        if self.delta_t <= 0.0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if self.steps_per_temperature < 1 or self.total_steps < 1:
            raise ValueError("step counts must be positive")
        if self.sample_interval < 1 or self.total_steps % self.sample_interval:
            raise ValueError(
                f"sample_interval {self.sample_interval} must divide total_steps {self.total_steps}"
            )
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.gamma < 0.0 or self.kappa < 0.0:
            raise ValueError("gamma and kappa must be nonnegative")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        for name in ("refract_hold", "refract_scaling"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} range must satisfy 0 <= lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (int(lo), int(hi)))

    @property
    def samples_per_run(self) -> int:
        return self.total_steps // self.sample_interval


@dataclass(frozen=True)
class NebmState:
    """Snapshot after one step: potentials, spikes, refractory state, holds."""

    v: np.ndarray
    a: np.ndarray
    r: np.ndarray
    hold: np.ndarray
    t: int
    temperature: float


@njit(cache=True, nogil=True)
def _nebm_kernel(
    h,
    qmat,
    seed,
    t_max,
    t_min,
    delta_t,
    steps_per_t,
    total_steps,
    sample_interval,
    alpha,
    gamma,
    rho,
    kappa,
    hold_lo,
    hold_hi,
    scale_lo,
    scale_hi,
    hold_at_floor,
    init_state,
    use_init,
    samples,
    record,
    v_traj,
    a_traj,
    r_traj,
    hold_traj,
    temp_traj,
):
    n = h.size
    np.random.seed(seed)
    kappa_eff = np.empty(n)
    for i in range(n):
        k = np.random.randint(scale_lo, scale_hi + 1)
        kappa_eff[i] = kappa / 2.0**k
    a = np.zeros(n, dtype=np.uint8)
    if use_init:
        for i in range(n):
            a[i] = init_state[i]
    else:
        for i in range(n):
            if np.random.random() < 0.5:
                a[i] = 1
    new_a = np.zeros(n, dtype=np.uint8)
    v = np.zeros(n)
    r = np.zeros(n)
    hold = np.zeros(n, dtype=np.int64)
    levels = int(math.floor((t_max - t_min) / delta_t + 1e-9)) + 1
    row = 0
    for t in range(total_steps):
        level = t // steps_per_t
        if hold_at_floor:
            if level >= levels:
                level = levels - 1
        else:
            level = level % levels
        temp = t_max - delta_t * level
        for i in range(n):
            drive = h[i]
            for j in range(n):
                q = qmat[i, j]
                if q != 0.0 and a[j] == 1:
                    drive += q
            u = np.random.random()
            if u <= 0.0:
                u = 1e-12
            eta = math.log(u / (1.0 - u))
            v[i] = alpha * v[i] - drive - kappa_eff[i] * r[i] + gamma * eta
        for i in range(n):
            if hold[i] > 0:
                new_a[i] = a[i]
                hold[i] -= 1
            else:
                p = 1.0 / (1.0 + math.exp(-v[i] / temp))
                spike = np.uint8(0)
                if np.random.random() < p:
                    spike = np.uint8(1)
                if spike != a[i]:
                    hold[i] = np.random.randint(hold_lo, hold_hi + 1)
                new_a[i] = spike
        for i in range(n):
            r[i] = rho * r[i] + a[i]
            a[i] = new_a[i]
        if record:
            for i in range(n):
                v_traj[t, i] = v[i]
                a_traj[t, i] = a[i]
                r_traj[t, i] = r[i]
                hold_traj[t, i] = hold[i]
            temp_traj[t] = temp
        if (t + 1) % sample_interval == 0:
            for i in range(n):
                samples[row, i] = a[i]
            row += 1


def _dummy_traj():
    return (
        np.zeros((1, 1)),
        np.zeros((1, 1), dtype=np.uint8),
        np.zeros((1, 1)),
        np.zeros((1, 1), dtype=np.int64),
        np.zeros(1),
    )


def _run_one(
    problem: QuboProblem,
    config: NebmConfig,
    seed: int,
    initial_state: Optional[np.ndarray],
    samples_out: np.ndarray,
    traj=None,
) -> None:
    if initial_state is None:
        init = np.zeros(problem.n, dtype=np.uint8)
        use_init = False
    else:
        init = np.ascontiguousarray(initial_state, dtype=np.uint8)
        use_init = True
    record = traj is not None
    v_traj, a_traj, r_traj, hold_traj, temp_traj = traj if record else _dummy_traj()
    _nebm_kernel(
        problem.h,
        problem.dense_symmetric,
        seed,
        config.t_max,
        config.t_min,
        config.delta_t,
        config.steps_per_temperature,
        config.total_steps,
        config.sample_interval,
        config.alpha,
        config.gamma,
        config.rho,
        config.kappa,
        config.refract_hold[0],
        config.refract_hold[1],
        config.refract_scaling[0],
        config.refract_scaling[1],
        config.hold_at_floor,
        init,
        use_init,
        samples_out,
        record,
        v_traj,
        a_traj,
        r_traj,
        hold_traj,
        temp_traj,
    )


def nebm_sample(request: SamplerRequest, config: NebmConfig | None = None) -> SampleSet:
    """Run the dynamics; default is a single run of total_steps/sample_interval samples."""
    config = config or NebmConfig()
    runs = request.reads_or(1)
    spr = config.samples_per_run
    seeds = kernel_seeds(request.seed, TAG_KERNEL, count=runs)
    states = np.empty((runs * spr, request.problem.n), dtype=np.uint8)
    start = time.perf_counter()
    for r in range(runs):
        _run_one(
            request.problem,
            config,
            int(seeds[r]),
            request.initial_state,
            states[r * spr : (r + 1) * spr],
        )
    params = {
        "runs": runs,
        "t_max": config.t_max,
        "t_min": config.t_min,
        "delta_t": config.delta_t,
        "steps_per_temperature": config.steps_per_temperature,
        "total_steps": config.total_steps,
        "sample_interval": config.sample_interval,
        "alpha": config.alpha,
        "gamma": config.gamma,
        "rho": config.rho,
        "kappa": config.kappa,
        "refract_hold": list(config.refract_hold),
        "refract_scaling": list(config.refract_scaling),
        "hold_at_floor": config.hold_at_floor,
        "warm_start": request.initial_state is not None,
    }
    return SampleSet.from_states(
        request.problem,
        states,
        sampler="nebm",
        seed=request.seed,
        params=params,
        duration_s=time.perf_counter() - start,
    )


def nebm_trajectory(request: SamplerRequest, config: NebmConfig | None = None) -> list[NebmState]:
    """Single run with every step recorded; for inspection and tests."""
    config = config or NebmConfig()
    n = request.problem.n
    steps = config.total_steps
    seeds = kernel_seeds(request.seed, TAG_KERNEL, count=1)
    samples = np.empty((config.samples_per_run, n), dtype=np.uint8)
    traj = (
        np.zeros((steps, n)),
        np.zeros((steps, n), dtype=np.uint8),
        np.zeros((steps, n)),
        np.zeros((steps, n), dtype=np.int64),
        np.zeros(steps),
    )
    _run_one(request.problem, config, int(seeds[0]), request.initial_state, samples, traj)
    v_traj, a_traj, r_traj, hold_traj, temp_traj = traj
    return [
        NebmState(
            v_traj[t].copy(),
            a_traj[t].copy(),
            r_traj[t].copy(),
            hold_traj[t].copy(),
            t + 1,
            float(temp_traj[t]),
        )
        for t in range(steps)
    ]
