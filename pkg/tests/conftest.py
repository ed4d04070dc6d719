"""Shared instance generators and slow reference oracles.

Everything here is deliberately independent of the library's fast
paths: energies via a plain double loop, objectives via the textbook
formula, state enumeration via bit arithmetic. Tests compare the
library against these, never against itself.
"""

from __future__ import annotations

import numpy as np
import pytest

from scqubo.coding import Dictionary, build_qubo
from scqubo.qubo import IsingProblem, QuboProblem, from_ising
from scqubo.samplers.base import SamplerRequest
from scqubo.samplers.exact import brute_force
from scqubo.samplers.nebm import nebm_sample
from scqubo.samplers.sa import SaConfig, simulated_annealing
from scqubo.seeding import spawn_rng

# test-local stream tags, disjoint from the library's
INSTANCE_TAG = 0x1C57
GLASS_TAG = 0x51A5
LEARN_TAG = 0xD1C7


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure runtime only."""
    problem = QuboProblem(2, np.array([1.0, -1.0]), {(0, 1): 0.5})
    simulated_annealing(
        SamplerRequest(problem, num_reads=2, seed=0), SaConfig(sweeps=2, reads=2)
    )
    nebm_sample(SamplerRequest(problem, seed=0))
    brute_force(problem)


def coding_instance(seed, n=16, m=49, lam=1.0, scale=0.8, blend=0.35):
    """Sparse-coding QUBO over a coherent nonnegative dictionary.

    A shared component keeps every pair of atoms overlapping, so the
    couplings are all repulsive and the landscape is frustrated rather
    than trivially empty. The patch is a small subset of atoms plus
    noise. Returns (x, atoms, lam, problem).
    """
    rng = spawn_rng(seed, INSTANCE_TAG)
    shared = rng.random(m)
    atoms = scale * (blend * shared[None, :] + (1.0 - blend) * rng.random((n, m)))
    k = int(rng.integers(2, 5))
    members = rng.choice(n, size=k, replace=False)
    x = atoms[members].sum(axis=0) + 0.25 * scale * rng.random(m)
    return x, atoms, lam, build_qubo(x, Dictionary(atoms), lam, "paper")


def twin_glass(seed, n=16):
    """Zero-field random +-1 spin glass as a QUBO.

    With no fields the Ising energy is even under global spin flip, so
    every QUBO level is shared by a state and its bitwise complement.
    """
    rng = spawn_rng(seed, GLASS_TAG)
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            couplings[(i, j)] = float(rng.choice((-1.0, 1.0)))
    return from_ising(IsingProblem(n, np.zeros(n), couplings, 0.0))


def pure_twin_instances(count, n=16):
    """First ``count`` glasses whose optimum is exactly one complement pair.

    Restricting to two-fold degeneracy makes the two quench basins equal
    by symmetry, which the chain-overlap statistics below rely on.
    """
    problems = []
    seed = 0
    while len(problems) < count:
        problem = twin_glass(seed, n)
        _, states = brute_force(problem)
        if len(states) == 2:
            problems.append(problem)
        seed += 1
    return problems


def oracle_energy(h, quadratic, offset, state):
    total = float(offset)
    for i, coeff in enumerate(h):
        total += float(coeff) * int(state[i])
    for (i, j), coeff in quadratic.items():
        total += float(coeff) * int(state[i]) * int(state[j])
    return total


def oracle_objective(x, atoms, lam, activation):
    residual = np.asarray(x, dtype=float) - np.asarray(activation, dtype=float) @ atoms
    return 0.5 * float(residual @ residual) + float(lam) * int(np.sum(activation))


def enumerate_states(n):
    """All 2**n binary states, one row each, bit i in column i."""
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
