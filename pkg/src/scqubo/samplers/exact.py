"""Exhaustive ground-state enumeration.

Walks all 2^n states in Gray-code order so each step is a single bit
flip with an incremental energy update. Returns every state attaining
the minimum, so degeneracy is visible rather than hidden behind an
arbitrary pick. Capped at n = 30; runtime grows as 2^n * n, which is
already minutes at the cap.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from ..qubo import ENERGY_ATOL, QuboProblem, SampleSet
from .base import SamplerRequest

BRUTE_FORCE_MAX_N = 30


@njit(cache=True, nogil=True)
def _scan_min(h, qmat, offset):
    n = h.size
    a = np.zeros(n, dtype=np.uint8)
    f = h.copy()
    e = offset
    emin = e
    total = np.int64(1) << n
    for k in range(1, total):
        i = 0
        kk = k
        while kk & 1 == 0:
            kk >>= 1
            i += 1
        if a[i] == 0:
            e += f[i]
            a[i] = 1
            for j in range(n):
                q = qmat[i, j]
                if q != 0.0:
                    f[j] += q
        else:
            e -= f[i]
            a[i] = 0
            for j in range(n):
                q = qmat[i, j]
                if q != 0.0:
                    f[j] -= q
        if e < emin:
            emin = e
    return emin


@njit(cache=True, nogil=True)
def _scan_collect(h, qmat, offset, emin, atol, out):
    """Fill `out` with states within atol of emin; returns how many matched.

    With out of size 0 this is a pure counting pass.
    """
    n = h.size
    cap = out.shape[0]
    a = np.zeros(n, dtype=np.uint8)
    f = h.copy()
    e = offset
    found = 0
    if abs(e - emin) <= atol:
        if found < cap:
            for j in range(n):
                out[found, j] = a[j]
        found += 1
    total = np.int64(1) << n
    for k in range(1, total):
        i = 0
        kk = k
        while kk & 1 == 0:
            kk >>= 1
            i += 1
        if a[i] == 0:
            e += f[i]
            a[i] = 1
            for j in range(n):
                q = qmat[i, j]
                if q != 0.0:
                    f[j] += q
        else:
            e -= f[i]
            a[i] = 0
            for j in range(n):
                q = qmat[i, j]
                if q != 0.0:
                    f[j] -= q
        if abs(e - emin) <= atol:
            if found < cap:
                for j in range(n):
                    out[found, j] = a[j]
            found += 1
    return found


def brute_force(problem: QuboProblem, atol: float = ENERGY_ATOL) -> tuple[float, np.ndarray]:
    """(optimal energy, all optimal states) by full enumeration.

    States come back as a (k, n) uint8 array in Gray-code visit order;
    energies within `atol` of the exact minimum count as optimal.
    """
    if problem.n > BRUTE_FORCE_MAX_N:
        raise ValueError(
            f"refusing exhaustive enumeration for n={problem.n}: "
            f"capped at {BRUTE_FORCE_MAX_N} variables"
        )
    qmat = problem.dense_symmetric
    emin = float(_scan_min(problem.h, qmat, problem.offset))
    empty = np.empty((0, problem.n), dtype=np.uint8)
    count = int(_scan_collect(problem.h, qmat, problem.offset, emin, atol, empty))
    out = np.empty((count, problem.n), dtype=np.uint8)
    _scan_collect(problem.h, qmat, problem.offset, emin, atol, out)
    return emin, out


def exact_sampler(request: SamplerRequest) -> SampleSet:
    """Sampler wrapper over brute_force: returns the full optimal set."""
    start = time.perf_counter()
    _, states = brute_force(request.problem)
    return SampleSet.from_states(
        request.problem,
        states,
        sampler="brute",
        seed=request.seed,
        params={"max_n": BRUTE_FORCE_MAX_N},
        duration_s=time.perf_counter() - start,
    )
