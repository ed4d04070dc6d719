"""Unsupervised dictionary learning over binary sparse codes.

Per epoch, every patch is coded by the supplied solver and the
dictionary takes the residual-driven local step

    D <- D + eta * outer(a, x - a D)

which moves only the atoms active in the code. After each epoch the
sparsity penalty grows multiplicatively while the epoch's mean sparsity
fraction exceeds the target, and never shrinks. Training stops early
once both the mean error and mean sparsity change by less than
``convergence_tol`` (relative) between successive epochs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .coding import Dictionary, ImagePatch, build_qubo
from .samplers.base import SamplerFn, SamplerRequest
from .seeding import TAG_INIT, TAG_KERNEL, TAG_ORDER, derived_seed, spawn_rng


@dataclass(frozen=True)
class LearnConfig:
    p: int
    s_target: float
    lambda_init: float = 0.01
    lambda_growth: float = 1.1
    learning_rate: float = 0.1
    epochs: int = 30
    convergence_tol: float = 1e-3
    seed: int = 0
    batch_size: int = 1
    qubo_mode: str = "paper"

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError(f"p must be positive, got {self.p}")
        if not 0.0 < self.s_target < 1.0:
            raise ValueError(f"s_target must lie in (0, 1), got {self.s_target}")
        if self.lambda_init <= 0.0:
            raise ValueError(f"lambda_init must be positive, got {self.lambda_init}")
        if self.lambda_growth <= 1.0:
            raise ValueError(f"lambda_growth must exceed 1, got {self.lambda_growth}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.convergence_tol <= 0.0:
            raise ValueError(f"convergence_tol must be positive, got {self.convergence_tol}")
        if self.qubo_mode not in ("paper", "exact"):
            raise ValueError(f"qubo_mode must be 'paper' or 'exact', got {self.qubo_mode!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_error: float
    mean_sparsity: float
    lam: float


@dataclass(frozen=True)
class LearnTrace:
    records: tuple[EpochRecord, ...]
    converged: bool

    def to_csv(self, destination: str | Path) -> None:
        lines = ["epoch,mean_error,mean_sparsity,lambda"]
        for r in self.records:
            lines.append(f"{r.epoch},{r.mean_error!r},{r.mean_sparsity!r},{r.lam!r}")
        Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8")


def init_dictionary(m: int, p: int, seed: int) -> Dictionary:
    """Normal atoms rescaled to norms drawn uniformly from (0, 1), strictly."""
    if m < 1 or p < 1:
        raise ValueError(f"m and p must be positive, got {(m, p)}")
    rng = spawn_rng(seed, TAG_INIT)
    atoms = np.empty((p, m))
    for i in range(p):
        row = rng.standard_normal(m)
        norm = np.linalg.norm(row)
        while norm == 0.0:
            row = rng.standard_normal(m)
            norm = np.linalg.norm(row)
        target = rng.random()
        while target == 0.0:
            target = rng.random()
        atoms[i] = row * (target / norm)
    return Dictionary(atoms)


def _relative_change(current: float, previous: float) -> float:
    return abs(current - previous) / max(abs(previous), 1e-12)


def train(
    patches: Sequence[ImagePatch] | Sequence[np.ndarray] | np.ndarray,
    config: LearnConfig,
    solver: SamplerFn,
) -> tuple[Dictionary, LearnTrace, float]:
    """Learn a dictionary; returns (dictionary, trace, final lambda).

    Accepts ImagePatch objects or bare vectors of equal length.
    """
    rows = [
        np.asarray(p.values if isinstance(p, ImagePatch) else p, dtype=np.float64)
        for p in patches
    ]
    if not rows:
        raise ValueError("cannot train on an empty patch list")
    m = rows[0].size
    for row in rows:
        if row.ndim != 1 or row.size != m:
            raise ValueError(f"patch sizes differ: {row.size} != {m}")
    x_mat = np.stack(rows)
    atoms = init_dictionary(m, config.p, config.seed).atoms.copy()
    lam = config.lambda_init
    records: list[EpochRecord] = []
    converged = False
    prev_error = prev_sparsity = None
    for epoch in range(config.epochs):
        order = spawn_rng(config.seed, TAG_ORDER, epoch).permutation(len(patches))
        errors = np.empty(len(patches))
        sparsities = np.empty(len(patches))
        accum = np.zeros_like(atoms)
        pending = 0
        for pos, idx in enumerate(order):
            x = x_mat[idx]
            # dictionary frozen for the whole batch; updates land at the boundary
            problem = build_qubo(x, Dictionary(atoms), lam, config.qubo_mode)
            request = SamplerRequest(
                problem, seed=derived_seed(config.seed, TAG_KERNEL, epoch, int(idx))
            )
            a = solver(request).best[0].astype(np.float64)
            residual = x - a @ atoms
            accum += config.learning_rate * np.outer(a, residual)
            pending += 1
            if pending == config.batch_size:
                atoms += accum
                accum[:] = 0.0
                pending = 0
            errors[pos] = 0.5 * float(residual @ residual)
            sparsities[pos] = a.sum() / config.p
        if pending:
            atoms += accum
        mean_error = float(errors.mean())
        mean_sparsity = float(sparsities.mean())
        records.append(EpochRecord(epoch, mean_error, mean_sparsity, lam))
        if (
            prev_error is not None
            and _relative_change(mean_error, prev_error) < config.convergence_tol
            and _relative_change(mean_sparsity, prev_sparsity) < config.convergence_tol
        ):
            converged = True
            break
        prev_error, prev_sparsity = mean_error, mean_sparsity
        if mean_sparsity > config.s_target:
            lam *= config.lambda_growth
    return Dictionary(atoms), LearnTrace(tuple(records), converged), lam
