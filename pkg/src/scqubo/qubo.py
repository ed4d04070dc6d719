"""QUBO / Ising problem containers, energy evaluation, and file formats.

A problem is ``offset + sum_i h[i]*a[i] + sum_{i<j} Q[i,j]*a[i]*a[j]``
over binary states ``a``; the quadratic part is stored strictly
upper-triangular (symmetric input is folded on ingestion, the diagonal
lives in ``h``). Energies are doubles; ``ENERGY_ATOL`` is the comparison
tolerance used throughout the package.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

ENERGY_ATOL = 1e-9

PairMap = dict[tuple[int, int], float]


class QuboFormatError(ValueError):
    """Malformed problem file; message names the offending line."""


def as_state(bits: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate and return a {0,1} vector as a uint8 array."""
    a = np.asarray(bits)
    if a.ndim != 1:
        raise ValueError(f"state must be a vector, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError("state entries must be 0 or 1")
    return a.astype(np.uint8)


def _fold_quadratic(n: int, quadratic: Mapping[tuple[int, int], float]) -> PairMap:
    folded: PairMap = {}
    for (i, j), value in quadratic.items():
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-pair ({i},{i}): diagonal terms belong in h")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"pair ({i},{j}) out of range for n={n}")
        v = float(value)
        if not np.isfinite(v):
            raise ValueError(f"non-finite coefficient at pair ({i},{j})")
        key = (i, j) if i < j else (j, i)
        folded[key] = folded.get(key, 0.0) + v
    return {k: v for k, v in folded.items() if v != 0.0}


@dataclass(frozen=True)
class QuboProblem:
    """Immutable QUBO over n binary variables."""

    n: int
    h: np.ndarray
    quadratic: PairMap = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        h = np.asarray(self.h, dtype=np.float64).copy()
        if h.shape != (self.n,):
            raise ValueError(f"h must have shape ({self.n},), got {h.shape}")
        if not np.isfinite(h).all():
            raise ValueError("h contains non-finite coefficients")
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "quadratic", _fold_quadratic(self.n, self.quadratic))

    @cached_property
    def _pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pair keys/values in sorted order: (I, J, V)."""
        keys = sorted(self.quadratic)
        i = np.array([k[0] for k in keys], dtype=np.int64)
        j = np.array([k[1] for k in keys], dtype=np.int64)
        v = np.array([self.quadratic[k] for k in keys], dtype=np.float64)
        return i, j, v

    @cached_property
    def dense_symmetric(self) -> np.ndarray:
        """Symmetric (n, n) coupling matrix with zero diagonal, for kernels."""
        q = np.zeros((self.n, self.n))
        i, j, v = self._pair_arrays
        q[i, j] = v
        q[j, i] = v
        q.setflags(write=False)
        return q

    @cached_property
    def _adjacency(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-variable (neighbor indices, coupling values)."""
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (i, j), v in self.quadratic.items():
            nbrs[i].append((j, v))
            nbrs[j].append((i, v))
        out = []
        for entries in nbrs:
            entries.sort()
            idx = np.array([e[0] for e in entries], dtype=np.int64)
            val = np.array([e[1] for e in entries], dtype=np.float64)
            out.append((idx, val))
        return out


def _check_state(problem: QuboProblem, state: Sequence[int] | np.ndarray) -> np.ndarray:
    a = as_state(state)
    if a.shape != (problem.n,):
        raise ValueError(f"state length {a.size} does not match problem n={problem.n}")
    return a


def energy(problem: QuboProblem, state: Sequence[int] | np.ndarray) -> float:
    """offset + sum_i h[i]*a[i] + sum_{i<j} Q[i,j]*a[i]*a[j]."""
    a = _check_state(problem, state)
    e = problem.offset + float(np.dot(problem.h, a))
    for (i, j), v in problem.quadratic.items():
        if a[i] and a[j]:
            e += v
    return e


def energies(problem: QuboProblem, states: np.ndarray) -> np.ndarray:
    """Energies of a (k, n) stack of states (vectorized)."""
    s = np.asarray(states, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != problem.n:
        raise ValueError(f"states must have shape (k, {problem.n}), got {s.shape}")
    i, j, v = problem._pair_arrays
    quad = (s[:, i] * s[:, j]) @ v if v.size else np.zeros(s.shape[0])
    return problem.offset + s @ problem.h + quad


def delta_energy(problem: QuboProblem, state: Sequence[int] | np.ndarray, i: int) -> float:
    """Energy change from flipping bit i, in O(deg(i))."""
    a = _check_state(problem, state)
    if not 0 <= i < problem.n:
        raise IndexError(f"variable index {i} out of range for n={problem.n}")
    idx, val = problem._adjacency[i]
    gain = float(problem.h[i]) + (float(val @ a[idx]) if idx.size else 0.0)
    return gain if a[i] == 0 else -gain


def flip_gains(problem: QuboProblem, state: Sequence[int] | np.ndarray) -> np.ndarray:
    """delta_energy for every variable at once."""
    a = _check_state(problem, state)
    f = problem.h + problem.dense_symmetric @ a.astype(np.float64)
    return np.where(a == 0, f, -f)


def state_overlap(a: Sequence[int] | np.ndarray, b: Sequence[int] | np.ndarray) -> float:
    """Fraction of agreeing bits, in [0, 1]."""
    x, y = as_state(a), as_state(b)
    if x.shape != y.shape:
        raise ValueError("states differ in length")
    return float(np.mean(x == y))


# ---------------------------------------------------------------------------
# Ising form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsingProblem:
    """Spin formulation over s in {-1,+1}: offset + sum b_i s_i + sum J_ij s_i s_j."""

    n: int
    biases: np.ndarray
    couplings: PairMap = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        b = np.asarray(self.biases, dtype=np.float64).copy()
        if b.shape != (self.n,):
            raise ValueError(f"biases must have shape ({self.n},), got {b.shape}")
        if not np.isfinite(b).all():
            raise ValueError("biases contain non-finite coefficients")
        b.setflags(write=False)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "couplings", _fold_quadratic(self.n, self.couplings))


def ising_energy(problem: IsingProblem, spins: Sequence[int] | np.ndarray) -> float:
    s = np.asarray(spins, dtype=np.float64)
    if s.shape != (problem.n,):
        raise ValueError(f"spin length {s.size} does not match n={problem.n}")
    if s.size and not np.isin(s, (-1.0, 1.0)).all():
        raise ValueError("spins must be -1 or +1")
    e = problem.offset + float(np.dot(problem.biases, s))
    for (i, j), v in problem.couplings.items():
        e += v * s[i] * s[j]
    return e


def to_ising(problem: QuboProblem) -> IsingProblem:
    """Map a = (s+1)/2; energies match exactly for corresponding states."""
    biases = problem.h / 2.0
    couplings: PairMap = {}
    offset = problem.offset + float(problem.h.sum()) / 2.0
    for (i, j), v in problem.quadratic.items():
        couplings[(i, j)] = v / 4.0
        biases[i] += v / 4.0
        biases[j] += v / 4.0
        offset += v / 4.0
    return IsingProblem(problem.n, biases, couplings, offset)


def from_ising(problem: IsingProblem) -> QuboProblem:
    """Inverse of to_ising: s = 2a - 1."""
    h = 2.0 * problem.biases
    quadratic: PairMap = {}
    offset = problem.offset - float(problem.biases.sum())
    for (i, j), v in problem.couplings.items():
        quadratic[(i, j)] = 4.0 * v
        h[i] -= 2.0 * v
        h[j] -= 2.0 * v
        offset += v
    return QuboProblem(problem.n, h, quadratic, offset)


# ---------------------------------------------------------------------------
# Sample sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleRecord:
    state: np.ndarray  # uint8, read-only
    energy: float
    count: int


@dataclass(frozen=True)
class SampleSet:
    """Multiset of sampled states, sorted by (energy, first occurrence).

    ``metadata`` holds the sampler name, seed, a JSON-serializable
    parameter snapshot, and the wall-clock duration. Durations are
    excluded from :meth:`checksum` so reruns compare bit-identical.
    """

    records: tuple[SampleRecord, ...]
    metadata: dict

    @classmethod
    def from_states(
        cls,
        problem: QuboProblem,
        states: np.ndarray,
        *,
        sampler: str,
        seed: int,
        params: dict | None = None,
        duration_s: float = 0.0,
    ) -> "SampleSet":
        """Aggregate raw states (in read order) into sorted records.

        Energies are evaluated against ``problem`` here, so stored
        energies always re-verify by construction.
        """
        s = np.asarray(states, dtype=np.uint8)
        if s.ndim != 2 or s.shape[1] != problem.n:
            raise ValueError(f"states must have shape (k, {problem.n}), got {s.shape}")
        first_seen: dict[bytes, int] = {}
        counts: dict[bytes, int] = {}
        for r in range(s.shape[0]):
            key = s[r].tobytes()
            counts[key] = counts.get(key, 0) + 1
            first_seen.setdefault(key, r)
        uniq = sorted(first_seen, key=first_seen.__getitem__)
        uniq_states = np.frombuffer(b"".join(uniq), dtype=np.uint8).reshape(len(uniq), problem.n)
        es = energies(problem, uniq_states)
        order = sorted(range(len(uniq)), key=lambda k: (es[k], first_seen[uniq[k]]))
        records = []
        for k in order:
            st = uniq_states[k].copy()
            st.setflags(write=False)
            records.append(SampleRecord(st, float(es[k]), counts[uniq[k]]))
        meta = {
            "sampler": sampler,
            "seed": int(seed),
            "params": dict(params or {}),
            "duration_s": float(duration_s),
        }
        return cls(tuple(records), meta)

    @property
    def best(self) -> tuple[np.ndarray, float]:
        """Lowest-energy state (ties: first occurrence in read order)."""
        r = self.records[0]
        return r.state, r.energy

    @property
    def num_samples(self) -> int:
        return sum(r.count for r in self.records)

    def min_energy_count(self, atol: float = ENERGY_ATOL) -> int:
        """How many samples attained the minimum energy."""
        e0 = self.records[0].energy
        return sum(r.count for r in self.records if r.energy <= e0 + atol)

    def verify(self, problem: QuboProblem, atol: float = ENERGY_ATOL) -> None:
        """Recheck every stored energy against energy(); raises on mismatch."""
        for r in self.records:
            e = energy(problem, r.state)
            if abs(e - r.energy) > atol:
                raise AssertionError(f"stored energy {r.energy} != {e} for state {r.state}")

    def checksum(self) -> str:
        """SHA-256 over records and reproducibility metadata (not duration)."""
        m = hashlib.sha256()
        m.update(self.metadata["sampler"].encode())
        m.update(str(self.metadata["seed"]).encode())
        m.update(json.dumps(self.metadata["params"], sort_keys=True).encode())
        for r in self.records:
            m.update(r.state.tobytes())
            m.update(np.float64(r.energy).tobytes())
            m.update(str(r.count).encode())
        return m.hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "records": [
                {
                    "state": "".join(str(int(b)) for b in r.state),
                    "energy": r.energy,
                    "count": r.count,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SampleSet":
        records = []
        for rec in obj["records"]:
            st = np.array([int(c) for c in rec["state"]], dtype=np.uint8)
            st.setflags(write=False)
            records.append(SampleRecord(st, float(rec["energy"]), int(rec["count"])))
        return cls(tuple(records), dict(obj["metadata"]))


# ---------------------------------------------------------------------------
# Problem files: COO text and JSON mirror
# ---------------------------------------------------------------------------
#
# COO format:
#   p qubo <n> <num_linear> <num_quadratic>
#   i j value        (i == j: linear term h_i; i != j: quadratic)
# '#' starts a comment; the loader recognizes '# offset <value>' so that
# problems with a constant term round-trip.


def save_qubo(problem: QuboProblem, destination: str | Path) -> None:
    """Write the COO text format."""
    lin = [(i, float(problem.h[i])) for i in range(problem.n) if problem.h[i] != 0.0]
    quad = sorted(problem.quadratic.items())
    lines = [f"p qubo {problem.n} {len(lin)} {len(quad)}"]
    if problem.offset != 0.0:
        lines.append(f"# offset {problem.offset!r}")
    lines += [f"{i} {i} {v!r}" for i, v in lin]
    lines += [f"{i} {j} {v!r}" for (i, j), v in quad]
    Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_qubo(source: str | Path) -> QuboProblem:
    """Parse the COO text format; errors name the offending line number."""
    text = Path(source).read_text(encoding="utf-8")
    n = None
    num_lin = num_quad = 0
    offset = 0.0
    h: np.ndarray | None = None
    quadratic: PairMap = {}
    seen: set[tuple[int, int]] = set()
    lin_count = quad_count = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "offset":
                try:
                    offset = float(parts[1])
                except ValueError:
                    raise QuboFormatError(f"line {lineno}: bad offset value {parts[1]!r}")
            continue
        if n is None:
            parts = line.split()
            if len(parts) != 5 or parts[0] != "p" or parts[1] != "qubo":
                raise QuboFormatError(f"line {lineno}: expected header 'p qubo <n> <nl> <nq>'")
            try:
                n, num_lin, num_quad = int(parts[2]), int(parts[3]), int(parts[4])
            except ValueError:
                raise QuboFormatError(f"line {lineno}: non-integer header field")
            if n < 1:
                raise QuboFormatError(f"line {lineno}: n must be positive")
            h = np.zeros(n)
            continue
        parts = line.split()
        if len(parts) != 3:
            raise QuboFormatError(f"line {lineno}: expected 'i j value', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise QuboFormatError(f"line {lineno}: malformed entry {line!r}")
        if not (0 <= i < n and 0 <= j < n):
            raise QuboFormatError(f"line {lineno}: index out of range for n={n}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise QuboFormatError(f"line {lineno}: duplicate entry for ({i},{j})")
        seen.add(key)
        if i == j:
            h[i] = v
            lin_count += 1
        else:
            quadratic[key] = v
            quad_count += 1
    if n is None:
        raise QuboFormatError("line 1: missing header")
    if lin_count != num_lin or quad_count != num_quad:
        raise QuboFormatError(
            f"header declared {num_lin} linear / {num_quad} quadratic entries, "
            f"found {lin_count} / {quad_count}"
        )
    return QuboProblem(n, h, quadratic, offset)


def qubo_to_json_dict(problem: QuboProblem) -> dict:
    return {
        "n": problem.n,
        "offset": problem.offset,
        "h": problem.h.tolist(),
        "Q": [[i, j, v] for (i, j), v in sorted(problem.quadratic.items())],
    }


def qubo_from_json_dict(obj: dict) -> QuboProblem:
    try:
        n = int(obj["n"])
        h = np.asarray(obj["h"], dtype=np.float64)
        quadratic = {(int(i), int(j)): float(v) for i, j, v in obj.get("Q", [])}
        offset = float(obj.get("offset", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise QuboFormatError(f"bad QUBO JSON: {exc}")
    return QuboProblem(n, h, quadratic, offset)


def save_qubo_json(problem: QuboProblem, destination: str | Path) -> None:
    Path(destination).write_text(json.dumps(qubo_to_json_dict(problem)), encoding="utf-8")


def load_qubo_json(source: str | Path) -> QuboProblem:
    try:
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise QuboFormatError(f"bad QUBO JSON: {exc}")
    return qubo_from_json_dict(obj)
