"""Binary sparse coding: patches, dictionaries, and the QUBO transform.

The objective being minimized over binary activations ``a`` is

    f(a) = 0.5 * ||x - D a||^2 + lambda * ||a||_0

where the dictionary rows are un-normalized atoms. ``build_qubo`` turns
one patch into a :class:`~scqubo.qubo.QuboProblem` in either of two
documented variants (see the function docstring).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .qubo import QuboProblem, as_state


def _validated_vector(values, label: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).copy()
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{label} must be a nonempty vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError(f"{label} contains non-finite entries")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class ImagePatch:
    """A flattened (row-major) square tile plus its origin in the source image."""

    values: np.ndarray
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _validated_vector(self.values, "patch"))
        r, c = self.origin
        if r < 0 or c < 0:
            raise ValueError(f"negative patch origin {self.origin}")
        object.__setattr__(self, "origin", (int(r), int(c)))

    @property
    def m(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Dictionary:
    """p atoms of dimension m, stored as rows of ``atoms``; no normalization."""

    atoms: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.atoms, dtype=np.float64).copy()
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"atoms must be a (p, m) matrix, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise ValueError("atoms contain non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def p(self) -> int:
        return self.atoms.shape[0]

    @property
    def m(self) -> int:
        return self.atoms.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        g = self.atoms @ self.atoms.T
        g.setflags(write=False)
        return g

    def save(self, destination: str | Path) -> None:
        obj = {"m": self.m, "p": self.p, "atoms": self.atoms.tolist()}
        Path(destination).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load(cls, source: str | Path) -> "Dictionary":
        obj = json.loads(Path(source).read_text(encoding="utf-8"))
        try:
            atoms = np.asarray(obj["atoms"], dtype=np.float64)
            m, p = int(obj["m"]), int(obj["p"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad dictionary file {source}: {exc}")
        if atoms.shape != (p, m):
            raise ValueError(
                f"bad dictionary file {source}: atoms shape {atoms.shape} != ({p}, {m})"
            )
        return cls(atoms)


@dataclass(frozen=True)
class SparseCode:
    """A binary activation with its objective value and popcount."""

    activation: np.ndarray
    objective_value: float
    sparsity: int

    def __post_init__(self) -> None:
        a = as_state(self.activation)
        a.setflags(write=False)
        object.__setattr__(self, "activation", a)
        if self.sparsity != int(a.sum()):
            raise ValueError(f"sparsity {self.sparsity} != popcount {int(a.sum())}")


def patch_image(image: np.ndarray, patch_edge: int) -> list[ImagePatch]:
    """Split an H x W image into non-overlapping edge x edge tiles, row-major."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {img.shape}")
    if patch_edge < 1:
        raise ValueError(f"patch_edge must be positive, got {patch_edge}")
    height, width = img.shape
    if height % patch_edge or width % patch_edge:
        raise ValueError(
            f"image shape {img.shape} not divisible by patch edge {patch_edge}"
        )
    patches = []
    for r in range(0, height, patch_edge):
        for c in range(0, width, patch_edge):
            tile = img[r : r + patch_edge, c : c + patch_edge]
            patches.append(ImagePatch(tile.reshape(-1), (r, c)))
    return patches


def unpatch(patches: Sequence[ImagePatch]) -> np.ndarray:
    """Reassemble tiles produced by patch_image; inverse for any full tiling."""
    if not patches:
        raise ValueError("no patches to reassemble")
    edge = int(round(patches[0].m ** 0.5))
    if edge * edge != patches[0].m:
        raise ValueError(f"patch length {patches[0].m} is not a perfect square")
    height = max(p.origin[0] for p in patches) + edge
    width = max(p.origin[1] for p in patches) + edge
    image = np.zeros((height, width))
    for p in patches:
        if p.m != edge * edge:
            raise ValueError("patches differ in size")
        r, c = p.origin
        image[r : r + edge, c : c + edge] = p.values.reshape(edge, edge)
    return image


def _patch_vector(x: ImagePatch | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(x, ImagePatch):
        return x.values
    return np.asarray(x, dtype=np.float64)


def build_qubo(
    x: ImagePatch | np.ndarray,
    dictionary: Dictionary,
    lam: float,
    mode: str = "paper",
) -> QuboProblem:
    """QUBO whose minimizers are good sparse codes of ``x``.

    Both modes share the Gram off-diagonal Q_ij = D_i . D_j. They differ
    in the diagonal weighting and constant:

    - ``paper``: h_i = -x.D_i + D_i.D_i + lam, offset 0. The published
      transform; its energies differ from f(a) by a state-dependent
      amount, so the two modes can rank states differently.
    - ``exact``: h_i = -x.D_i + 0.5*D_i.D_i + lam, offset 0.5*||x||^2.
      Energy equals f(a) for every a.
    """
    xv = _patch_vector(x)
    if xv.ndim != 1 or xv.size != dictionary.m:
        raise ValueError(f"patch length {xv.shape} does not match dictionary m={dictionary.m}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if mode not in ("paper", "exact"):
        raise ValueError(f"mode must be 'paper' or 'exact', got {mode!r}")
    gram = dictionary.gram
    cross = dictionary.atoms @ xv
    norms = np.diag(gram)
    if mode == "paper":
        h = -cross + norms + lam
        offset = 0.0
    else:
        h = -cross + 0.5 * norms + lam
        offset = 0.5 * float(xv @ xv)
    p = dictionary.p
    quadratic = {
        (i, j): gram[i, j] for i in range(p) for j in range(i + 1, p) if gram[i, j] != 0.0
    }
    return QuboProblem(p, h, quadratic, offset)


def objective(
    x: ImagePatch | np.ndarray,
    dictionary: Dictionary,
    activation: Sequence[int] | np.ndarray,
    lam: float,
) -> float:
    """0.5*||x - Da||^2 + lam*popcount(a)."""
    xv = _patch_vector(x)
    a = as_state(activation)
    if a.size != dictionary.p:
        raise ValueError(f"activation length {a.size} != p={dictionary.p}")
    if xv.size != dictionary.m:
        raise ValueError(f"patch length {xv.size} != m={dictionary.m}")
    residual = xv - a @ dictionary.atoms
    return 0.5 * float(residual @ residual) + float(lam) * int(a.sum())


def reconstruct(
    dictionary: Dictionary,
    activation: Sequence[int] | np.ndarray,
    origin: tuple[int, int] = (0, 0),
) -> ImagePatch:
    """Sum of the active atoms, as a patch at ``origin``."""
    a = as_state(activation)
    if a.size != dictionary.p:
        raise ValueError(f"activation length {a.size} != p={dictionary.p}")
    return ImagePatch(a @ dictionary.atoms, origin)


def sparse_code(
    x: ImagePatch | np.ndarray,
    dictionary: Dictionary,
    activation: Sequence[int] | np.ndarray,
    lam: float,
) -> SparseCode:
    a = as_state(activation)
    return SparseCode(a, objective(x, dictionary, a, lam), int(a.sum()))


@dataclass(frozen=True)
class CodeMetrics:
    recon_error: float
    sparsity: int
    objective: float


def metrics(
    x: ImagePatch | np.ndarray,
    dictionary: Dictionary,
    activation: Sequence[int] | np.ndarray,
    lam: float,
) -> CodeMetrics:
    xv = _patch_vector(x)
    a = as_state(activation)
    if a.size != dictionary.p or xv.size != dictionary.m:
        raise ValueError("dimension mismatch between patch, dictionary, and activation")
    residual = xv - a @ dictionary.atoms
    err = 0.5 * float(residual @ residual)
    k = int(a.sum())
    return CodeMetrics(err, k, err + float(lam) * k)


def sparsity_label(k: int, p: int) -> str:
    """Report formatting for solution sparsity, e.g. '6 / 64'."""
    return f"{k} / {p}"
