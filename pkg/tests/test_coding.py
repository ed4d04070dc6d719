"""Patch extraction, the QUBO transform in both modes, and code metrics."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import coding_instance, enumerate_states, oracle_objective
from scqubo.coding import (
    Dictionary,
    ImagePatch,
    SparseCode,
    build_qubo,
    metrics,
    objective,
    patch_image,
    reconstruct,
    sparse_code,
    sparsity_label,
    unpatch,
)
from scqubo.qubo import energies, energy


def _random_dictionary(seed, p=6, m=9):
    rng = np.random.default_rng(seed)
    return Dictionary(rng.normal(size=(p, m)))


# ---------------------------------------------------------------------------
# build_qubo
# ---------------------------------------------------------------------------


def test_two_orthogonal_atoms_worked_example():
    d = Dictionary(np.array([[1.0, 0.0], [0.0, 1.0]]))
    problem = build_qubo(np.array([1.0, 0.0]), d, 0.1, "paper")
    assert problem.h == pytest.approx([0.1, 1.1])
    assert problem.quadratic == {}  # orthogonal atoms leave no pair terms
    assert problem.offset == 0.0


def test_lambda_shifts_h_uniformly():
    d = _random_dictionary(0)
    x = np.random.default_rng(1).normal(size=d.m)
    lo = build_qubo(x, d, 0.05)
    hi = build_qubo(x, d, 0.05 + 0.125)
    assert hi.h - lo.h == pytest.approx(np.full(d.p, 0.125))
    assert hi.quadratic == lo.quadratic


def test_pair_terms_are_the_gram_off_diagonal():
    d = _random_dictionary(2)
    problem = build_qubo(np.zeros(d.m), d, 0.0)
    dense = d.atoms @ d.atoms.T  # independent of the cached gram
    for i in range(d.p):
        for j in range(i + 1, d.p):
            assert problem.quadratic[(i, j)] == pytest.approx(dense[i, j])


def test_exact_mode_energy_is_the_objective_exhaustively():
    d = _random_dictionary(3, p=8, m=12)
    x = np.random.default_rng(4).normal(size=12)
    problem = build_qubo(x, d, 0.1, "exact")
    states = enumerate_states(8)
    es = energies(problem, states)
    for k in range(states.shape[0]):
        assert es[k] == pytest.approx(
            oracle_objective(x, d.atoms, 0.1, states[k]), abs=1e-9
        )


def test_paper_mode_differs_from_exact_by_a_state_dependent_shift():
    """paper - exact = 0.5 * sum_i |D_i|^2 a_i - 0.5 * |x|^2 for every state."""
    d = _random_dictionary(5, p=6, m=10)
    x = np.random.default_rng(6).normal(size=10)
    paper = build_qubo(x, d, 0.2, "paper")
    exact = build_qubo(x, d, 0.2, "exact")
    norms = np.einsum("ij,ij->i", d.atoms, d.atoms)
    for bits in enumerate_states(6):
        shift = 0.5 * float(norms @ bits) - 0.5 * float(x @ x)
        assert energy(paper, bits) - energy(exact, bits) == pytest.approx(
            shift, abs=1e-9
        )


def test_build_qubo_accepts_image_patch_input():
    d = Dictionary(np.eye(3))
    patch = ImagePatch(np.array([1.0, 0.0, 0.0]), origin=(7, 0))
    assert build_qubo(patch, d, 0.0).h == pytest.approx([-1.0 + 1.0, 1.0, 1.0])


def test_build_qubo_validation():
    d = Dictionary(np.eye(3))
    with pytest.raises(ValueError, match="does not match dictionary"):
        build_qubo(np.zeros(4), d, 0.1)
    with pytest.raises(ValueError, match="nonnegative"):
        build_qubo(np.zeros(3), d, -0.1)
    with pytest.raises(ValueError, match="mode must be"):
        build_qubo(np.zeros(3), d, 0.1, "both")


# ---------------------------------------------------------------------------
# objective / reconstruct / metrics
# ---------------------------------------------------------------------------


def test_empty_code_objective_is_half_signal_energy():
    d = _random_dictionary(7)
    x = np.arange(float(d.m))
    assert objective(x, d, np.zeros(d.p, dtype=np.uint8), 0.3) == pytest.approx(
        0.5 * float(x @ x)
    )


def test_single_atom_perfect_reconstruction():
    d = _random_dictionary(8)
    a = np.zeros(d.p, dtype=np.uint8)
    a[2] = 1
    assert objective(d.atoms[2], d, a, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_reconstruct_zero_code_and_unit_codes():
    d = _random_dictionary(9)
    zero = reconstruct(d, np.zeros(d.p, dtype=np.uint8))
    assert np.all(zero.values == 0.0)
    for i in range(d.p):
        a = np.zeros(d.p, dtype=np.uint8)
        a[i] = 1
        assert reconstruct(d, a).values == pytest.approx(d.atoms[i])


def test_reconstruct_carries_origin():
    d = _random_dictionary(10)
    patch = reconstruct(d, np.ones(d.p, dtype=np.uint8), origin=(14, 7))
    assert patch.origin == (14, 7)


def test_metrics_worked_examples():
    d = Dictionary(np.eye(4))
    x = np.array([1.0, 1.0, 0.0, 0.0])
    got = metrics(x, d, [1, 1, 0, 0], 0.0)
    assert (got.recon_error, got.sparsity, got.objective) == (0.0, 2, 0.0)
    empty = metrics(x, d, [0, 0, 0, 0], 0.25)
    assert empty.recon_error == pytest.approx(1.0)  # half of |x|^2
    assert empty.sparsity == 0
    assert empty.objective == pytest.approx(1.0)


def test_metrics_matches_objective_decomposition():
    x, atoms, lam, _ = coding_instance(3, n=8, m=10)
    d = Dictionary(atoms)
    rng = np.random.default_rng(12)
    for _ in range(20):
        a = rng.integers(0, 2, size=8).astype(np.uint8)
        got = metrics(x, d, a, lam)
        assert got.objective == pytest.approx(got.recon_error + lam * got.sparsity)
        assert got.objective == pytest.approx(oracle_objective(x, atoms, lam, a))
        assert got.sparsity == int(a.sum())


def test_sparsity_label_format():
    assert sparsity_label(6, 64) == "6 / 64"
    assert sparsity_label(0, 16) == "0 / 16"


def test_sparse_code_validates_popcount():
    d = Dictionary(np.eye(2))
    code = sparse_code(np.ones(2), d, [1, 0], 0.1)
    assert code.sparsity == 1
    assert code.objective_value == pytest.approx(objective(np.ones(2), d, [1, 0], 0.1))
    with pytest.raises(ValueError, match="popcount"):
        SparseCode(np.array([1, 0], dtype=np.uint8), 0.0, 2)


# ---------------------------------------------------------------------------
# patching
# ---------------------------------------------------------------------------


def test_28x28_splits_into_16_patches_of_49():
    image = np.random.default_rng(13).random((28, 28))
    patches = patch_image(image, 7)
    assert len(patches) == 16
    assert all(p.m == 49 for p in patches)


def test_constant_image_patches_are_constant():
    patches = patch_image(np.ones((14, 14)), 7)
    assert len(patches) == 4
    for p in patches:
        assert np.all(p.values == 1.0)


def test_pixel_lands_in_the_expected_patch_slot():
    image = np.zeros((28, 28))
    image[8, 10] = 1.0  # patch row 1, patch col 1 -> index 1*4+1, local (1, 3)
    patches = patch_image(image, 7)
    assert patches[5].values[1 * 7 + 3] == 1.0
    assert patches[5].origin == (7, 7)
    assert sum(p.values.sum() for p in patches) == 1.0


def test_patch_image_rejects_indivisible_edges():
    with pytest.raises(ValueError, match="divisible"):
        patch_image(np.zeros((9, 9)), 7)


def test_unpatch_requires_square_patches():
    with pytest.raises(ValueError, match="perfect square"):
        unpatch([ImagePatch(np.zeros(8))])
    with pytest.raises(ValueError, match="no patches"):
        unpatch([])


@given(
    st.integers(1, 4),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=40)
def test_unpatch_inverts_patch_image(edge, rows, cols, seed):
    image = np.random.default_rng(seed).random((rows * edge, cols * edge))
    assert np.array_equal(unpatch(patch_image(image, edge)), image)


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


def test_image_patch_rejects_negative_origin():
    with pytest.raises(ValueError, match="negative patch origin"):
        ImagePatch(np.zeros(4), origin=(-1, 0))


def test_dictionary_shape_and_gram():
    d = _random_dictionary(14)
    assert (d.p, d.m) == d.atoms.shape
    assert d.gram == pytest.approx(d.atoms @ d.atoms.T)


def test_dictionary_json_round_trip(tmp_path):
    d = _random_dictionary(15)
    path = tmp_path / "dict.json"
    d.save(path)
    back = Dictionary.load(path)
    assert np.array_equal(back.atoms, d.atoms)


def test_dictionary_load_rejects_shape_mismatch(tmp_path):
    path = tmp_path / "dict.json"
    path.write_text('{"m": 3, "p": 2, "atoms": [[1.0, 2.0], [3.0, 4.0]]}')
    with pytest.raises(ValueError, match="bad dictionary file|declare"):
        Dictionary.load(path)
