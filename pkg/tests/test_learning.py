"""Dictionary learning: initialization, the update rule, and convergence."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LEARN_TAG
from scqubo.coding import ImagePatch
from scqubo.learning import LearnConfig, LearnTrace, EpochRecord, init_dictionary, train
from scqubo.samplers.exact import exact_sampler
from scqubo.seeding import TAG_ORDER, spawn_rng


def spying(solver, seen):
    """Wrap a sampler, recording the best activation of every call."""

    def wrapped(request):
        result = solver(request)
        seen.append(result.best[0].copy())
        return result

    return wrapped


# ---------------------------------------------------------------------------
# init_dictionary
# ---------------------------------------------------------------------------


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 6), m=st.integers(1, 12))
@settings(max_examples=40, deadline=None)
def test_init_dictionary_norms_strictly_inside_unit_interval(seed, p, m):
    atoms = init_dictionary(m, p, seed).atoms
    assert atoms.shape == (p, m)
    norms = np.linalg.norm(atoms, axis=1)
    assert np.all(norms > 0.0)
    assert np.all(norms < 1.0)


def test_init_dictionary_is_deterministic():
    a = init_dictionary(9, 4, 123).atoms
    b = init_dictionary(9, 4, 123).atoms
    assert np.array_equal(a, b)
    assert not np.array_equal(a, init_dictionary(9, 4, 124).atoms)


@pytest.mark.parametrize("m,p", [(0, 3), (3, 0), (0, 0), (-1, 2)])
def test_init_dictionary_rejects_empty_shapes(m, p):
    with pytest.raises(ValueError, match="m and p must be positive"):
        init_dictionary(m, p, 0)


# ---------------------------------------------------------------------------
# train: exact pins on small problems
# ---------------------------------------------------------------------------


def test_training_on_own_atoms_is_a_fixed_point():
    """Feeding the initial atoms back as data must leave them untouched.

    Each patch codes to its own indicator vector, the residual vanishes, and
    every gradient term is exactly zero, so the dictionary stays bit identical
    and the error trace converges immediately.
    """
    init = init_dictionary(16, 4, 21)
    cfg = LearnConfig(p=4, s_target=0.05, lambda_init=1e-6, lambda_growth=1.3,
                      epochs=10, seed=21, qubo_mode="exact")
    learned, trace, lam = train(list(init.atoms), cfg, exact_sampler)
    assert np.array_equal(learned.atoms, init.atoms)
    assert trace.converged
    assert [r.mean_error for r in trace.records] == [0.0, 0.0]
    assert [r.mean_sparsity for r in trace.records] == [0.25, 0.25]
    # sparsity sits above s_target both epochs, yet lambda grew exactly once:
    # the convergence break fires before the adaptation step.
    assert lam == cfg.lambda_init * cfg.lambda_growth


def test_image_patch_inputs_match_bare_vectors():
    init = init_dictionary(16, 4, 21)
    cfg = LearnConfig(p=4, s_target=0.05, lambda_init=1e-6, lambda_growth=1.3,
                      epochs=2, seed=21, qubo_mode="exact")
    wrapped = [ImagePatch(values=row.copy(), origin=(0, i)) for i, row in enumerate(init.atoms)]
    from_patches, _, _ = train(wrapped, cfg, exact_sampler)
    from_vectors, _, _ = train(list(init.atoms), cfg, exact_sampler)
    assert np.array_equal(from_patches.atoms, from_vectors.atoms)


def test_lambda_grows_when_codes_are_too_dense():
    init = init_dictionary(12, 4, 2)
    x = init.atoms[0] + init.atoms[1]
    cfg = LearnConfig(p=4, s_target=0.1, lambda_init=0.01, lambda_growth=1.5,
                      epochs=1, seed=2, qubo_mode="exact")
    _, trace, lam = train([x, x], cfg, exact_sampler)
    assert lam == pytest.approx(0.015)
    # the record carries the value that was in force during the epoch
    assert [r.lam for r in trace.records] == [0.01]
    assert [r.mean_sparsity for r in trace.records] == [0.5]


def test_atoms_never_selected_keep_their_initial_rows():
    seen = []
    init = init_dictionary(12, 5, 17)
    patches = [init.atoms[0].copy(), init.atoms[2].copy()]
    cfg = LearnConfig(p=5, s_target=0.05, lambda_init=1e-6, lambda_growth=1.4,
                      epochs=1, seed=17, qubo_mode="exact")
    learned, _, _ = train(patches, cfg, spying(exact_sampler, seen))
    active = np.zeros(5, dtype=bool)
    for code in seen:
        active |= code.astype(bool)
    assert sorted(np.flatnonzero(active).tolist()) == [0, 2]
    for i in (1, 3, 4):
        assert np.array_equal(learned.atoms[i], init.atoms[i])


def test_single_batch_update_matches_accumulated_outer_products():
    """One epoch with batch_size == len(patches) is one aggregated step."""
    rng = np.random.default_rng(31)
    patches = [rng.random(10) for _ in range(5)]
    seen = []
    cfg = LearnConfig(p=6, s_target=0.2, lambda_init=0.2, lambda_growth=1.1,
                      learning_rate=0.3, epochs=1, seed=6, batch_size=5,
                      qubo_mode="exact")
    init = init_dictionary(10, 6, 6)
    learned, _, _ = train(patches, cfg, spying(exact_sampler, seen))

    order = spawn_rng(6, TAG_ORDER, 0).permutation(5)
    accum = np.zeros_like(init.atoms)
    for pos, idx in enumerate(order):
        code = seen[pos].astype(np.float64)
        residual = patches[idx] - code @ init.atoms
        accum += cfg.learning_rate * np.outer(code, residual)
    assert np.array_equal(learned.atoms, init.atoms + accum)


def test_planted_mixture_error_drops_and_lambda_is_monotone():
    rng = spawn_rng(9, LEARN_TAG, 1)
    hidden = rng.random((8, 25))
    patches = []
    for _ in range(20):
        k = int(rng.integers(1, 3))
        members = rng.choice(8, size=k, replace=False)
        patches.append(hidden[members].sum(axis=0) + 0.05 * rng.random(25))
    cfg = LearnConfig(p=8, s_target=0.2, lambda_init=0.01, lambda_growth=1.2,
                      learning_rate=0.2, epochs=6, seed=11, qubo_mode="exact")
    learned, trace, _ = train(patches, cfg, exact_sampler)
    errors = [r.mean_error for r in trace.records]
    assert len(errors) == 6
    assert errors[-1] < errors[0]
    lams = [r.lam for r in trace.records]
    assert all(b >= a for a, b in zip(lams, lams[1:]))

    again, _, _ = train(patches, cfg, exact_sampler)
    assert np.array_equal(learned.atoms, again.atoms)


# ---------------------------------------------------------------------------
# validation and the trace format
# ---------------------------------------------------------------------------


def test_train_rejects_empty_patch_list():
    cfg = LearnConfig(p=2, s_target=0.5)
    with pytest.raises(ValueError, match="empty patch list"):
        train([], cfg, exact_sampler)


def test_train_rejects_ragged_patches():
    cfg = LearnConfig(p=2, s_target=0.5)
    with pytest.raises(ValueError, match="patch sizes differ: 3 != 4"):
        train([np.zeros(4), np.zeros(3)], cfg, exact_sampler)


@pytest.mark.parametrize(
    "kwargs,message",
    [
        (dict(p=0, s_target=0.2), "p must be positive"),
        (dict(p=2, s_target=0.0), "s_target must lie in"),
        (dict(p=2, s_target=1.0), "s_target must lie in"),
        (dict(p=2, s_target=0.2, lambda_init=0.0), "lambda_init must be positive"),
        (dict(p=2, s_target=0.2, lambda_growth=1.0), "lambda_growth must exceed 1"),
        (dict(p=2, s_target=0.2, learning_rate=-0.1), "learning_rate must be positive"),
        (dict(p=2, s_target=0.2, epochs=0), "epochs and batch_size must be positive"),
        (dict(p=2, s_target=0.2, batch_size=0), "epochs and batch_size must be positive"),
        (dict(p=2, s_target=0.2, convergence_tol=0.0), "convergence_tol must be positive"),
        (dict(p=2, s_target=0.2, qubo_mode="fast"), "qubo_mode must be 'paper' or 'exact'"),
    ],
)
def test_learn_config_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        LearnConfig(**kwargs)


def test_learn_trace_csv_layout(tmp_path):
    trace = LearnTrace(
        records=(
            EpochRecord(epoch=0, mean_error=1.5, mean_sparsity=0.25, lam=0.01),
            EpochRecord(epoch=1, mean_error=0.75, mean_sparsity=0.125, lam=0.012),
        ),
        converged=False,
    )
    out = tmp_path / "trace.csv"
    trace.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "epoch,mean_error,mean_sparsity,lambda"
    assert lines[1] == "0,1.5,0.25,0.01"
    assert lines[2] == "1,0.75,0.125,0.012"
    assert len(lines) == 3
