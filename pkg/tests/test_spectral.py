import numpy as np
import pytest

from graphon_sampling.core import Grid, StepFunction, StepGraphon, ValidationError, average_graphon, closed_form_graphon, constant_graphon
from graphon_sampling.sampling import Partition, halve_cells, restrict, spectral_gap
from graphon_sampling.spectral import (
    SpectralBoundaryError,
    dirichlet_energy,
    discretize,
    eigendecompose,
    operator_norm_diff,
    pw_basis,
    pw_has_intra_part,
    pw_project,
    spectral_decomposition,
    wot_pairing,
)

from conftest import random_function, random_graphon


def two_block(p, q):
    return StepGraphon(Grid.uniform(2), [[p, q], [q, p]])


def test_discretize_examples():
    op = discretize(constant_graphon(1.0), "laplacian")
    np.testing.assert_array_equal(op.matrix, [[0.0]])
    np.testing.assert_array_equal(op.intra, [1.0])
    np.testing.assert_array_equal(eigendecompose(op).spectrum(), [0.0, 1.0])
    adj = eigendecompose(discretize(two_block(0.8, 0.2), "adjacency"))
    np.testing.assert_allclose(adj.eigenvalues, [0.3, 0.5], atol=1e-15)
    lap = eigendecompose(discretize(two_block(0.8, 0.2), "laplacian"))
    np.testing.assert_allclose(lap.eigenvalues, [0.0, 0.2], atol=1e-15)
    np.testing.assert_allclose(lap.spectrum(), [0.0, 0.2, 0.5], atol=1e-15)


def test_discretize_rejects_kernel():
    with pytest.raises(ValidationError):
        discretize(constant_graphon(0.5).as_kernel())
    with pytest.raises(ValidationError):
        discretize(constant_graphon(0.5), "bogus")


def test_eigenvectors_weighted_orthonormal(rng):
    for _ in range(30):
        w = random_graphon(rng, int(rng.integers(1, 10)))
        for kind in ("adjacency", "laplacian", "degree-mult"):
            op = discretize(w, kind)
            dec = eigendecompose(op)
            gram = dec.vectors.T @ (w.grid.masses[:, None] * dec.vectors)
            np.testing.assert_allclose(gram, np.eye(w.n_cells), atol=1e-12)
            assert dec.reconstruction_error(op) < 1e-12
            np.testing.assert_allclose(op.matrix @ dec.vectors, dec.vectors * dec.eigenvalues, atol=1e-12)


def test_sign_convention(rng):
    w = random_graphon(rng, 6)
    dec = spectral_decomposition(w)
    for a in range(6):
        v = dec.vectors[:, a]
        first = v[np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0]]
        assert first > 0


def test_laplacian_is_degree_minus_adjacency(rng):
    for _ in range(20):
        w = random_graphon(rng, int(rng.integers(1, 9)))
        lap, deg, adj = (discretize(w, k).matrix for k in ("laplacian", "degree-mult", "adjacency"))
        np.testing.assert_allclose(lap, deg - adj, atol=1e-15)
        lam = eigendecompose(discretize(w)).spectrum()
        assert lam.min() > -1e-12


def test_dirichlet_identity(rng):
    for _ in range(200):
        w = random_graphon(rng, int(rng.integers(1, 12)))
        f = random_function(rng, w.grid, scale=10 ** rng.uniform(-2, 2))
        assert abs(dirichlet_energy(w, f) - discretize(w).quadratic(f.values)) <= 1e-12 * max(1.0, f.norm2())


def test_dirichlet_constant_is_zero(rng):
    w = random_graphon(rng, 5)
    assert dirichlet_energy(w, StepFunction.constant(w.grid, 3.0)) == 0


def _boundary_safe_gamma(rng, w):
    spec = spectral_decomposition(w).spectrum()
    while True:
        g = rng.uniform(0, spec.max() * 1.1)
        if np.min(np.abs(spec - g)) > 1e-6:
            return g


def test_projection_laws(rng):
    for _ in range(60):
        w = random_graphon(rng, int(rng.integers(1, 10)))
        gamma = _boundary_safe_gamma(rng, w)
        f, g = random_function(rng, w.grid), random_function(rng, w.grid)
        pf = pw_project(w, gamma, f)
        np.testing.assert_allclose(pw_project(w, gamma, pf).values, pf.values, atol=1e-12)
        assert abs(pf.inner(g) - f.inner(pw_project(w, gamma, g))) <= 1e-12
        assert pf.norm() <= f.norm() + 1e-12
        assert np.sqrt(max(dirichlet_energy(w, pf), 0)) <= np.sqrt(gamma) * pf.norm() + 1e-8


def test_pw_basis_two_block():
    w = two_block(0.8, 0.2)
    assert len(pw_basis(w, 0.1)) == 1
    basis = pw_basis(w, 0.3)
    assert len(basis) == 2
    np.testing.assert_allclose(basis[0].values, [1, 1], atol=1e-14)
    np.testing.assert_allclose(basis[1].values, [1, -1], atol=1e-14)
    assert not pw_has_intra_part(w, 0.3)
    assert pw_has_intra_part(w, 0.6)


def test_boundary_guard():
    w = two_block(0.8, 0.2)
    for gamma in (0.2, 0.5, 0.2 + 1e-9):
        with pytest.raises(SpectralBoundaryError):
            pw_basis(w, gamma)
    with pytest.raises(ValidationError):
        pw_basis(w, -0.1)


def test_operator_norm_diff_examples():
    a, b = constant_graphon(0.5, 2), constant_graphon(0.3, 2)
    assert operator_norm_diff(a, a) == 0
    assert operator_norm_diff(a, b, "degree-mult") == pytest.approx(0.2, abs=1e-15)
    assert operator_norm_diff(a, b, "adjacency") == pytest.approx(0.2, abs=1e-15)
    # step block of L is 0 on constants and 0.1 on the +/- vector; cell-mean-zero part is 0.2
    assert operator_norm_diff(a, b, "laplacian") == pytest.approx(0.2, abs=1e-15)


def test_operator_norm_diff_is_sup_of_pairings(rng):
    for _ in range(20):
        w1 = random_graphon(rng, 4)
        w2 = random_graphon(rng, 3)
        for kind in ("adjacency", "laplacian"):
            norm = operator_norm_diff(w1, w2, kind)
            assert operator_norm_diff(w2, w1, kind) == pytest.approx(norm, abs=1e-14)
            for _ in range(10):
                f = random_function(rng, Grid.uniform(5))
                g = random_function(rng, Grid.uniform(7))
                assert abs(wot_pairing(w1, w2, f, g, kind)) <= norm * f.norm() * g.norm() + 1e-12


def test_wot_pairing_decays_for_averages():
    w = closed_form_graphon("xy")
    f = StepFunction(Grid([0, 0.3, 1]), [1.0, -2.0])
    g = StepFunction(Grid([0, 0.7, 1]), [0.5, 1.0])
    fine = average_graphon(w, 1024)
    vals = [abs(wot_pairing(average_graphon(w, n), fine, f, g)) for n in (4, 16, 64)]
    assert vals[2] < vals[1] < vals[0]


def test_refinement_self_consistency_xy():
    lo = spectral_decomposition(average_graphon(closed_form_graphon("xy"), 64), "adjacency")
    hi = spectral_decomposition(average_graphon(closed_form_graphon("xy"), 128), "adjacency")
    assert abs(lo.eigenvalues[-1] - hi.eigenvalues[-1]) < 1e-3
    assert abs(hi.eigenvalues[-1] - 1 / 3) < 1e-3


def test_spectral_gap_matches_halved_step_oracle(rng):
    # halving every cell turns the cell-mean-zero multipliers into step eigenvalues
    for _ in range(40):
        k = int(rng.integers(1, 8))
        w = random_graphon(rng, k)
        part = Partition(w.grid, np.zeros(k, int))
        r = restrict(w, part, 0)
        lam = eigendecompose(halve_cells(r).laplacian).eigenvalues
        assert spectral_gap(r) == pytest.approx(np.sqrt(lam[1]), abs=1e-12)
