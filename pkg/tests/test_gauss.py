"""Gaussian-fermion engine vs a dense Fock-space oracle."""

import numpy as np
import pytest
from scipy.linalg import expm

from tme import gauss
from tme.gauss import (
    BranchError,
    DegenerateSpectrumError,
    QuadraticForm,
    expectation,
    fock_expectation,
    fock_ground_state,
    fock_operator,
    fock_product,
    gaussian_product,
    ground_basis,
    majorana_matrices,
    pfaffian,
    sign_resolve,
    wick_expectation,
)


def rand_antisym(rng, m, scale=1.0):
    X = rng.normal(size=(m, m)) * scale
    return X - X.T


def dense_form(M):
    m = M.shape[0]
    return QuadraticForm(dim=m, idx=np.arange(m)[None, :], block=np.asarray(M))


# ---------------------------------------------------------------------------
# ground bases


def test_ground_basis_single_pair():
    b = ground_basis(np.array([[0.0, 2.0], [-2.0, 0.0]]))
    assert np.allclose(b.spectrum, [-2.0, 2.0])
    # columns are the -+i chirality eigenvectors of iA
    H = 1j * np.array([[0.0, 2.0], [-2.0, 0.0]])
    for k, e in enumerate(b.spectrum):
        v = b.u_full[:, k]
        assert np.allclose(H @ v, e * v, atol=1e-12)


def test_ground_basis_zero_matrix_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        ground_basis(np.zeros((4, 4)))


def test_ground_basis_near_degenerate_tolerance():
    A = np.array([[0.0, 1e-12], [-1e-12, 0.0]])
    with pytest.raises(DegenerateSpectrumError):
        ground_basis(A, gap_tol=1e-9)
    assert np.allclose(ground_basis(A, gap_tol=1e-14).spectrum, [-1e-12, 1e-12])


def test_ground_basis_block_diagonal_union():
    A1 = np.array([[0.0, 2.0], [-2.0, 0.0]])
    A2 = np.array([[0.0, 0.7], [-0.7, 0.0]])
    A = np.block([[A1, np.zeros((2, 2))], [np.zeros((2, 2)), A2]])
    b = ground_basis(A)
    assert np.allclose(b.spectrum, [-2.0, -0.7, 0.7, 2.0])


def test_ground_basis_unitary_and_antisymmetric_spectrum():
    rng = np.random.default_rng(3)
    b = ground_basis(rand_antisym(rng, 8))
    assert np.allclose(b.u_full.conj().T @ b.u_full, np.eye(8), atol=1e-10)
    assert np.allclose(b.spectrum, -b.spectrum[::-1], atol=1e-10)


# ---------------------------------------------------------------------------
# gaussian products at the single-particle level


def test_single_form_is_matrix_exponential():
    rng = np.random.default_rng(5)
    M = rand_antisym(rng, 4)
    assert np.allclose(gaussian_product([dense_form(M)], 4), expm(M), atol=1e-12)


def test_commuting_forms_add():
    # forms on disjoint Majorana pairs commute
    M1 = np.zeros((4, 4))
    M1[0, 1], M1[1, 0] = 0.8, -0.8
    M2 = np.zeros((4, 4))
    M2[2, 3], M2[3, 2] = -1.3, 1.3
    prod = gaussian_product([dense_form(M1), dense_form(M2)], 4)
    assert np.allclose(prod, expm(M1 + M2), atol=1e-12)


def test_product_matches_fock_conjugation():
    # the single-particle matrix R of a product of Gaussians is the matrix
    # that conjugates Majoranas in Fock space: U gamma_i U^{-1} = sum_j R_ji gamma_j
    rng = np.random.default_rng(7)
    forms = [dense_form(rand_antisym(rng, 4, 0.6)) for _ in range(3)]
    R = gaussian_product(forms, 4)
    U = fock_product(forms)
    Uinv = np.linalg.inv(U)
    g = majorana_matrices(4)
    for i in range(4):
        lhs = U @ g[i] @ Uinv
        rhs = sum(R[j, i] * g[j] for j in range(4))
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_real_antisymmetric_exponential_is_orthogonal():
    rng = np.random.default_rng(11)
    for _ in range(5):
        R = gaussian_product([dense_form(rand_antisym(rng, 6))], 6)
        assert np.linalg.norm(R.T @ R - np.eye(6)) < 1e-10


def test_gaussian_product_dim_mismatch():
    with pytest.raises(ValueError):
        gaussian_product([dense_form(np.zeros((4, 4)))], 6)


# ---------------------------------------------------------------------------
# expectation values against the Fock oracle


def test_expectation_of_identity():
    rng = np.random.default_rng(13)
    b = ground_basis(rand_antisym(rng, 6))
    amp = expectation(b, np.eye(6, dtype=complex))
    assert amp.value == pytest.approx(1.0, abs=1e-10)
    assert not amp.branch_resolved


def test_expectation_of_own_hamiltonian_flow():
    # imaginary-time flow of the basis's own Hamiltonian H = (i/4) c^T A c
    # (block i beta A): the ground state is an eigenstate, so the value is
    # exactly e^{beta E_0} = e^{-beta sum(E_k)/2}, real and in (0, 1)
    rng = np.random.default_rng(17)
    A = rand_antisym(rng, 8)
    b = ground_basis(A)
    beta = 0.4
    E = gaussian_product([dense_form(1j * beta * A)], 8)
    amp = expectation(b, E)
    assert abs(amp.value.imag) < 1e-10
    expected = np.exp(-beta * np.sum(b.spectrum[b.spectrum > 0]) / 2)
    assert amp.value.real == pytest.approx(expected, rel=1e-9)
    bound = np.exp(beta * np.sum(b.spectrum[b.spectrum > 0]) / 2)
    assert 0 < amp.value.real <= bound + 1e-12
    # and it matches the dense many-body computation
    psi = fock_ground_state(A)[1]
    dense = psi.conj() @ (fock_product([dense_form(1j * beta * A)]) @ psi)
    assert amp.value == pytest.approx(complex(dense), abs=1e-9)


def test_expectation_random_six_majoranas():
    rng = np.random.default_rng(19)
    A = rand_antisym(rng, 6)
    b = ground_basis(A)
    for _ in range(10):
        forms = [dense_form(rand_antisym(rng, 6, 0.5)) for _ in range(2)]
        amp = expectation(b, gaussian_product(forms, 6))
        oracle = fock_expectation(A, forms)
        # principal branch may differ from the true sign by -1
        assert abs(amp.value) == pytest.approx(abs(oracle), abs=1e-9)
        assert min(abs(amp.value - oracle), abs(amp.value + oracle)) < 1e-9


def test_expectation_squares_to_determinant():
    rng = np.random.default_rng(23)
    A = rand_antisym(rng, 6)
    b = ground_basis(A)
    E = gaussian_product([dense_form(rand_antisym(rng, 6, 0.4))], 6)
    amp = expectation(b, E)
    W = b.u_full.conj().T @ E @ b.u_full
    nblock = len(b.spectrum) // 2
    det = np.linalg.det(W[:nblock, :nblock])
    assert amp.value**2 == pytest.approx(det, rel=1e-8)


def test_expectation_principal_branch_half_plane():
    rng = np.random.default_rng(29)
    A = rand_antisym(rng, 6)
    b = ground_basis(A)
    for _ in range(20):
        E = gaussian_product([dense_form(rand_antisym(rng, 6, 0.8))], 6)
        amp = expectation(b, E)
        if abs(amp.value) > 1e-12:
            assert -np.pi / 2 < np.angle(amp.value) <= np.pi / 2 + 1e-12


def test_conjugation_identity():
    # reversing and conjugating the operator string conjugates the amplitude
    rng = np.random.default_rng(31)
    A = rand_antisym(rng, 6)
    b = ground_basis(A)
    forms = [dense_form(rand_antisym(rng, 6, 0.5)) for _ in range(3)]
    rev = [QuadraticForm(f.dim, f.idx, -f.block.conj()) for f in reversed(forms)]
    amp = expectation(b, gaussian_product(forms, 6))
    amp_rev = expectation(b, gaussian_product(rev, 6))
    assert min(
        abs(amp_rev.value - np.conj(amp.value)),
        abs(amp_rev.value + np.conj(amp.value)),
    ) < 1e-9


# ---------------------------------------------------------------------------
# sign resolution


def test_sign_resolve_constant_path():
    amp = sign_resolve(lambda t: 1.5 + 0j, 1.5 + 0j, steps=8)
    assert amp.value == 1.5 + 0j
    assert amp.branch_resolved
    assert amp.path_steps == 8


def test_sign_resolve_half_turn():
    amp = sign_resolve(lambda t: 1.5 * np.exp(1j * np.pi * t), 1.5 + 0j, steps=32)
    assert amp.value == pytest.approx(-1.5, abs=1e-12)


def test_sign_resolve_refines_coarse_grid():
    # a quarter-turn jump cannot be attributed to either branch, so the grid
    # doubles until the chaining is unambiguous
    amp = sign_resolve(lambda t: np.exp(1.2j * np.pi * t), 1.0 + 0j, steps=2)
    assert amp.path_steps > 2
    assert amp.value == pytest.approx(np.exp(1.2j * np.pi), abs=1e-12)


def test_sign_resolve_rejects_zero_reference():
    with pytest.raises(BranchError):
        sign_resolve(lambda t: 1.0 + 0j, 0j, steps=8)


def test_sign_resolve_rejects_vanishing_path():
    with pytest.raises(BranchError):
        sign_resolve(lambda t: complex(t - 0.5), 1.0 + 0j, steps=8)


def test_sign_resolve_rejects_incompatible_reference():
    with pytest.raises(BranchError):
        sign_resolve(lambda t: 1j * (1.0 + t), 1.0 + 0j, steps=8)


def test_sign_resolve_unresolvable_discontinuity():
    # a built-in quarter-turn discontinuity stays ambiguous at any refinement
    with pytest.raises(BranchError):
        sign_resolve(
            lambda t: 1.0 + 0j if t < 0.5 else np.exp(1.55j),
            1.0 + 0j,
            steps=8,
            max_steps=128,
        )


# ---------------------------------------------------------------------------
# the Fock oracle itself


def test_pair_product_identity():
    # e^{(pi/2) g1 g2} = g1 g2
    M = np.array([[0.0, np.pi], [-np.pi, 0.0]])
    g = majorana_matrices(2)
    assert np.allclose(fock_operator(dense_form(M)), g[0] @ g[1], atol=1e-12)


def test_empty_fock_product_is_identity():
    assert np.allclose(fock_product([], dim=4), np.eye(4))
    with pytest.raises(ValueError):
        fock_product([])


def test_majorana_algebra():
    g = majorana_matrices(6)
    for i in range(6):
        for j in range(6):
            anti = g[i] @ g[j] + g[j] @ g[i]
            assert np.allclose(anti, 2 * np.eye(8) * (i == j), atol=1e-12)


def test_fock_oracle_cross_check_battery():
    # broad randomized agreement between the determinant engine and dense
    # Fock algebra, the backbone correctness property of this module
    rng = np.random.default_rng(37)
    for trial in range(200):
        m = int(rng.choice([4, 6, 8]))
        A = rand_antisym(rng, m)
        try:
            b = ground_basis(A)
        except DegenerateSpectrumError:
            continue
        forms = [
            dense_form(rand_antisym(rng, m, 0.5))
            for _ in range(int(rng.integers(1, 4)))
        ]
        amp = expectation(b, gaussian_product(forms, m))
        oracle = fock_expectation(A, forms)
        assert abs(amp.value) == pytest.approx(abs(oracle), abs=1e-9)
        assert min(abs(amp.value - oracle), abs(amp.value + oracle)) < 1e-9


def test_antisymmetry_guard():
    bad = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        dense_form(bad).validate()


# ---------------------------------------------------------------------------
# auxiliary numerics


def test_pfaffian_squares_to_determinant():
    rng = np.random.default_rng(41)
    for m in (2, 4, 6, 8):
        A = rand_antisym(rng, m)
        assert pfaffian(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-9)


def test_pfaffian_odd_dimension_zero():
    assert pfaffian(np.zeros((3, 3))) == 0


def test_wick_two_point():
    rng = np.random.default_rng(43)
    A = rand_antisym(rng, 6)
    b = ground_basis(A)
    psi = fock_ground_state(A)[1]
    g = majorana_matrices(6)
    cov = np.array(
        [[psi.conj() @ (g[i] @ g[j] @ psi) for j in range(6)] for i in range(6)]
    )
    for i in range(6):
        for j in range(6):
            assert wick_expectation([i, j], cov) == pytest.approx(
                complex(cov[i, j]), abs=1e-10
            )


def test_wick_four_point_matches_dense():
    rng = np.random.default_rng(47)
    A = rand_antisym(rng, 6)
    psi = fock_ground_state(A)[1]
    g = majorana_matrices(6)
    cov = np.array(
        [[psi.conj() @ (g[i] @ g[j] @ psi) for j in range(6)] for i in range(6)]
    )
    dense = psi.conj() @ (g[0] @ g[1] @ g[2] @ g[3] @ psi)
    assert wick_expectation([0, 1, 2, 3], cov) == pytest.approx(
        complex(dense), abs=1e-10
    )
