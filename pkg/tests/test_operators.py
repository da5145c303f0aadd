import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointmeas.errors import NotPSDError, ValidationError
from jointmeas.operators import (
    PAULI,
    BlochCoefficients,
    as_hermitian,
    bloch_decode,
    bloch_encode,
    bloch_operator,
    eig_hermitian,
    gell_mann_basis,
    is_psd,
    min_eigenvalue,
    negative_part_norm,
    operator_function,
    operator_sqrt,
    random_hermitian,
    random_unitary,
    trace_norm,
)


@pytest.mark.parametrize("dim", [2, 3, 4, 6])
def test_jacobi_matches_lapack(dim):
    rng = np.random.default_rng(dim)
    for _ in range(30):
        h = random_hermitian(dim, rng)
        w, v = eig_hermitian(h)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-12)
        np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)
        np.testing.assert_allclose(v.conj().T @ v, np.eye(dim), atol=1e-12)


def test_jacobi_degenerate_and_diagonal():
    w, v = eig_hermitian(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(v, np.eye(3))
    w, _ = eig_hermitian(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(w, [-1, 2, 3])


def test_jacobi_tiny_entries_do_not_overflow():
    h = np.array([[1.0, 1e-300], [1e-300, 1.0 + 1e-16]])
    w, _ = eig_hermitian(h)
    assert np.all(np.isfinite(w))


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_eigendecomposition_reconstructs(dim, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(dim, rng, scale=10 ** rng.uniform(-3, 3))
    w, v = eig_hermitian(h)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose((v * w) @ v.conj().T, h, atol=1e-11 * max(1, np.abs(h).max()))


def test_as_hermitian_rejects_bad_input():
    with pytest.raises(ValidationError):
        as_hermitian(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        as_hermitian([[1, 1], [0, 1]])
    with pytest.raises(ValidationError):
        as_hermitian([[np.nan, 0], [0, 1]])


def test_trace_norm_and_negative_part():
    z = PAULI[2]
    assert trace_norm(z) == pytest.approx(2.0)
    assert negative_part_norm(z) == pytest.approx(2.0)
    assert negative_part_norm(np.eye(2)) == 0.0
    rng = np.random.default_rng(1)
    h = random_hermitian(4, rng)
    assert trace_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).sum(), abs=1e-12)


def test_operator_sqrt():
    rng = np.random.default_rng(2)
    g = random_hermitian(3, rng)
    p = g @ g
    r = operator_sqrt(p)
    np.testing.assert_allclose(r @ r, p, atol=1e-11)
    assert is_psd(r)
    proj = np.diag([1.0, 0.0])
    np.testing.assert_allclose(operator_sqrt(proj), proj, atol=1e-15)


def test_sqrt_clamp_window():
    assert np.allclose(operator_sqrt(np.diag([1.0, -5e-11])), np.diag([1.0, 0.0]))
    with pytest.raises(NotPSDError):
        operator_sqrt(np.diag([1.0, -1e-6]))
    np.testing.assert_allclose(operator_function(np.diag([4.0, 1.0]), np.log), np.diag([np.log(4), 0]))


def test_random_unitary_is_unitary():
    u = random_unitary(4, np.random.default_rng(0))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_gell_mann_orthogonality(dim):
    basis = gell_mann_basis(dim)
    assert len(basis) == dim**2
    gram = np.einsum("kab,lba->kl", basis.elements, basis.elements)
    np.testing.assert_allclose(gram, dim * np.eye(dim**2), atol=1e-12)
    for g in basis.traceless:
        assert abs(np.trace(g)) < 1e-12
        np.testing.assert_allclose(g, g.conj().T)


def test_qubit_basis_is_pauli():
    b = gell_mann_basis(2).elements
    np.testing.assert_allclose(b[1], [[0, 1], [1, 0]])
    np.testing.assert_allclose(b[2], [[0, -1j], [1j, 0]])
    np.testing.assert_allclose(b[3], [[1, 0], [0, -1]])


def test_gell_mann_rejects_small_dimension():
    with pytest.raises(ValidationError):
        gell_mann_basis(1)


@pytest.mark.parametrize("dim", [2, 3])
def test_bloch_round_trip(dim):
    basis = gell_mann_basis(dim)
    rng = np.random.default_rng(dim)
    h = random_hermitian(dim, rng)
    for norm in (1.0, dim, dim**2):
        c = bloch_encode(h, basis, norm)
        np.testing.assert_allclose(bloch_decode(c, basis, norm), h, atol=1e-12)


def test_bloch_identity_and_shapes():
    c = bloch_encode(np.eye(3), gell_mann_basis(3), 9)
    assert c.scalar == pytest.approx(9.0)
    np.testing.assert_allclose(c.vector, 0, atol=1e-14)
    with pytest.raises(ValidationError):
        bloch_decode(BlochCoefficients(1.0, np.zeros(3)), gell_mann_basis(3))
    with pytest.raises(ValidationError):
        bloch_encode(np.eye(2), gell_mann_basis(3))


def test_qubit_bloch_eigenvalues():
    op = bloch_operator(1.0, [0.3, 0.4, 0.0])
    assert min_eigenvalue(op) == pytest.approx((1 - 0.5) / 2)
