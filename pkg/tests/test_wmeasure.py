import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointmeas.criteria import dichotomic_optimal_theta, trichotomic_witness
from jointmeas.errors import DomainError, ValidationError
from jointmeas.operators import eigvalsh, random_hermitian
from jointmeas.povm import Povm, dichotomic_from_spec, trichotomic_from_spec, unbiased_qubit_povm, validate
from jointmeas.wmeasure import (
    DifferentialSet,
    PositivityFailure,
    entry_eigenvalues,
    extract_joint,
    fast_entry_eigenvalues,
    fast_negativity,
    from_conjunction,
    from_theta,
    negativity,
    negativity_from_trace_norms,
    supplement_eigenvalues,
)

Z = dichotomic_from_spec(0.0, [0, 0, 1])
X = dichotomic_from_spec(0.0, [1, 0, 0])


def random_unbiased(rng, d):
    if d == 2:
        v = rng.normal(size=3)
        v *= rng.uniform(0, 1) / np.linalg.norm(v)
        return unbiased_qubit_povm(np.array([-v, v]))
    # three vectors summing to zero with lengths <= 1
    while True:
        v = rng.normal(size=(3, 3))
        v -= v.mean(0)
        v *= rng.uniform(0, 1) / np.max(np.linalg.norm(v, axis=1))
        return unbiased_qubit_povm(v)


def random_theta(rng, d, dim=2, scale=0.3):
    """Feasible differential set: uniform plus a grid with zero row/column sums."""
    g = np.array([[random_hermitian(dim, rng, scale) for _ in range(d)] for _ in range(d)])
    g = g - g.mean(0, keepdims=True) - g.mean(1, keepdims=True) + g.mean((0, 1), keepdims=True)
    return DifferentialSet(DifferentialSet.uniform(d, dim).grid + g / d**2)


def test_commuting_product_conjunction():
    C = np.array([[Z.effects[i] @ Z.effects[j] for j in range(2)] for i in range(2)])
    W = from_conjunction(Z, Z, C)
    np.testing.assert_allclose(W.grid, C, atol=1e-15)
    assert negativity(W) == 0.0
    J = extract_joint(W)
    assert isinstance(J, Povm)
    np.testing.assert_allclose(J.effects.reshape(2, 2, 2, 2), C)


def test_uniform_conjunction_equals_uniform_theta():
    rng = np.random.default_rng(0)
    A, B = random_unbiased(rng, 3), random_unbiased(rng, 3)
    C = Povm(np.array([np.eye(2) / 9] * 9))
    W1 = from_conjunction(A, B, C)
    W2 = from_theta(A, B, DifferentialSet.uniform(3, 2))
    np.testing.assert_allclose(W1.grid, W2.grid, atol=1e-15)
    expected = (A.effects[:, None] + B.effects[None, :]) / 3 - np.eye(2) / 9
    np.testing.assert_allclose(W1.grid, expected, atol=1e-15)


def test_z_x_uniform_values():
    W = from_theta(Z, X, DifferentialSet.uniform(2, 2))
    assert entry_eigenvalues(W).min() == pytest.approx((1 - np.sqrt(2)) / 4, abs=1e-14)
    assert negativity(W) == pytest.approx(np.sqrt(2) - 1, abs=1e-13)
    assert negativity_from_trace_norms(W) == pytest.approx(np.sqrt(2) - 1, abs=1e-13)
    fail = extract_joint(W)
    assert isinstance(fail, PositivityFailure) and not fail
    assert fail.eigenvalue == pytest.approx((1 - np.sqrt(2)) / 4)


def test_z_x_never_positive():
    rng = np.random.default_rng(5)
    for _ in range(50):
        assert not extract_joint(from_theta(Z, X, random_theta(rng, 2, scale=2.0)))


def test_feasibility_window_eigenvalues():
    a, b = np.array([0.0, 0.0, 0.8]), np.array([0.6, 0.0, 0.0])
    A, B = dichotomic_from_spec(0.0, a), dichotomic_from_spec(0.0, b)
    t = 1.2
    theta = DifferentialSet.from_bloch(np.array([[t, 2 - t], [2 - t, t]]), np.zeros((2, 2, 3)))
    W = from_theta(A, B, theta)
    vec = {0: -a, 1: a}, {0: -b, 1: b}
    for i in range(2):
        for j in range(2):
            t0 = theta.bloch()[0][i, j]
            r = np.linalg.norm(vec[0][i] + vec[1][j])
            np.testing.assert_allclose(eigvalsh(W.grid[i, j]), [(2 - t0 - r) / 4, (2 - t0 + r) / 4], atol=1e-14)


def test_boundary_dichotomic_extracts():
    m = 1 / np.sqrt(2)
    A, B = dichotomic_from_spec(0.0, [0, 0, m]), dichotomic_from_spec(0.0, [m, 0, 0])
    J = extract_joint(from_theta(A, B, dichotomic_optimal_theta(A.spec.axis, B.spec.axis)))
    assert isinstance(J, Povm)
    grid = J.effects.reshape(2, 2, 2, 2)
    np.testing.assert_allclose(grid.sum(1), A.effects, atol=1e-12)
    np.testing.assert_allclose(grid.sum(0), B.effects, atol=1e-12)


def test_trichotomic_solution_diagonal_vanishes():
    A, B = trichotomic_from_spec(0.9, 0.0), trichotomic_from_spec(0.9, np.pi / 3)
    W = from_theta(A, B, trichotomic_witness(A.spec, B.spec))
    lam = entry_eigenvalues(W)
    # entries hit by the solution matrix have their Bloch part cancelled
    assert np.sum(np.all(np.abs(lam) < 1e-12, axis=-1)) == 3


def test_theta_constraint_errors():
    grid = DifferentialSet.uniform(2, 2).grid.copy()
    grid[0, 0] += 1e-6 * np.eye(2)
    with pytest.raises(DomainError):
        DifferentialSet(grid)
    with pytest.raises(ValidationError):
        DifferentialSet(np.zeros((2, 3, 2, 2)))


def test_mismatched_inputs():
    with pytest.raises(ValidationError):
        from_theta(Z, trichotomic_from_spec(0.5), DifferentialSet.uniform(2, 2))
    with pytest.raises(ValidationError):
        from_theta(Z, X, DifferentialSet.uniform(3, 2))
    with pytest.raises(ValidationError):
        from_conjunction(Z, X, Povm(np.array([np.eye(2) / 3] * 3)))


def test_non_positive_conjunction_accepted_on_request():
    C = np.array([[np.eye(2) / 2, -np.eye(2) / 4], [np.eye(2) / 4, np.eye(2) / 2]])
    with pytest.raises(ValidationError):
        from_conjunction(Z, X, C)
    W = from_conjunction(Z, X, C, require_positive=False)
    assert W.marginal_residual() < 1e-15


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]))
@settings(max_examples=40, deadline=None)
def test_marginals_and_identity_for_any_theta(seed, d):
    rng = np.random.default_rng(seed)
    A, B = random_unbiased(rng, d), random_unbiased(rng, d)
    W = from_theta(A, B, random_theta(rng, d))
    assert W.marginal_residual() <= 1e-12
    assert W.completeness_residual() <= 1e-12
    assert negativity(W) == pytest.approx(negativity_from_trace_norms(W), abs=1e-9)
    np.testing.assert_allclose(fast_entry_eigenvalues(W), entry_eigenvalues(W), atol=1e-10)
    assert fast_negativity(W) == pytest.approx(negativity(W), abs=1e-10)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_extract_round_trip(seed):
    rng = np.random.default_rng(seed)
    A = random_unbiased(rng, 2)
    B = random_unbiased(rng, 2)
    W = from_theta(A, B, random_theta(rng, 2, scale=0.05))
    J = extract_joint(W)
    if J:
        assert validate(J).ok
        W2 = from_conjunction(A, B, J)
        np.testing.assert_allclose(W2.grid, W.grid, atol=1e-9)
    else:
        assert J.eigenvalue < 0


def test_dense_path_for_qutrits():
    rng = np.random.default_rng(3)
    effects = []
    rest = np.eye(3, dtype=complex)
    for _ in range(2):
        g = random_hermitian(3, rng, 0.2)
        e = g @ g
        effects.append(e)
        rest = rest - e
    effects.append(rest)
    A = Povm(np.array(effects))
    assert validate(A).ok
    W = from_theta(A, A, DifferentialSet.uniform(3, 3))
    assert W.marginal_residual() < 1e-15
    assert negativity(W) == pytest.approx(negativity_from_trace_norms(W), abs=1e-9)


def test_supplement_formula_shape():
    lam = supplement_eigenvalues(np.zeros((3, 3)), np.zeros((3, 3)), np.ones((3, 3)), np.zeros((3, 3, 3)))
    np.testing.assert_allclose(lam, np.full((3, 3, 2), 1 / 9))
