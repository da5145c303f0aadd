"""Dense Hermitian operator algebra on small Hilbert spaces.

Operators are plain ``numpy`` arrays of shape ``(D, D)``.  Functions that
need a Hermitian input pass it through :func:`as_hermitian`, which rejects
non-square, non-finite or visibly non-Hermitian matrices and returns the
symmetrized copy ``(M + M^dagger) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotPSDError, NumericalError, ValidationError

HERMITICITY_TOL = 1e-10
PSD_CLAMP = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_OFFDIAG_TOL = 1e-14


def as_hermitian(matrix, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate ``matrix`` and return its Hermitian part as a complex array."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    h = 0.5 * (m + m.conj().T)
    correction = np.max(np.abs(m - h))
    if correction > tol:
        raise ValidationError(f"matrix is not Hermitian (deviation {correction:.3e})")
    return h


def _jacobi_rotate(h: np.ndarray, v: np.ndarray, p: int, q: int, negligible: float) -> None:
    hpq = h[p, q]
    mag = abs(hpq)
    if mag <= negligible:
        h[p, q] = h[q, p] = 0.0
        return
    phase = hpq / mag
    theta = (h[q, q].real - h[p, p].real) / (2.0 * mag)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # phase gauge on q makes the 2x2 block real, then a real Jacobi rotation
    g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
    idx = [p, q]
    h[:, idx] = h[:, idx] @ g
    h[idx, :] = g.conj().T @ h[idx, :]
    h[p, q] = h[q, p] = 0.0
    h[p, p] = h[p, p].real
    h[q, q] = h[q, q].real
    v[:, idx] = v[:, idx] @ g


def eig_hermitian(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Returns ``(w, V)`` with ``w`` ascending and ``V`` unitary such that
    ``V @ diag(w) @ V^dagger`` reconstructs the input.
    """
    h = as_hermitian(matrix).copy()
    n = h.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, np.linalg.norm(h))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(h[offdiag]) ** 2))
        if off <= JACOBI_OFFDIAG_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _jacobi_rotate(h, v, p, q, 1e-3 * JACOBI_OFFDIAG_TOL * scale)
    else:
        raise NumericalError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    w = np.diag(h).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(matrix) -> np.ndarray:
    return eig_hermitian(matrix)[0]


def trace_norm(matrix) -> float:
    """Sum of absolute eigenvalues, ``Tr |X|``."""
    return float(np.sum(np.abs(eigvalsh(matrix))))


def negative_part_norm(matrix) -> float:
    """``Tr(|X| - X)``: twice the magnitude of the negative eigenvalue sum."""
    w = eigvalsh(matrix)
    return float(np.sum(np.abs(w) - w))


def min_eigenvalue(matrix) -> float:
    return float(eigvalsh(matrix)[0])


def is_psd(matrix, tol: float = PSD_CLAMP) -> bool:
    return min_eigenvalue(matrix) >= -tol


def _clamped_spectrum(matrix) -> tuple[np.ndarray, np.ndarray]:
    w, v = eig_hermitian(matrix)
    if w[0] < -PSD_CLAMP:
        raise NotPSDError(f"operator has eigenvalue {w[0]:.3e} below -{PSD_CLAMP:g}")
    return np.clip(w, 0.0, None), v


def operator_sqrt(matrix) -> np.ndarray:
    """Positive square root of a PSD operator.

    Eigenvalues in ``[-1e-10, 0)`` are treated as zero; anything more negative
    raises :class:`NotPSDError`.
    """
    w, v = _clamped_spectrum(matrix)
    return (v * np.sqrt(w)) @ v.conj().T


def operator_function(matrix, func) -> np.ndarray:
    """Apply a scalar function to the clamped spectrum of a PSD operator."""
    w, v = _clamped_spectrum(matrix)
    return (v * func(w)) @ v.conj().T


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# --- generalized Bloch representation -------------------------------------


@dataclass(frozen=True)
class OperatorBasis:
    """Identity followed by ``D^2 - 1`` traceless Hermitian operators.

    Elements are stored as an array of shape ``(D^2, D, D)`` and normalized so
    that ``Tr(g_k g_l) = D delta_kl``.
    """

    dim: int
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.shape[0]

    @property
    def traceless(self) -> np.ndarray:
        return self.elements[1:]


class BlochCoefficients(NamedTuple):
    scalar: float
    vector: np.ndarray


def gell_mann_basis(dim: int) -> OperatorBasis:
    """Generalized Gell-Mann basis scaled to ``Tr(g_k g_l) = D delta_kl``.

    Ordering: identity, then for each pair ``j < k`` the symmetric and
    antisymmetric elements, then the diagonal family.  For ``D = 2`` this gives
    ``(1, sigma_x, sigma_y, sigma_z)``.
    """
    if int(dim) != dim or dim < 2:
        raise ValidationError(f"basis dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    mats = [np.eye(dim, dtype=complex)]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.extend([sym, anti])
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(complex))
    elements = np.array(mats)
    elements[1:] *= np.sqrt(dim / 2.0)
    return OperatorBasis(dim, elements)


PAULI = gell_mann_basis(2).traceless


def bloch_encode(matrix, basis: OperatorBasis, normalization: float = 1.0) -> BlochCoefficients:
    """Coefficients of ``X = (s * 1 + sum_k v_k g_k) / normalization``."""
    h = as_hermitian(matrix)
    if h.shape[0] != basis.dim:
        raise ValidationError(f"operator dimension {h.shape[0]} does not match basis dimension {basis.dim}")
    coeffs = normalization * np.einsum("kab,ba->k", basis.elements, h).real / basis.dim
    return BlochCoefficients(float(coeffs[0]), coeffs[1:])


def bloch_decode(coeffs: BlochCoefficients, basis: OperatorBasis, normalization: float = 1.0) -> np.ndarray:
    vector = np.asarray(coeffs.vector, dtype=float)
    if vector.shape != (len(basis) - 1,):
        raise ValidationError(f"expected {len(basis) - 1} vector components, got {vector.shape}")
    full = np.concatenate([[coeffs.scalar], vector])
    return np.einsum("k,kab->ab", full, basis.elements) / normalization


def bloch_operator(scalar: float, vector, normalization: float = 2.0) -> np.ndarray:
    """Qubit shorthand: ``(scalar * 1 + vector . sigma) / normalization``."""
    return bloch_decode(BlochCoefficients(scalar, np.asarray(vector, float)), gell_mann_basis(2), normalization)
