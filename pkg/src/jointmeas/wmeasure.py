"""W-measures: Hermitian operator-valued measures with prescribed POVM marginals.

Given test POVMs ``A`` and ``B`` with ``d`` outcomes each and a conjunction
``C`` over outcome pairs ``(i, j)``::

    W_ij = C_ij + (A_i - sum_j C_ij) / d + (B_j - sum_i C_ij) / d

or, equivalently, in terms of differential operators ``Theta`` whose rows
and columns each sum to ``1/d``::

    W_ij = (A_i + B_j) / d - Theta_ij

Every entry of ``W`` being positive is equivalent to ``A`` and ``B`` being
jointly measurable, and ``W`` is then itself a joint POVM.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainError, ValidationError
from .operators import (
    PSD_CLAMP,
    BlochCoefficients,
    as_hermitian,
    bloch_decode,
    bloch_encode,
    eigvalsh,
    gell_mann_basis,
    negative_part_norm,
    trace_norm,
)
from .povm import OMEGA, Povm, check_valid, validate

THETA_TOL = 1e-8
MARGINAL_TOL = 1e-9


def _check_pair(A: Povm, B: Povm) -> None:
    if A.outcomes != B.outcomes:
        raise ValidationError(f"outcome counts differ ({A.outcomes} vs {B.outcomes}); only d_A = d_B is supported")
    if A.dim != B.dim:
        raise ValidationError(f"Hilbert dimensions differ ({A.dim} vs {B.dim})")


@dataclass(frozen=True)
class DifferentialSet:
    """Grid ``Theta[i, j]`` of Hermitian operators, shape ``(d, d, D, D)``.

    Rows and columns each sum to ``1/d`` (checked to ``1e-8`` on construction).
    """

    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=complex)
        if grid.ndim != 4 or grid.shape[0] != grid.shape[1] or grid.shape[2] != grid.shape[3]:
            raise ValidationError(f"differential set must have shape (d, d, D, D), got {grid.shape}")
        d, dim = grid.shape[0], grid.shape[2]
        grid = np.array([[as_hermitian(grid[i, j]) for j in range(d)] for i in range(d)])
        target = np.eye(dim) / d
        resid = max(np.max(np.abs(grid.sum(0) - target)), np.max(np.abs(grid.sum(1) - target)))
        if resid > THETA_TOL:
            raise DomainError(f"row/column sums of Theta deviate from 1/d by {resid:.3e}")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @property
    def d(self) -> int:
        return self.grid.shape[0]

    @property
    def dim(self) -> int:
        return self.grid.shape[2]

    @classmethod
    def uniform(cls, d: int, dim: int) -> "DifferentialSet":
        return cls(np.broadcast_to(np.eye(dim) / d**2, (d, d, dim, dim)).copy())

    @classmethod
    def from_bloch(cls, scalars, vectors) -> "DifferentialSet":
        """``Theta_ij = (theta0_ij 1 + theta_ij . gamma) / d**2``."""
        scalars = np.asarray(scalars, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        d = scalars.shape[0]
        dim = int(round(np.sqrt(vectors.shape[-1] + 1)))
        basis = gell_mann_basis(dim)
        grid = np.array(
            [[bloch_decode(BlochCoefficients(scalars[i, j], vectors[i, j]), basis, d**2) for j in range(d)] for i in range(d)]
        )
        return cls(grid)

    @classmethod
    def from_conjunction(cls, C: np.ndarray) -> "DifferentialSet":
        """``Theta_ij = sum_j C_ij / d + sum_i C_ij / d - C_ij`` for a ``(d, d, D, D)`` grid."""
        C = np.asarray(C, dtype=complex)
        d = C.shape[0]
        return cls(C.sum(1, keepdims=True) / d + C.sum(0, keepdims=True) / d - C)

    def bloch(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-entry ``(theta0, theta_vector)`` with normalization ``d**2``."""
        basis = gell_mann_basis(self.dim)
        coeffs = [[bloch_encode(self.grid[i, j], basis, self.d**2) for j in range(self.d)] for i in range(self.d)]
        scalars = np.array([[c.scalar for c in row] for row in coeffs])
        vectors = np.array([[c.vector for c in row] for row in coeffs])
        return scalars, vectors


@dataclass(frozen=True)
class WMeasure:
    """``d x d`` grid of Hermitian operators together with its marginals."""

    grid: np.ndarray
    A: Povm
    B: Povm
    provenance: str
    theta: Optional[DifferentialSet] = None

    @property
    def d(self) -> int:
        return self.grid.shape[0]

    @property
    def dim(self) -> int:
        return self.grid.shape[2]

    def __getitem__(self, ij) -> np.ndarray:
        return self.grid[ij]

    def marginal_residual(self) -> float:
        ra = np.max(np.abs(self.grid.sum(1) - self.A.effects))
        rb = np.max(np.abs(self.grid.sum(0) - self.B.effects))
        return float(max(ra, rb))

    def completeness_residual(self) -> float:
        return float(np.max(np.abs(self.grid.sum((0, 1)) - np.eye(self.dim))))

    def to_theta(self) -> DifferentialSet:
        if self.theta is not None:
            return self.theta
        d = self.d
        return DifferentialSet((self.A.effects[:, None] + self.B.effects[None, :]) / d - self.grid)


def conjunction_grid(C: Povm, d: int) -> np.ndarray:
    if C.outcomes != d * d:
        raise ValidationError(f"conjunction must have d^2 = {d * d} outcomes, got {C.outcomes}")
    return C.effects.reshape(d, d, C.dim, C.dim)


def from_conjunction(A: Povm, B: Povm, C: Union[Povm, np.ndarray], *, require_positive: bool = True) -> WMeasure:
    """Build ``W`` from test POVMs ``A``, ``B`` and a conjunction over pairs ``(i, j)``.

    ``C`` is either a :class:`Povm` with ``d*d`` outcomes in row-major ``(i, j)``
    order or a ``(d, d, D, D)`` grid.  With ``require_positive=False`` a
    non-positive conjunction (only completeness is checked) is accepted.
    """
    _check_pair(A, B)
    check_valid(A)
    check_valid(B)
    d, dim = A.outcomes, A.dim
    if isinstance(C, Povm):
        if C.dim != dim:
            raise ValidationError("conjunction acts on a different Hilbert space")
        if require_positive:
            check_valid(C)
        grid_c = conjunction_grid(C, d)
    else:
        grid_c = np.asarray(C, dtype=complex)
        if grid_c.shape != (d, d, dim, dim):
            raise ValidationError(f"conjunction grid must have shape {(d, d, dim, dim)}, got {grid_c.shape}")
        if require_positive:
            check_valid(Povm(grid_c.reshape(d * d, dim, dim)))
    if np.max(np.abs(grid_c.sum((0, 1)) - np.eye(dim))) > MARGINAL_TOL:
        raise ValidationError("conjunction operators do not sum to the identity")
    row = grid_c.sum(1)
    col = grid_c.sum(0)
    grid = grid_c + (A.effects - row)[:, None] / d + (B.effects - col)[None, :] / d
    return WMeasure(grid, A, B, "conjunction")


def from_theta(A: Povm, B: Povm, theta: DifferentialSet) -> WMeasure:
    """``W_ij = (A_i + B_j) / d - Theta_ij``."""
    _check_pair(A, B)
    check_valid(A)
    check_valid(B)
    if theta.d != A.outcomes or theta.dim != A.dim:
        raise ValidationError("differential set does not match the POVMs' outcome count or dimension")
    d = A.outcomes
    grid = (A.effects[:, None] + B.effects[None, :]) / d - theta.grid
    return WMeasure(grid, A, B, "theta", theta)


def entry_eigenvalues(W: WMeasure) -> np.ndarray:
    """Ascending eigenvalues of every entry, shape ``(d, d, D)``."""
    return np.array([[eigvalsh(W.grid[i, j]) for j in range(W.d)] for i in range(W.d)])


def negativity(W: WMeasure) -> float:
    """``(1/D) sum_ij Tr(|W_ij| - W_ij)``; zero exactly when every entry is positive."""
    return float(sum(negative_part_norm(W.grid[i, j]) for i in range(W.d) for j in range(W.d)) / W.dim)


def negativity_from_trace_norms(W: WMeasure) -> float:
    """Same quantity through ``(1/D) sum_ij ||W_ij||_1 - 1`` (uses completeness)."""
    return float(sum(trace_norm(W.grid[i, j]) for i in range(W.d) for j in range(W.d)) / W.dim - 1.0)


# --- qubit fast path -------------------------------------------------------


def supplement_eigenvalues(a_vectors, b_vectors, theta0, theta_vectors) -> np.ndarray:
    """Closed-form entry eigenvalues for unbiased qubit POVMs.

    With ``A_i = (1 + a_i . sigma) / d``, ``B_j = (1 + b_j . sigma) / d`` and
    ``Theta_ij = (theta0_ij 1 + theta_ij . sigma) / d**2``::

        lambda_k^{ij} = (2 - theta0_ij + w^k |a_i + b_j - theta_ij|) / d**2,  w = -1

    Returns shape ``(d, d, 2)`` in ascending order (``k = 1`` then ``k = 2``).
    """
    a = np.asarray(a_vectors, dtype=float)
    b = np.asarray(b_vectors, dtype=float)
    d = len(a)
    r = np.linalg.norm(a[:, None, :] + b[None, :, :] - np.asarray(theta_vectors, dtype=float), axis=-1)
    base = 2.0 - np.asarray(theta0, dtype=float)
    return np.stack([base + OMEGA**k * r for k in (1, 2)], axis=-1) / d**2


def _unbiased_qubit_vectors(p: Povm) -> np.ndarray:
    spec = p.spec
    if p.dim != 2 or spec is None or spec.bias != 0.0:
        raise ValidationError("fast path needs unbiased qubit POVMs built from Bloch specs")
    return spec.vectors


def fast_entry_eigenvalues(W: WMeasure) -> np.ndarray:
    """Entry eigenvalues via :func:`supplement_eigenvalues` (unbiased qubit inputs only)."""
    a = _unbiased_qubit_vectors(W.A)
    b = _unbiased_qubit_vectors(W.B)
    theta0, theta_vec = W.to_theta().bloch()
    return supplement_eigenvalues(a, b, theta0, theta_vec)


def fast_negativity(W: WMeasure) -> float:
    lam = fast_entry_eigenvalues(W)
    return float(np.sum(np.abs(lam) - lam) / W.dim)


# --- joint POVM extraction ------------------------------------------------


@dataclass(frozen=True)
class PositivityFailure:
    """Most negative entry of a W-measure that is not a POVM."""

    witness: tuple[int, int]
    eigenvalue: float

    def __bool__(self) -> bool:
        return False


def extract_joint(W: WMeasure, tol: float = PSD_CLAMP) -> Union[Povm, PositivityFailure]:
    """Return ``W`` as a ``d*d``-outcome joint POVM, or the most negative entry."""
    lam_min = entry_eigenvalues(W)[..., 0]
    i, j = np.unravel_index(np.argmin(lam_min), lam_min.shape)
    if lam_min[i, j] < -tol:
        return PositivityFailure((int(i), int(j)), float(lam_min[i, j]))
    joint = Povm(W.grid.reshape(W.d * W.d, W.dim, W.dim))
    report = validate(joint, tol=max(tol, MARGINAL_TOL))
    if not report.ok:
        return PositivityFailure((int(i), int(j)), float(lam_min[i, j]))
    return joint
