"""Selective and sequential measurements.

Measuring ``A`` through a Lueders instrument and then ``B`` realizes the
conjunction ``C_ij = K_i^dagger B_j K_i``.  The W-measure built from it,
and its expectation values (the operational quasiprobability), can be
obtained from measured statistics alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .criteria import MARGIN_TOL, JmVerdict
from .errors import ValidationError
from .operators import PAULI, eig_hermitian, operator_sqrt
from .povm import OMEGA, Povm, check_valid, density_matrix, effect_bloch, haar_pure_states
from .wmeasure import WMeasure, entry_eigenvalues, from_conjunction

KRAUS_TOL = 1e-10
PROB_TOL = 1e-9


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators ``K_i`` of an instrument, shape ``(d, D, D)``."""

    operators: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValidationError(f"Kraus operators must have shape (d, D, D), got {ops.shape}")
        resid = np.max(np.abs(self.effects_of(ops).sum(0) - np.eye(ops.shape[1])))
        if resid > KRAUS_TOL:
            raise ValidationError(f"sum of K^dagger K deviates from identity by {resid:.3e}")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @staticmethod
    def effects_of(ops: np.ndarray) -> np.ndarray:
        return np.conj(np.swapaxes(ops, -1, -2)) @ ops

    @property
    def effects(self) -> np.ndarray:
        return self.effects_of(self.operators)

    def __len__(self) -> int:
        return self.operators.shape[0]


def luders_kraus(A: Povm) -> KrausSet:
    """``K_i = sqrt(A_i)``."""
    check_valid(A)
    return KrausSet(np.array([operator_sqrt(e) for e in A.effects]))


def sequential_conjunction(K: KrausSet, B: Povm) -> Povm:
    """``C_ij = K_i^dagger B_j K_i`` as a ``d_A * d_B``-outcome POVM (row-major ``(i, j)``)."""
    ops = K.operators
    if ops.shape[1] != B.dim:
        raise ValidationError(f"Kraus operators act on dimension {ops.shape[1]}, B on {B.dim}")
    kd = np.conj(np.swapaxes(ops, -1, -2))
    grid = np.einsum("iab,jbc,icd->ijad", kd, B.effects, ops)
    return Povm(grid.reshape(-1, B.dim, B.dim))


def ssm_wmeasure(A: Povm, B: Povm, swapped: bool = False) -> WMeasure:
    """W-measure of the Lueders sequential conjunction, ``A`` measured first.

    With ``swapped=True`` ``B`` is measured first; the grid keeps the
    ``(i, j)`` = (A outcome, B outcome) indexing.
    """
    if not swapped:
        C = sequential_conjunction(luders_kraus(A), B)
        W = from_conjunction(A, B, C)
    else:
        d = B.outcomes
        Cba = sequential_conjunction(luders_kraus(B), A).effects.reshape(d, A.outcomes, A.dim, A.dim)
        W = from_conjunction(A, B, np.swapaxes(Cba, 0, 1))
    return WMeasure(W.grid, A, B, "ssm-swapped" if swapped else "ssm")


def ssm_closed_form(a, b) -> np.ndarray:
    """``W_ij = [(1 + w^(i+j) a.b) 1 + (w^i a + w^j b).sigma] / 4`` for unbiased dichotomic qubits."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    grid = np.empty((2, 2, 2, 2), dtype=complex)
    for i in (1, 2):
        for j in (1, 2):
            v = OMEGA**i * a + OMEGA**j * b
            grid[i - 1, j - 1] = ((1 + OMEGA ** (i + j) * (a @ b)) * np.eye(2) + np.einsum("k,kab->ab", v, PAULI)) / 4
    return grid


def is_unbiased_dichotomic_qubit(p: Povm, tol: float = 1e-10) -> bool:
    if p.dim != 2 or p.outcomes != 2:
        return False
    return bool(np.all(np.abs(effect_bloch(p)[:, 0] - 0.5) <= tol))


def ssm_jm_test(A: Povm, B: Povm, swapped: bool = False) -> JmVerdict:
    """Positivity of the SSM W-measure as a joint-measurability test.

    A positive ``W^S`` is itself a joint POVM, so a positive answer is always
    conclusive.  A negative answer is conclusive only for unbiased dichotomic
    qubit pairs; elsewhere the verdict is flagged ``sufficient_only``.
    ``criterion_margin`` is minus the smallest entry eigenvalue.
    """
    W = ssm_wmeasure(A, B, swapped)
    lam = entry_eigenvalues(W)
    margin = float(-lam[..., 0].min())
    guarantee = "iff" if is_unbiased_dichotomic_qubit(A) and is_unbiased_dichotomic_qubit(B) else "sufficient_only"
    jm = margin <= MARGIN_TOL
    neg = float(np.sum(np.abs(lam) - lam) / W.dim)
    return JmVerdict(
        jm,
        margin,
        None,
        "ssm",
        conclusive=jm or guarantee == "iff",
        details={"guarantee": guarantee, "ssm_negativity": neg, "swapped": swapped},
    )


# --- operational quasiprobability -------------------------------------------


@dataclass(frozen=True)
class Quasiprobability:
    """Table ``Q[i, j]`` with ``source`` either ``"operators"`` or ``"statistics"``."""

    table: np.ndarray
    source: str

    @property
    def min_entry(self) -> float:
        return float(self.table.min())

    @property
    def argmin(self) -> tuple[int, int]:
        i, j = np.unravel_index(np.argmin(self.table), self.table.shape)
        return int(i), int(j)

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.table.sum(1), self.table.sum(0)


def quasiprob_from_state(W: WMeasure, rho) -> Quasiprobability:
    """``Q(i, j) = Tr(W_ij rho)``."""
    rho = density_matrix(rho)
    if rho.shape[0] != W.dim:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match W dimension {W.dim}")
    q = np.einsum("ijab,ba->ij", W.grid, rho)
    if np.max(np.abs(q.imag)) > 1e-12:
        raise ValidationError("quasiprobability has an imaginary part; W is not Hermitian")
    return Quasiprobability(q.real, "operators")


def _probabilities(p, name: str, shape) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < -PROB_TOL):
        raise ValidationError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"{name} sums to {p.sum():.12g}, expected 1")
    return p


def quasiprob_from_statistics(p_a, p_b, p_c) -> Quasiprobability:
    """``Q(i, j) = pC(i, j) + (pA(i) - sum_j pC(i, j)) / d + (pB(j) - sum_i pC(i, j)) / d``.

    ``pC`` is the joint statistics of the sequential run, ``pA`` and ``pB``
    those of separate runs of ``A`` and ``B``.
    """
    p_a = np.asarray(p_a, dtype=float)
    d = p_a.shape[0] if p_a.ndim == 1 else -1
    p_a = _probabilities(p_a, "pA", (d,))
    p_b = _probabilities(p_b, "pB", (d,))
    p_c = _probabilities(p_c, "pC", (d, d))
    q = p_c + (p_a - p_c.sum(1))[:, None] / d + (p_b - p_c.sum(0))[None, :] / d
    return Quasiprobability(q, "statistics")


def model_statistics(A: Povm, B: Povm, rho) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(pA, pB, pC)`` predicted for state ``rho`` in the Lueders sequential scenario."""
    rho = density_matrix(rho)
    C = sequential_conjunction(luders_kraus(A), B)
    prob = lambda E: np.einsum("iab,ba->i", E, rho).real  # noqa: E731
    return prob(A.effects), prob(B.effects), prob(C.effects).reshape(A.outcomes, B.outcomes)


def worst_case_state(W: WMeasure) -> np.ndarray:
    """Eigenstate projector of the most negative eigenvalue over all entries."""
    best, rho = np.inf, None
    for i in range(W.d):
        for j in range(W.d):
            w, v = eig_hermitian(W.grid[i, j])
            if w[0] < best:
                best, rho = w[0], np.outer(v[:, 0], v[:, 0].conj())
    return rho


def min_quasiprob_over_states(W: WMeasure, samples: int = 1000, seed: Optional[int] = 0) -> float:
    """Smallest ``Q(i, j)`` over Haar-random pure states."""
    psi = haar_pure_states(samples, W.dim, np.random.default_rng(seed))
    q = np.einsum("sa,ijab,sb->sij", psi.conj(), W.grid, psi).real
    return float(q.min()) if samples else float("inf")
