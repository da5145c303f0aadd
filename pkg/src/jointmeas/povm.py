"""POVMs: representation, validation, qubit constructors and unsharpness."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError
from .operators import PAULI, PSD_CLAMP, as_hermitian, eig_hermitian, eigvalsh

POVM_TOL = 1e-10
PVM_TOL = 1e-9
OMEGA = -1.0


@dataclass(frozen=True)
class BlochPovmSpec:
    """Qubit POVM family parameters.

    ``vectors[i]`` is the Bloch vector carried by effect ``i``.  For a
    dichotomic POVM these are ``(-a, +a)`` (outcome sign ``omega**i`` with
    ``omega = -1``) and ``bias`` is ``a0``; for trichotomic ones the three
    vectors sum to zero and ``mu``/``phi`` are set when the triangle is
    equilateral.
    """

    outcomes: int
    vectors: np.ndarray
    bias: float = 0.0
    mu: Optional[float] = None
    phi: Optional[float] = None

    @property
    def axis(self) -> np.ndarray:
        """Shared Bloch vector ``a`` of a dichotomic POVM."""
        return self.vectors[-1]

    @property
    def equilateral(self) -> bool:
        if self.outcomes != 3:
            return False
        lengths = np.linalg.norm(self.vectors, axis=1)
        return bool(np.allclose(lengths, lengths[0], atol=1e-9) and np.allclose(self.vectors.sum(0), 0, atol=1e-9))


@dataclass(frozen=True)
class Povm:
    """Ordered list of effects, stored as an array of shape ``(d, D, D)``.

    Construction only checks shapes and hermiticity; use :func:`validate` to
    check positivity and completeness.
    """

    effects: np.ndarray
    spec: Optional[BlochPovmSpec] = field(default=None, compare=False)

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=complex)
        if effects.ndim != 3 or effects.shape[1] != effects.shape[2] or effects.shape[0] == 0:
            raise ValidationError(f"effects must have shape (d, D, D), got {effects.shape}")
        effects = np.array([as_hermitian(e) for e in effects])
        effects.setflags(write=False)
        object.__setattr__(self, "effects", effects)

    @property
    def outcomes(self) -> int:
        return self.effects.shape[0]

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    def __len__(self) -> int:
        return self.outcomes

    def __getitem__(self, i) -> np.ndarray:
        return self.effects[i]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    worst_eigenvalue: float
    completeness_residual: float


def validate(p: Povm, tol: float = POVM_TOL) -> ValidationReport:
    worst = min(eigvalsh(e)[0] for e in p.effects)
    residual = float(np.max(np.abs(p.effects.sum(0) - np.eye(p.dim))))
    return ValidationReport(worst >= -tol and residual <= tol, float(worst), residual)


def check_valid(p: Povm, tol: float = POVM_TOL) -> None:
    report = validate(p, tol)
    if not report.ok:
        raise ValidationError(
            f"not a valid POVM: worst eigenvalue {report.worst_eigenvalue:.3e}, "
            f"completeness residual {report.completeness_residual:.3e}"
        )


def qubit_effect(scalar: float, vector) -> np.ndarray:
    """``scalar * 1 + vector . sigma`` on a qubit."""
    return scalar * np.eye(2) + np.einsum("k,kab->ab", np.asarray(vector, float), PAULI)


def dichotomic_from_spec(a0: float, a) -> Povm:
    """Biased two-outcome qubit POVM ``A_i = [(1 + w^i a0) 1 + w^i a.sigma] / 2``, ``w = -1``.

    Outcome 1 carries ``-a`` and outcome 2 carries ``+a``.  Setting ``a0 = 0``
    gives the unbiased family.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise ValidationError("Bloch vector must have three components")
    if abs(a0) + np.linalg.norm(a) > 1.0 + 1e-12:
        raise DomainError(f"|a0| + |a| = {abs(a0) + np.linalg.norm(a):.6g} exceeds 1; effects would not be positive")
    effects = [qubit_effect((1 + OMEGA**i * a0) / 2, OMEGA**i * a / 2) for i in (1, 2)]
    spec = BlochPovmSpec(2, np.array([-a, a]), bias=float(a0))
    return Povm(np.array(effects), spec)


def _plane_axes(plane):
    if plane is None:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    e1, e2 = (np.asarray(v, dtype=float) for v in plane)
    if not (np.isclose(e1 @ e1, 1) and np.isclose(e2 @ e2, 1) and abs(e1 @ e2) < 1e-9):
        raise ValidationError("plane must be an orthonormal pair of 3-vectors")
    return e1, e2


def triangle_vectors(mu: float, phi: float = 0.0, plane=None) -> np.ndarray:
    """Bloch vectors ``mu * u(phi + 2 pi k / 3)``, ``k = 0, 1, 2``, in ``plane``."""
    e1, e2 = _plane_axes(plane)
    angles = phi + 2 * np.pi * np.arange(3) / 3
    return mu * (np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2))


def unbiased_qubit_povm(vectors) -> Povm:
    """``A_i = (1 + a_i . sigma) / d`` for Bloch vectors summing to zero."""
    vectors = np.asarray(vectors, dtype=float)
    d = len(vectors)
    if vectors.shape != (d, 3) or d < 2:
        raise ValidationError("expected a (d, 3) array of Bloch vectors with d >= 2")
    if np.max(np.abs(vectors.sum(0))) > 1e-9:
        raise DomainError("Bloch vectors of an unbiased POVM must sum to zero")
    if np.max(np.linalg.norm(vectors, axis=1)) > 1.0 + 1e-12:
        raise DomainError("Bloch vectors must have length at most 1")
    effects = [qubit_effect(1 / d, v / d) for v in vectors[:-1]]
    effects.append(np.eye(2) - sum(effects))
    return Povm(np.array(effects), BlochPovmSpec(d, vectors))


def trichotomic_from_spec(mu: float, phi: float = 0.0, plane=None) -> Povm:
    """Equilateral three-outcome qubit POVM ``A_i = (1 + a_i . sigma) / 3``."""
    if not 0.0 <= mu <= 1.0:
        raise DomainError(f"sharpness mu must lie in [0, 1], got {mu}")
    vectors = triangle_vectors(mu, phi, plane)
    p = unbiased_qubit_povm(vectors)
    return Povm(p.effects, BlochPovmSpec(3, vectors, mu=float(mu), phi=float(phi)))


def _xlogx(w: np.ndarray) -> np.ndarray:
    w = np.where(w < 0, 0.0, w)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out


def unsharpness_entropy(p: Povm) -> float:
    """``(1/D) Tr(-sum_i A_i ln A_i)`` in nats, with ``0 ln 0 = 0``."""
    check_valid(p)
    total = 0.0
    for e in p.effects:
        w = eigvalsh(e)
        if w[0] < -PSD_CLAMP:
            raise ValidationError(f"effect eigenvalue {w[0]:.3e} is negative")
        total -= np.sum(_xlogx(w))
    return float(total / p.dim)


def dichotomic_entropy(mu: float) -> float:
    """Unsharpness of an unbiased dichotomic POVM with ``|a| = mu``."""
    lam = np.array([(1 + mu) / 2, (1 - mu) / 2])
    return float(-np.sum(_xlogx(lam)))


def trichotomic_entropy(mu: float) -> float:
    """Unsharpness of an unbiased trichotomic POVM with ``|a_i| = mu``."""
    lam = np.array([(1 + mu) / 3, (1 - mu) / 3])
    return float(-1.5 * np.sum(_xlogx(lam)))


def is_pvm(p: Povm, tol: float = PVM_TOL) -> bool:
    return all(np.max(np.abs(e @ e - e)) <= tol for e in p.effects)


def effect_bloch(p: Povm) -> np.ndarray:
    """Qubit effects as rows ``(e0, ex, ey, ez)`` with ``E = e0 1 + e . sigma``."""
    if p.dim != 2:
        raise ValidationError("Bloch rows are only defined for qubit POVMs")
    coeffs = np.einsum("kab,iba->ik", np.concatenate([np.eye(2)[None], PAULI]), p.effects).real / 2
    return coeffs


def relabel(p: Povm, order) -> Povm:
    """POVM with outcome ``k`` taken from outcome ``order[k]`` of ``p``."""
    order = list(order)
    spec = p.spec
    if spec is not None:
        spec = BlochPovmSpec(spec.outcomes, spec.vectors[order], spec.bias, spec.mu, spec.phi)
    return Povm(p.effects[order], spec)


def random_povm(outcomes: int, dim: int, rng: np.random.Generator) -> Povm:
    """Random full-rank POVM ``A_i = S^(-1/2) G_i S^(-1/2)`` from Wishart draws ``G_i``."""
    z = rng.normal(size=(outcomes, dim, dim)) + 1j * rng.normal(size=(outcomes, dim, dim))
    g = z @ np.conj(np.swapaxes(z, -1, -2))
    w, v = eig_hermitian(g.sum(0))
    s_inv = (v / np.sqrt(w)) @ v.conj().T
    return Povm(np.array([s_inv @ gi @ s_inv for gi in g]))


def mix_with_noise(p: Povm, eta: float) -> Povm:
    """``eta * A_i + (1 - eta) * 1 / d``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {eta}")
    noise = np.broadcast_to(np.eye(p.dim) / p.outcomes, p.effects.shape)
    return Povm(eta * p.effects + (1 - eta) * noise)


# --- states ----------------------------------------------------------------


def density_matrix(matrix, tol: float = POVM_TOL) -> np.ndarray:
    """Validate a density matrix (PSD, unit trace) and return it."""
    rho = as_hermitian(matrix)
    w = eigvalsh(rho)
    if w[0] < -tol:
        raise ValidationError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    if abs(np.trace(rho).real - 1) > tol:
        raise ValidationError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def haar_pure_states(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random pure state vectors, shape ``(count, dim)``."""
    z = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def eigenstate_projector(matrix, index: int = 0) -> np.ndarray:
    """Projector onto the ``index``-th eigenvector (ascending eigenvalues)."""
    _, v = eig_hermitian(matrix)
    return np.outer(v[:, index], v[:, index].conj())
