"""Closed-form joint-measurability criteria for qubit POVM families."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError
from .povm import BlochPovmSpec, trichotomic_entropy
from .wmeasure import DifferentialSet

MARGIN_TOL = 1e-9
_LEN_TOL = 1e-12


@dataclass(frozen=True)
class JmVerdict:
    """Outcome of a joint-measurability test.

    ``criterion_margin <= 0`` (up to tolerance) means jointly measurable.
    ``conclusive`` is False when a negative answer is only a failure of a
    sufficient condition.
    """

    jointly_measurable: bool
    criterion_margin: float
    minimized_negativity: Optional[float] = None
    method: str = ""
    conclusive: bool = True
    details: dict = field(default_factory=dict, compare=False)


def _vec(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValidationError("Bloch vectors must have three components")
    return v


def dichotomic_unbiased_negativity(a, b) -> JmVerdict:
    """Minimized negativity of two unbiased dichotomic qubit POVMs.

    ``N_min = max((|a + b| + |a - b|) / 2 - 1, 0)``; zero exactly on Busch's
    region ``|a + b| + |a - b| <= 2``.
    """
    a, b = _vec(a), _vec(b)
    if np.linalg.norm(a) > 1 + _LEN_TOL or np.linalg.norm(b) > 1 + _LEN_TOL:
        raise DomainError("Bloch vectors must have length at most 1")
    margin = 0.5 * (np.linalg.norm(a + b) + np.linalg.norm(a - b)) - 1.0
    return JmVerdict(bool(margin <= MARGIN_TOL), float(margin), float(max(margin, 0.0)), "closed-dichotomic")


def busch_jm(a, b) -> bool:
    a, b = _vec(a), _vec(b)
    return bool(np.linalg.norm(a + b) + np.linalg.norm(a - b) <= 2.0 + 2 * MARGIN_TOL)


def distinguishability(a0: float, a) -> float:
    """``F = (1/2) sum_{f = +-1} sqrt((1 + f a0)^2 - |a|^2)``."""
    n2 = float(np.dot(a, a))
    return 0.5 * sum(np.sqrt(max((1 + f * a0) ** 2 - n2, 0.0)) for f in (1, -1))


def dichotomic_biased_criterion(a0: float, b0: float, a, b) -> JmVerdict:
    """Biased dichotomic criterion.

    JM iff ``(1 - FA^2 - FB^2)(1 - a0^2/FA^2 - b0^2/FB^2) <= (a.b - a0 b0)^2``;
    the margin is left minus right.  No minimized negativity is reported.
    """
    a, b = _vec(a), _vec(b)
    for x0, x in ((a0, a), (b0, b)):
        if abs(x0) + np.linalg.norm(x) > 1 + _LEN_TOL:
            raise DomainError(f"|x0| + |x| = {abs(x0) + np.linalg.norm(x):.6g} exceeds 1")
    fa, fb = distinguishability(a0, a), distinguishability(b0, b)

    def ratio(x0, f):
        if x0 == 0.0:
            return 0.0
        if f == 0.0:
            raise DomainError("distinguishability vanishes for a biased POVM")
        return x0**2 / f**2

    lhs = (1 - fa**2 - fb**2) * (1 - ratio(a0, fa) - ratio(b0, fb))
    rhs = (np.dot(a, b) - a0 * b0) ** 2
    margin = float(lhs - rhs)
    return JmVerdict(margin <= MARGIN_TOL, margin, None, "closed-biased", details={"F_A": fa, "F_B": fb})


@dataclass(frozen=True)
class FeasibleInterval:
    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


def theta0_feasibility_dichotomic(a, b) -> FeasibleInterval:
    """Window ``2 - |a + b| <= theta0_11 <= |a - b|`` where the lower bound is attained.

    An empty window means some ``theta0_11`` makes every W entry strictly positive.
    """
    a, b = _vec(a), _vec(b)
    return FeasibleInterval(2.0 - float(np.linalg.norm(a + b)), float(np.linalg.norm(a - b)))


def dichotomic_optimal_theta(a, b) -> DifferentialSet:
    """Optimal differential set for unbiased dichotomic qubit POVMs.

    Uses ``theta_vec = 0`` and ``theta0_11 = theta0_22 = t``,
    ``theta0_12 = theta0_21 = 2 - t`` with ``t`` the midpoint of
    ``[2 - |a+b|, |a-b|]``; when that window is empty the same midpoint lies in
    the strict-positivity window instead.
    """
    win = theta0_feasibility_dichotomic(a, b)
    t = 0.5 * (win.lower + win.upper)
    scalars = np.array([[t, 2 - t], [2 - t, t]])
    return DifferentialSet.from_bloch(scalars, np.zeros((2, 2, 3)))


# --- trichotomic -----------------------------------------------------------


def solution_index(i: int, j: int) -> int:
    """``2(i + j)`` reduced to a positive residue mod 3 (1-based indices)."""
    return (2 * (i + j) - 1) % 3 + 1


@dataclass(frozen=True)
class TrichotomicSolution:
    """Minimizing differential operators for two trichotomic qubit POVMs.

    Grids are indexed ``[i - 1, j - 1]``.  ``theta_vectors[i, j]`` equals
    ``phi_mm`` with ``m = 2(i + j) mod 3`` and ``phi_ij = a_i + b_j``.
    """

    theta_vectors: np.ndarray
    theta_scalars: np.ndarray
    phi_vectors: np.ndarray
    split: float

    @property
    def distances(self) -> np.ndarray:
        """``|phi_ij - theta_ij|`` for every cell."""
        return np.linalg.norm(self.phi_vectors - self.theta_vectors, axis=-1)

    @property
    def distance_sum(self) -> float:
        return float(self.distances.sum())

    def pair_sums_ok(self) -> tuple[bool, bool, bool]:
        """The three ``theta0^+ = 1`` window conditions (one per off-diagonal pair)."""
        v = self.distances
        return tuple(bool(v[i, k] + v[k, i] >= 3.0 - 1e-12) for i, k in ((0, 1), (2, 0), (1, 2)))

    def differential_set(self) -> DifferentialSet:
        return DifferentialSet.from_bloch(self.theta_scalars, self.theta_vectors)

    def negativity(self) -> float:
        """Negativity of the W-measure built from this differential set."""
        c = 2.0 - self.theta_scalars
        return float(np.sum(np.maximum(np.abs(c), self.distances)) / 9.0 - 1.0)


def _trichotomic_vectors(spec: BlochPovmSpec) -> np.ndarray:
    if spec.outcomes != 3 or spec.bias != 0.0:
        raise ValidationError("expected an unbiased trichotomic spec")
    return np.asarray(spec.vectors, dtype=float)


def _best_split(v: np.ndarray) -> float:
    # off-diagonal c = 2 - theta0: c12 = c23 = c31 = x, c13 = c32 = c21 = 3 - x
    cyc1 = np.array([v[0, 1], v[1, 2], v[2, 0]])
    cyc2 = np.array([v[0, 2], v[2, 1], v[1, 0]])

    def cost(x):
        return np.sum(np.maximum(abs(x), cyc1)) + np.sum(np.maximum(abs(3 - x), cyc2))

    candidates = np.concatenate([[1.5, 0.0, 3.0], cyc1, -cyc1, 3 - cyc2, 3 + cyc2])
    costs = np.array([cost(x) for x in candidates])
    best = costs.min()
    optimal = candidates[costs <= best + 1e-12]
    lo, hi = optimal.min(), optimal.max()
    # the optimal set is an interval; prefer the symmetric split when it is inside
    return float(np.clip(1.5, lo, hi))


def trichotomic_solution(a_spec: BlochPovmSpec, b_spec: BlochPovmSpec) -> TrichotomicSolution:
    """Solution matrix for the labels as given.

    Diagonal ``theta0 = 2``; the free off-diagonal split of ``theta0^+ = 1`` is
    chosen to minimize the resulting negativity (symmetric ``1/2, 1/2`` when
    that is optimal).
    """
    a = _trichotomic_vectors(a_spec)
    b = _trichotomic_vectors(b_spec)
    phi = a[:, None, :] + b[None, :, :]
    theta = np.empty_like(phi)
    for i in range(1, 4):
        for j in range(1, 4):
            m = solution_index(i, j)
            theta[i - 1, j - 1] = phi[m - 1, m - 1]
    v = np.linalg.norm(phi - theta, axis=-1)
    x = _best_split(v)
    c = np.array([[0.0, x, 3 - x], [3 - x, 0.0, x], [x, 3 - x, 0.0]])
    return TrichotomicSolution(theta, 2.0 - c, phi, x)


def _relabel_spec(spec: BlochPovmSpec, order) -> BlochPovmSpec:
    return BlochPovmSpec(spec.outcomes, spec.vectors[list(order)], spec.bias, spec.mu, spec.phi)


def best_trichotomic_solution(a_spec: BlochPovmSpec, b_spec: BlochPovmSpec):
    """Solution minimizing the closed-form value over relabelings of ``B``.

    The solution-matrix formula depends on how ``B``'s outcomes are numbered
    relative to ``A``'s, while the minimum over all ``Theta`` does not.
    Returns ``(solution, order)`` where ``order[k]`` is the original ``B``
    outcome used as outcome ``k``.
    """
    best = None
    for order in itertools.permutations(range(3)):
        sol = trichotomic_solution(a_spec, _relabel_spec(b_spec, order))
        key = (sol.distance_sum, sol.negativity())
        if best is None or key < best[0]:
            best = (key, sol, order)
    return best[1], best[2]


def trichotomic_witness(a_spec: BlochPovmSpec, b_spec: BlochPovmSpec) -> DifferentialSet:
    """Differential set of the best solution, expressed in the original labels of ``B``."""
    sol, order = best_trichotomic_solution(a_spec, b_spec)
    grid = np.empty_like(sol.differential_set().grid)
    grid[:, list(order)] = sol.differential_set().grid
    return DifferentialSet(grid)


def trichotomic_negativity(a_spec: BlochPovmSpec, b_spec: BlochPovmSpec) -> JmVerdict:
    """``N_min = max(sum_ij |a_i + b_j - theta_ij| / 9 - 1, 0)`` at the best labeling."""
    sol, order = best_trichotomic_solution(a_spec, b_spec)
    margin = sol.distance_sum / 9.0 - 1.0
    return JmVerdict(
        margin <= MARGIN_TOL,
        float(margin),
        float(max(margin, 0.0)),
        "closed-trichotomic",
        details={"labeling": list(order), "split": sol.split, "distance_sum": sol.distance_sum},
    )


def mu_threshold(phi: float) -> float:
    """Largest equilateral sharpness that is jointly measurable at relative angle ``phi``.

    ``sqrt(3) / (sin(phi/2) + sqrt(3) cos(phi/2))`` on ``[0, 2 pi / 3]``,
    continued with period ``2 pi / 3`` and capped at 1.
    """
    psi = float(np.mod(phi, 2 * np.pi / 3))
    value = np.sqrt(3) / (np.sin(psi / 2) + np.sqrt(3) * np.cos(psi / 2))
    return float(min(value, 1.0))


def r_threshold(phi: float) -> float:
    """Unsharpness entropy (nats) of the trichotomic POVM at ``mu_threshold(phi)``."""
    return trichotomic_entropy(mu_threshold(phi))
