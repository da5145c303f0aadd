"""Numerical minimization of W-measure negativity over differential operators.

The free parameters are the Bloch coefficients (normalization ``d**2``) of
the upper-left ``(d-1) x (d-1)`` block of ``Theta``; the last row and column
are solved from the row/column constraints, so every evaluated ``Theta`` is
feasible exactly.  The objective is convex but only piecewise smooth, so a
Nelder-Mead simplex search with restarts is used instead of gradients.

:func:`joint_povm_search` is an independent check: it looks for a joint POVM
directly, as squared factors ``J_ij = X_ij X_ij^dagger`` fitted to the
marginals by nonlinear least squares.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import ValidationError
from .operators import gell_mann_basis, operator_sqrt
from .povm import Povm, check_valid
from .wmeasure import DifferentialSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    seed: int = 0
    restarts: int = 8
    max_evals: int = 20000
    xtol: float = 1e-9
    ftol: float = 1e-14
    jm_tolerance: float = 1e-7
    initial_step: float = 0.5
    warm_start: bool = True
    smoothing: bool = True
    agreements: int = 3
    polish_evals: int = 4000
    search_restarts: int = 6
    search_tolerance: float = 1e-7
    penalty_weight: float = 1e3

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown optimizer options: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --- Nelder-Mead -------------------------------------------------------------


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    step: float,
    *,
    xtol: float = 1e-9,
    ftol: float = 1e-14,
    max_evals: int = 20000,
    f_floor: float = -np.inf,
    directions: Optional[np.ndarray] = None,
) -> SimplexResult:
    """Adaptive Nelder-Mead (dimension-dependent coefficients).

    Stops when the simplex diameter falls below ``xtol``, when all vertex
    values agree to ``ftol`` (flat region), when the best value reaches
    ``f_floor``, or after ``max_evals`` evaluations (``converged=False``).
    The initial simplex spans ``x0 + step * directions[k]`` (coordinate axes
    by default).
    """
    n = x0.size
    if directions is None:
        directions = np.eye(n)
    alpha, gamma = 1.0, 1.0 + 2.0 / n
    rho, sigma = 0.75 - 1.0 / (2 * n), 1.0 - 1.0 / n
    sim = np.vstack([x0, x0 + step * directions])
    fs = np.array([f(x) for x in sim])
    evals = n + 1
    converged = False
    while evals < max_evals:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[0] <= f_floor:
            converged = True
            break
        if np.max(np.abs(sim[1:] - sim[0])) <= xtol or fs[-1] - fs[0] <= ftol:
            converged = True
            break
        centroid = sim[:-1].mean(0)
        xr = centroid + alpha * (centroid - sim[-1])
        fr = f(xr)
        evals += 1
        if fr < fs[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            evals += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (sim[-1] - centroid)
            fc = f(xc)
            evals += 1
            if fc < min(fr, fs[-1]):
                sim[-1], fs[-1] = xc, fc
            else:
                sim[1:] = sim[0] + sigma * (sim[1:] - sim[0])
                fs[1:] = [f(x) for x in sim[1:]]
                evals += n
    best = int(np.argmin(fs))
    return SimplexResult(sim[best].copy(), float(fs[best]), evals, converged)


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def restarted_search(
    f, x0, step, config: OptimizerConfig, max_evals: int, rng: np.random.Generator, f_floor: float = -np.inf
) -> SimplexResult:
    """Repeat Nelder-Mead from the incumbent until a fresh simplex stops improving.

    Restarted simplices are randomly oriented; a stalled simplex tends to
    stall again along the same axes on a ridge of the objective.
    """
    x, fx = np.asarray(x0, dtype=float), float(f(x0))
    evals, converged, stalls = 1, False, 0
    directions = None
    while evals < max_evals:
        res = nelder_mead(
            f, x, step, xtol=config.xtol, ftol=config.ftol, max_evals=max_evals - evals, f_floor=f_floor,
            directions=directions,
        )
        evals += res.evals
        improved = res.fun < fx - config.ftol
        if res.fun < fx:
            x, fx = res.x, res.fun
        if fx <= f_floor:
            converged = True
            break
        stalls = 0 if improved else stalls + 1
        if stalls >= 2:
            converged = True
            break
        step = max(step * 0.5, 1e3 * config.xtol)
        directions = random_rotation(x.size, rng)
    return SimplexResult(x, fx, evals, converged)


# --- objective ---------------------------------------------------------------


class NegativityObjective:
    """``N(Theta)`` as a function of the free Bloch coefficients."""

    def __init__(self, A: Povm, B: Povm):
        if A.outcomes != B.outcomes or A.dim != B.dim:
            raise ValidationError("POVMs must share outcome count and Hilbert dimension")
        check_valid(A)
        check_valid(B)
        self.A, self.B = A, B
        self.d, self.dim = A.outcomes, A.dim
        self.basis = gell_mann_basis(self.dim)
        self.n_coeffs = self.dim**2
        # Bloch coefficients of X_ij = (A_i + B_j) / d, normalization d**2
        coeff = lambda E: np.einsum("kab,iba->ik", self.basis.elements, E).real / self.dim  # noqa: E731
        self.x_coeffs = (coeff(A.effects)[:, None] + coeff(B.effects)[None, :]) / self.d
        self.target = np.zeros(self.n_coeffs)
        self.target[0] = self.d

    @property
    def n_params(self) -> int:
        return (self.d - 1) ** 2 * self.n_coeffs

    def full_coefficients(self, x: np.ndarray) -> np.ndarray:
        """All ``d x d`` Bloch coefficient vectors of ``Theta`` (normalization ``d**2``)."""
        n = self.d - 1
        free = np.asarray(x, dtype=float).reshape(n, n, self.n_coeffs)
        full = np.empty((self.d, self.d, self.n_coeffs))
        full[:n, :n] = free
        full[:n, n] = self.target - free.sum(1)
        full[n, :] = self.target - full[:n, :].sum(0)
        return full

    def uniform_start(self) -> np.ndarray:
        x = np.zeros((self.d - 1, self.d - 1, self.n_coeffs))
        x[..., 0] = 1.0
        return x.ravel()

    def parameters_of(self, theta: DifferentialSet) -> np.ndarray:
        coeffs = np.einsum("kab,ijba->ijk", self.basis.elements, theta.grid).real * self.d**2 / self.dim
        return coeffs[: self.d - 1, : self.d - 1].ravel()

    def w_coefficients(self, x: np.ndarray) -> np.ndarray:
        """Coefficients ``w`` with ``W_ij = sum_k w_ijk gamma_k`` (``gamma_0 = 1``)."""
        return self.x_coeffs - self.full_coefficients(x) / self.d**2

    def eigenvalues(self, x: np.ndarray) -> np.ndarray:
        w = self.w_coefficients(x)
        if self.dim == 2:
            r = np.linalg.norm(w[..., 1:], axis=-1)
            return np.stack([w[..., 0] - r, w[..., 0] + r], axis=-1)
        mats = np.einsum("ijk,kab->ijab", w, self.basis.elements)
        return np.linalg.eigvalsh(mats)

    def __call__(self, x: np.ndarray) -> float:
        lam = self.eigenvalues(x)
        return float(np.sum(np.abs(lam) - lam) / self.dim)

    def min_eigenvalue(self, x: np.ndarray) -> float:
        return float(np.min(self.eigenvalues(x)))

    def smoothed(self, x: np.ndarray, eps: float) -> tuple[float, np.ndarray]:
        """Value and gradient of ``(1/D) sum (sqrt(lam^2 + eps^2) - lam)``, an upper bound on ``N``."""
        w = self.w_coefficients(x)
        mats = np.einsum("ijk,kab->ijab", w, self.basis.elements)
        lam, vec = np.linalg.eigh(mats)
        root = np.sqrt(lam**2 + eps**2)
        value = float(np.sum(root - lam) / self.dim)
        dlam = (lam / root - 1.0) / self.dim
        g_mats = np.einsum("ijak,ijk,ijbk->ijab", vec, dlam, vec.conj())
        g_w = np.einsum("ijab,kba->ijk", g_mats, self.basis.elements).real
        g_full = -g_w / self.d**2
        n = self.d - 1
        grad = g_full[:n, :n] - g_full[:n, n:] - g_full[n:, :n] + g_full[n, n]
        return value, grad.ravel()

    def differential_set(self, x: np.ndarray) -> DifferentialSet:
        full = self.full_coefficients(x)
        grid = np.einsum("ijk,kab->ijab", full, self.basis.elements) / self.d**2
        return DifferentialSet(grid)


@dataclass
class OptimizationResult:
    n_min: float
    theta_star: DifferentialSet
    evaluations: int
    converged: bool
    restarts_used: int
    jm_tolerance: float = 1e-7
    min_eigenvalue: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    @property
    def jointly_measurable(self) -> bool:
        return self.n_min <= self.jm_tolerance


SMOOTHING_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10)


def smoothed_start(objective: NegativityObjective, x0: np.ndarray, max_iter: int = 500) -> np.ndarray:
    """Minimize smoothed negativities along a decreasing ``eps`` schedule with L-BFGS."""
    x = np.asarray(x0, dtype=float)
    for eps in SMOOTHING_SCHEDULE:
        res = minimize(objective.smoothed, x, args=(eps,), jac=True, method="L-BFGS-B", options={"maxiter": max_iter})
        if np.all(np.isfinite(res.x)):
            x = res.x
    return x


def warm_starts(objective: NegativityObjective, A: Povm, B: Povm) -> list[np.ndarray]:
    """Closed-form solution structures for the qubit families, when they apply."""
    from . import criteria

    sa, sb = A.spec, B.spec
    if objective.dim != 2 or sa is None or sb is None or abs(sa.bias) > 1e-12 or abs(sb.bias) > 1e-12:
        return []
    if objective.d == 2:
        theta = criteria.dichotomic_optimal_theta(sa.axis, sb.axis)
    elif objective.d == 3:
        theta = criteria.trichotomic_witness(sa, sb)
    else:
        return []
    return [objective.parameters_of(theta)]


def minimize_negativity(A: Povm, B: Povm, config: Optional[OptimizerConfig] = None) -> OptimizationResult:
    """Minimize ``N(Theta)`` over all feasible differential sets.

    Starts: the uniform ``Theta = 1/d**2``, the closed-form structure for
    qubit families (``config.warm_start``), then seeded random perturbations.
    Stops early once the negativity hits zero or ``config.agreements``
    starts agree on the minimum.  When the minimum is within
    ``jm_tolerance`` of zero, a polishing pass maximizes the smallest entry
    eigenvalue so that the returned ``Theta`` gives a positive W whenever one
    exists nearby.
    """
    config = config or OptimizerConfig()
    objective = NegativityObjective(A, B)
    rng = np.random.default_rng(config.seed)
    starts = [objective.uniform_start()]
    if config.warm_start:
        starts += warm_starts(objective, A, B)
    if config.smoothing:
        starts.append(smoothed_start(objective, starts[0]))

    best: Optional[SimplexResult] = None
    total_evals, used, agree = 0, 0, 0
    history = []
    converged_any = False
    for k in range(max(config.restarts, len(starts))):
        if k < len(starts):
            x0 = starts[k]
        else:
            center = best.x if best is not None else starts[0]
            x0 = center + rng.normal(scale=config.initial_step, size=objective.n_params)
        res = restarted_search(objective, x0, config.initial_step, config, config.max_evals, rng, f_floor=0.0)
        used += 1
        total_evals += res.evals
        history.append(res.fun)
        if best is None or res.fun < best.fun - 1e-8:
            best, agree = res, 1
            converged_any = res.converged
        else:
            agree += 1
            converged_any |= res.converged
            if res.fun < best.fun:
                best = res
        if best.fun == 0.0 or agree >= config.agreements:
            break

    x = best.x
    if best.fun <= config.jm_tolerance:
        polish = nelder_mead(
            lambda y: -objective.min_eigenvalue(y),
            x,
            config.initial_step * 0.1,
            xtol=config.xtol,
            ftol=1e-15,
            max_evals=config.polish_evals,
            f_floor=-1e-6,
        )
        total_evals += polish.evals
        if objective(polish.x) <= objective(x):
            x = polish.x
    n_min = objective(x)
    theta = objective.differential_set(x)
    result = OptimizationResult(
        n_min=n_min,
        theta_star=theta,
        evaluations=total_evals,
        converged=bool(converged_any or agree >= 2 or best.fun == 0.0),
        restarts_used=used,
        jm_tolerance=config.jm_tolerance,
        min_eigenvalue=objective.min_eigenvalue(x),
        history=history,
    )
    log.debug("minimize_negativity: n_min=%.3e after %d starts, %d evaluations", n_min, used, total_evals)
    return result


# --- independent oracle: direct joint-POVM search ---------------------------


@dataclass
class SearchFailure:
    penalty: float
    residual: float
    evaluations: int

    def __bool__(self) -> bool:
        return False


def _herm_parts(m: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(m.shape[-1])
    upper = m[..., iu[0], iu[1]]
    return np.concatenate([upper.real.ravel(), upper.imag.ravel()])


def joint_povm_search(A: Povm, B: Povm, config: Optional[OptimizerConfig] = None) -> Union[Povm, SearchFailure]:
    """Search directly for a joint POVM of ``A`` and ``B``.

    ``J_ij = X_ij X_ij^dagger`` is positive by construction; the marginal
    residuals are driven to zero by least squares on
    ``penalty_weight * sum(residual**2)``.  Success requires the largest
    marginal residual below ``config.search_tolerance``.
    """
    config = config or OptimizerConfig()
    if A.outcomes != B.outcomes or A.dim != B.dim:
        raise ValidationError("POVMs must share outcome count and Hilbert dimension")
    check_valid(A)
    check_valid(B)
    d, dim = A.outcomes, A.dim
    weight = np.sqrt(config.penalty_weight)
    rng = np.random.default_rng(config.seed + 7919)
    shape = (d, d, dim, dim)
    size = int(np.prod(shape))

    def unpack(p):
        return (p[:size] + 1j * p[size:]).reshape(shape)

    def joint(p):
        X = unpack(p)
        return X @ np.conj(np.swapaxes(X, -1, -2))

    def residuals(p):
        J = joint(p)
        return weight * np.concatenate([_herm_parts(J.sum(1) - A.effects), _herm_parts(J.sum(0) - B.effects)])

    def pack(X):
        X = X.reshape(-1)
        return np.concatenate([X.real, X.imag])

    # sequential (Lueders) conjunction reproduces A exactly: a natural start
    roots = [operator_sqrt(a) for a in A.effects]
    seq = np.array([[roots[i] @ B.effects[j] @ roots[i] for j in range(d)] for i in range(d)])
    starts = [pack(np.array([[operator_sqrt(seq[i, j]) for j in range(d)] for i in range(d)]))]
    for _ in range(config.search_restarts - 1):
        starts.append(pack(rng.normal(size=shape) + 1j * rng.normal(size=shape)) / d)

    best_p, best_cost, evals = None, np.inf, 0
    for p0 in starts:
        res = least_squares(residuals, p0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        evals += res.nfev
        # refinement pass from the converged point
        res = least_squares(residuals, res.x, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500)
        evals += res.nfev
        if res.cost < best_cost:
            best_p, best_cost = res.x, res.cost
        if np.max(np.abs(residuals(best_p))) / weight < config.search_tolerance:
            break
    residual = float(np.max(np.abs(residuals(best_p))) / weight)
    if residual < config.search_tolerance:
        J = joint(best_p)
        return Povm(J.reshape(d * d, dim, dim))
    return SearchFailure(float(2 * best_cost), residual, evals)


def is_search_success(result) -> bool:
    return isinstance(result, Povm)
