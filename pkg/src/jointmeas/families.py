"""Parameterized qubit POVM pairs, verdict dispatch and negativity scans.

Families (angles in radians, entropies in nats):

* ``dichotomic-unbiased``: sharpnesses ``mu_a``, ``mu_b`` (or entropies
  ``R_a``, ``R_b``) and relative ``angle`` of the Bloch vectors (default
  orthogonal).
* ``dichotomic-biased``: common bias ``x`` (``a0 = b0 = x``), common
  sharpness ``mu`` (or entropy ``R``) and relative ``angle``.
* ``trichotomic``: equilateral coplanar triangles with sharpness ``mu`` (or
  ``R``) and relative rotation ``phi``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import criteria
from .errors import DomainError, ValidationError
from .optimizer import OptimizerConfig, minimize_negativity
from .povm import (
    BlochPovmSpec,
    Povm,
    check_valid,
    dichotomic_entropy,
    dichotomic_from_spec,
    effect_bloch,
    trichotomic_entropy,
    trichotomic_from_spec,
)
from .ssm import ssm_jm_test

FAMILIES = ("dichotomic-unbiased", "dichotomic-biased", "trichotomic")
METHODS = ("auto", "closed", "optimizer", "ssm")


# --- unsharpness inversions -------------------------------------------------


def biased_entropy(mu: float, x: float) -> float:
    """Unsharpness of a dichotomic qubit POVM with bias ``x`` and ``|a| = mu``."""
    lam = np.array([(1 - x + mu) / 2, (1 - x - mu) / 2, (1 + x + mu) / 2, (1 + x - mu) / 2])
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)) / 2)


def _invert(func, value: float, upper: float, name: str) -> float:
    lo, hi = func(upper), func(0.0)
    if not lo - 1e-12 <= value <= hi + 1e-12:
        raise DomainError(f"{name} = {value} outside the attainable range [{lo:.6g}, {hi:.6g}]; no such POVM exists")
    if value >= hi:
        return 0.0
    if value <= lo:
        return upper
    return float(brentq(lambda m: func(m) - value, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def mu_from_dichotomic_entropy(r: float) -> float:
    return _invert(dichotomic_entropy, r, 1.0, "R")


def mu_from_trichotomic_entropy(r: float) -> float:
    return _invert(trichotomic_entropy, r, 1.0, "R")


def mu_from_biased_entropy(r: float, x: float) -> float:
    if not 0.0 <= abs(x) <= 1.0:
        raise DomainError(f"bias x must lie in [-1, 1], got {x}")
    return _invert(lambda m: biased_entropy(m, abs(x)), r, 1.0 - abs(x), "R")


# --- pair builders -----------------------------------------------------------


def _axis(angle: float) -> np.ndarray:
    """Unit vector in the x-z plane at ``angle`` from z."""
    return np.array([np.sin(angle), 0.0, np.cos(angle)])


def _sharpness(params: dict, mu_key: str, r_key: str, invert) -> float:
    if mu_key in params and r_key in params:
        raise ValidationError(f"give either {mu_key} or {r_key}, not both")
    if mu_key in params:
        return float(params[mu_key])
    if r_key in params:
        return invert(float(params[r_key]))
    raise ValidationError(f"missing parameter {mu_key} (or {r_key})")


_KNOWN = {
    "dichotomic-unbiased": {"mu_a", "mu_b", "R_a", "R_b", "angle"},
    "dichotomic-biased": {"x", "mu", "R", "angle"},
    "trichotomic": {"mu", "R", "phi", "mu_b", "R_b"},
}


def build_pair(family: str, params: dict) -> tuple[Povm, Povm]:
    """Construct ``(A, B)`` for a named family from a parameter dict."""
    if family not in _KNOWN:
        raise ValidationError(f"unknown family {family!r}; choose from {FAMILIES}")
    unknown = set(params) - _KNOWN[family]
    if unknown:
        raise ValidationError(f"unknown parameters for {family}: {sorted(unknown)}")
    if family == "dichotomic-unbiased":
        mu_a = _sharpness(params, "mu_a", "R_a", mu_from_dichotomic_entropy)
        mu_b = _sharpness(params, "mu_b", "R_b", mu_from_dichotomic_entropy)
        angle = float(params.get("angle", np.pi / 2))
        return dichotomic_from_spec(0.0, mu_a * _axis(0.0)), dichotomic_from_spec(0.0, mu_b * _axis(angle))
    if family == "dichotomic-biased":
        x = float(params.get("x", 0.0))
        mu = _sharpness(params, "mu", "R", lambda r: mu_from_biased_entropy(r, x))
        angle = float(params.get("angle", np.pi / 2))
        return dichotomic_from_spec(x, mu * _axis(0.0)), dichotomic_from_spec(x, mu * _axis(angle))
    mu = _sharpness(params, "mu", "R", mu_from_trichotomic_entropy)
    sub = {k[:-2]: v for k, v in params.items() if k.endswith("_b")}
    mu_b = _sharpness(sub, "mu", "R", mu_from_trichotomic_entropy) if sub else mu
    phi = float(params.get("phi", 0.0))
    return trichotomic_from_spec(mu, 0.0), trichotomic_from_spec(mu_b, phi)


# --- recognizing covered families -------------------------------------------


def infer_spec(p: Povm, tol: float = 1e-10) -> Optional[BlochPovmSpec]:
    """Bloch description of a qubit POVM with 2 outcomes, or 3 unbiased ones."""
    if p.spec is not None:
        return p.spec
    if p.dim != 2 or p.outcomes not in (2, 3):
        return None
    rows = effect_bloch(p)
    if p.outcomes == 2:
        a = 2 * rows[1, 1:]
        return BlochPovmSpec(2, np.array([-a, a]), bias=float(2 * rows[1, 0] - 1))
    if np.max(np.abs(rows[:, 0] - 1 / 3)) > tol:
        return None
    return BlochPovmSpec(3, 3 * rows[:, 1:])


def _coplanar_equilateral(sa: BlochPovmSpec, sb: BlochPovmSpec, tol: float = 1e-9) -> bool:
    if not (sa.equilateral and sb.equilateral):
        return False
    la, lb = np.linalg.norm(sa.vectors[0]), np.linalg.norm(sb.vectors[0])
    if abs(la - lb) > tol:
        return False
    if la < tol:
        return True
    na = np.cross(sa.vectors[0], sa.vectors[1])
    nb = np.cross(sb.vectors[0], sb.vectors[1])
    return bool(np.linalg.norm(np.cross(na / np.linalg.norm(na), nb / np.linalg.norm(nb))) < 1e-7)


def closed_form_kind(A: Povm, B: Povm) -> Optional[str]:
    """Which closed form covers the pair, if any."""
    if A.dim != 2 or B.dim != 2 or A.outcomes != B.outcomes:
        return None
    sa, sb = infer_spec(A), infer_spec(B)
    if sa is None or sb is None:
        return None
    if A.outcomes == 2:
        return "dichotomic" if abs(sa.bias) <= 1e-12 and abs(sb.bias) <= 1e-12 else "biased"
    if A.outcomes == 3 and _coplanar_equilateral(sa, sb):
        return "trichotomic"
    return None


def closed_form_verdict(A: Povm, B: Povm) -> criteria.JmVerdict:
    kind = closed_form_kind(A, B)
    sa, sb = infer_spec(A), infer_spec(B)
    if kind == "dichotomic":
        return criteria.dichotomic_unbiased_negativity(sa.axis, sb.axis)
    if kind == "biased":
        return criteria.dichotomic_biased_criterion(sa.bias, sb.bias, sa.axis, sb.axis)
    if kind == "trichotomic":
        return criteria.trichotomic_negativity(sa, sb)
    raise ValidationError("no closed form covers this pair (needs qubit dichotomic or coplanar equilateral trichotomic)")


def _with_specs(A: Povm, B: Povm) -> tuple[Povm, Povm]:
    # attach inferred specs so the optimizer can use closed-form warm starts
    sa, sb = infer_spec(A), infer_spec(B)
    return Povm(A.effects, A.spec or sa), Povm(B.effects, B.spec or sb)


@dataclass(frozen=True)
class Assessment:
    verdict: criteria.JmVerdict
    method: str
    converged: bool = True
    evaluations: int = 0


def assess(A: Povm, B: Povm, method: str = "auto", config: Optional[OptimizerConfig] = None) -> Assessment:
    """Run one joint-measurability test; ``auto`` prefers a closed form."""
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {METHODS}")
    check_valid(A)
    check_valid(B)
    if method == "auto":
        method = "closed" if closed_form_kind(A, B) is not None else "optimizer"
    if method == "closed":
        return Assessment(closed_form_verdict(A, B), "closed")
    if method == "ssm":
        return Assessment(ssm_jm_test(A, B), "ssm")
    config = config or OptimizerConfig()
    res = minimize_negativity(*_with_specs(A, B), config)
    verdict = criteria.JmVerdict(
        res.jointly_measurable,
        float(res.n_min - config.jm_tolerance),
        float(res.n_min),
        "optimizer",
        conclusive=res.converged,
        details={"restarts_used": res.restarts_used, "min_eigenvalue": res.min_eigenvalue},
    )
    return Assessment(verdict, "optimizer", res.converged, res.evaluations)


# --- scans -------------------------------------------------------------------


def negativity_landscape(
    family: str,
    axes: dict,
    fixed: Optional[dict] = None,
    config: Optional[OptimizerConfig] = None,
    method: str = "optimizer",
) -> list[dict]:
    """Evaluate a family on the Cartesian grid of ``axes``.

    ``axes`` maps parameter names to sequences of values (one or two
    entries); ``fixed`` supplies the remaining parameters.  Rows come out in
    row-major order of the axes as given, each with the parameter values,
    ``jm``, ``margin`` and ``n_min`` (None when the method gives none).
    Grid points where no POVM exists get ``jm = None``.
    """
    fixed = dict(fixed or {})
    names = list(axes)
    if not 1 <= len(names) <= 2:
        raise ValidationError("a landscape needs one or two axes")
    rows = []
    for values in itertools.product(*(list(axes[n]) for n in names)):
        params = {**fixed, **dict(zip(names, values))}
        row = {n: float(v) for n, v in zip(names, values)}
        try:
            A, B = build_pair(family, params)
        except DomainError:
            rows.append({**row, "jm": None, "margin": None, "n_min": None})
            continue
        result = assess(A, B, method, config)
        v = result.verdict
        rows.append({**row, "jm": v.jointly_measurable, "margin": v.criterion_margin, "n_min": v.minimized_negativity})
    return rows


def dichotomic_threshold_mu(angle: float) -> float:
    """Largest common sharpness of jointly measurable unbiased dichotomic pairs at ``angle``."""
    return float(min(1.0, 1.0 / (abs(np.cos(angle / 2)) + abs(np.sin(angle / 2)))))


def dichotomic_threshold_entropy(angle: float) -> float:
    return dichotomic_entropy(dichotomic_threshold_mu(angle))
