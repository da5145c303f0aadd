"""JSON (de)serialization of POVMs, states, statistics and W-measures.

POVM files take one of two forms::

    {"dim": 2, "effects": [[[[re, im], [re, im]], [[re, im], [re, im]]], ...]}
    {"bloch": {"outcomes": 2, "bias": 0.0, "vector": [0, 0, 1]}}
    {"bloch": {"outcomes": 3, "mu": 0.8, "phi": 1.047, "plane": [[1,0,0],[0,1,0]]}}
    {"bloch": {"outcomes": 3, "vectors": [[...], [...], [...]]}}

Matrix entries may also be plain real numbers.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .povm import Povm, dichotomic_from_spec, trichotomic_from_spec, unbiased_qubit_povm


def _complex_matrix(rows) -> np.ndarray:
    def entry(x):
        if isinstance(x, (list, tuple)):
            if len(x) != 2:
                raise ValidationError(f"complex entry must be [re, im], got {x!r}")
            return complex(float(x[0]), float(x[1]))
        return complex(float(x))

    try:
        return np.array([[entry(x) for x in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix: {exc}") from exc


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def povm_from_dict(data: dict) -> Povm:
    if not isinstance(data, dict):
        raise ValidationError("POVM document must be a JSON object")
    if "bloch" in data:
        spec = data["bloch"]
        outcomes = spec.get("outcomes")
        if outcomes == 2:
            return dichotomic_from_spec(float(spec.get("bias", 0.0)), np.asarray(spec["vector"], dtype=float))
        if outcomes == 3:
            if "vectors" in spec:
                return unbiased_qubit_povm(spec["vectors"])
            return trichotomic_from_spec(float(spec["mu"]), float(spec.get("phi", 0.0)), spec.get("plane"))
        raise ValidationError(f"bloch form supports 2 or 3 outcomes, got {outcomes!r}")
    if "effects" not in data:
        raise ValidationError('POVM document needs "effects" or "bloch"')
    effects = np.array([_complex_matrix(e) for e in data["effects"]])
    if "dim" in data and effects.shape[1:] != (data["dim"], data["dim"]):
        raise ValidationError(f"effects do not match dim = {data['dim']}")
    return Povm(effects)


def povm_to_dict(p: Povm) -> dict:
    return {"dim": p.dim, "effects": [encode_matrix(e) for e in p.effects]}


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def load_povm(path) -> Povm:
    try:
        return povm_from_dict(read_json(path))
    except KeyError as exc:
        raise ValidationError(f"{path}: missing field {exc}") from exc


def load_state(path) -> np.ndarray:
    """``{"rho": matrix}`` or ``{"psi": [[re, im], ...]}``."""
    data = read_json(path)
    if "rho" in data:
        return _complex_matrix(data["rho"])
    if "psi" in data:
        psi = _complex_matrix([data["psi"]])[0]
        psi = psi / np.linalg.norm(psi)
        return np.outer(psi, psi.conj())
    raise ValidationError(f'{path}: state document needs "rho" or "psi"')


def load_statistics(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = read_json(path)
    try:
        return tuple(np.asarray(data[k], dtype=float) for k in ("pA", "pB", "pC"))
    except KeyError as exc:
        raise ValidationError(f"{path}: statistics document is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed statistics: {exc}") from exc


def wmeasure_to_dict(W) -> dict:
    return {"d": W.d, "provenance": W.provenance, "grid": [[encode_matrix(W.grid[i, j]) for j in range(W.d)] for i in range(W.d)]}
