import json

import numpy as np
import pytest

from jointmeas.errors import DomainError, ValidationError
from jointmeas.families import (
    assess,
    biased_entropy,
    build_pair,
    closed_form_kind,
    dichotomic_threshold_entropy,
    infer_spec,
    mu_from_biased_entropy,
    mu_from_dichotomic_entropy,
    mu_from_trichotomic_entropy,
    negativity_landscape,
)
from jointmeas.io import load_povm, povm_from_dict, povm_to_dict
from jointmeas.optimizer import OptimizerConfig
from jointmeas.povm import Povm, dichotomic_entropy, dichotomic_from_spec, trichotomic_entropy, unsharpness_entropy


@pytest.mark.parametrize("mu", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_entropy_inversions(mu):
    assert mu_from_dichotomic_entropy(dichotomic_entropy(mu)) == pytest.approx(mu, abs=1e-9)
    assert mu_from_trichotomic_entropy(trichotomic_entropy(mu)) == pytest.approx(mu, abs=1e-9)


def test_biased_entropy_matches_povm():
    for x, mu in [(0.0, 0.5), (0.3, 0.6), (0.5, 0.5)]:
        p = dichotomic_from_spec(x, [0, 0, mu])
        assert biased_entropy(mu, x) == pytest.approx(unsharpness_entropy(p), abs=1e-12)
        assert mu_from_biased_entropy(biased_entropy(mu, x), x) == pytest.approx(mu, abs=1e-9)


def test_inversion_out_of_range():
    with pytest.raises(DomainError):
        mu_from_dichotomic_entropy(0.8)
    with pytest.raises(DomainError):
        mu_from_biased_entropy(0.05, 0.5)


def test_build_pairs():
    A, B = build_pair("dichotomic-unbiased", {"mu_a": 0.5, "mu_b": 0.6})
    assert abs(A.spec.axis @ B.spec.axis) < 1e-15
    A, B = build_pair("dichotomic-unbiased", {"R_a": 0.4, "R_b": 0.4, "angle": 0.0})
    assert unsharpness_entropy(A) == pytest.approx(0.4)
    A, B = build_pair("dichotomic-biased", {"x": 0.2, "R": 0.6, "angle": np.pi / 3})
    assert A.spec.bias == 0.2 and unsharpness_entropy(B) == pytest.approx(0.6)
    A, B = build_pair("trichotomic", {"R": 0.5, "phi": 1.0})
    assert unsharpness_entropy(A) == pytest.approx(0.5) and B.spec.phi == 1.0
    with pytest.raises(ValidationError):
        build_pair("trichotomic", {"mu": 0.5, "R": 0.5})
    with pytest.raises(ValidationError):
        build_pair("nope", {})
    with pytest.raises(ValidationError):
        build_pair("trichotomic", {"mu": 0.5, "angle": 1})


def test_infer_spec_from_matrices():
    p = dichotomic_from_spec(0.2, [0.1, 0.3, -0.2])
    spec = infer_spec(Povm(p.effects))
    assert spec.bias == pytest.approx(0.2)
    np.testing.assert_allclose(spec.axis, [0.1, 0.3, -0.2])
    A, B = build_pair("trichotomic", {"mu": 0.8, "phi": 0.5})
    assert closed_form_kind(Povm(A.effects), Povm(B.effects)) == "trichotomic"
    A, B = build_pair("trichotomic", {"mu": 0.8, "mu_b": 0.7, "phi": 0.5})
    assert closed_form_kind(A, B) is None
    assert infer_spec(Povm(np.array([np.eye(3)]))) is None


def test_assess_auto_routes():
    A, B = build_pair("dichotomic-unbiased", {"mu_a": 1.0, "mu_b": 1.0})
    r = assess(A, B)
    assert r.method == "closed" and r.verdict.minimized_negativity == pytest.approx(np.sqrt(2) - 1)
    A, B = build_pair("trichotomic", {"mu": 0.8, "mu_b": 0.3, "phi": 0.5})
    r = assess(A, B, config=OptimizerConfig(restarts=2))
    assert r.method == "optimizer" and r.verdict.jointly_measurable
    with pytest.raises(ValidationError):
        assess(A, B, "closed")
    with pytest.raises(ValidationError):
        assess(A, B, "magic")


def test_landscape_shapes():
    rows = negativity_landscape("dichotomic-unbiased", {"R_a": []}, {"R_b": 0.4})
    assert rows == []
    rows = negativity_landscape("dichotomic-unbiased", {"R_a": [0.1, 0.8]}, {"R_b": 0.4}, method="closed")
    assert rows[0]["jm"] is False
    assert rows[1]["jm"] is None
    rows = negativity_landscape("trichotomic", {"phi": [0.0, 1.0], "mu": [0.5, 0.9, 1.0]}, method="closed")
    assert [(r["phi"], r["mu"]) for r in rows][:3] == [(0.0, 0.5), (0.0, 0.9), (0.0, 1.0)]
    with pytest.raises(ValidationError):
        negativity_landscape("trichotomic", {}, {})


def test_unbiased_slice_decreasing():
    grid = np.linspace(0.05, 0.69, 30)
    rows = negativity_landscape("dichotomic-unbiased", {"R_a": grid}, {"R_b": 0.4}, method="closed")
    n = [r["n_min"] for r in rows]
    assert np.all(np.diff(n) <= 1e-15) and n[0] > 0 and n[-1] == 0.0


def test_dichotomic_threshold_entropy():
    assert dichotomic_threshold_entropy(0.0) == 0.0
    assert dichotomic_threshold_entropy(np.pi / 2) == pytest.approx(dichotomic_entropy(1 / np.sqrt(2)))


def test_json_round_trip(tmp_path):
    p = dichotomic_from_spec(0.1, [0.2, -0.3, 0.4])
    path = tmp_path / "p.json"
    path.write_text(json.dumps(povm_to_dict(p)))
    np.testing.assert_allclose(load_povm(path).effects, p.effects)
    q = povm_from_dict({"bloch": {"outcomes": 3, "mu": 0.5, "phi": 0.2}})
    assert q.spec.mu == 0.5
    q = povm_from_dict({"bloch": {"outcomes": 3, "vectors": [[0.1, 0, 0], [-0.1, 0, 0], [0, 0, 0]]}})
    assert q.outcomes == 3
    q = povm_from_dict({"dim": 2, "effects": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]})
    assert q.dim == 2
    for bad in ({}, {"bloch": {"outcomes": 4}}, {"dim": 3, "effects": [[[1, 0], [0, 1]]]}, {"effects": [[[[1, 2, 3]]]]}):
        with pytest.raises(ValidationError):
            povm_from_dict(bad)
