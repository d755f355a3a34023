import json
import logging
import math

import numpy as np
import pytest

from utils.eigenfunction import (COS, SIN, EigenfunctionSpec, FamilyParams, TrigMode, apply_translation,
                                 build_spec, checkerboard_value, common_zeros, evaluate, evaluate_on_grid,
                                 family_to_spec, identically_vanishing_lines, load_spec, partial_derivative,
                                 reduced_value, stern_spec)
from utils.errors import AdmissibilityError, DegenerateSpecError, DomainError, UnsupportedOrderError
from utils.presets import EIGENFUNCTION_PRESETS, get_preset


def _random_family(rng, family=(2, 3)):
    return FamilyParams(family, float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(0, math.pi / 2)))


def test_mode_admissibility():
    with pytest.raises(AdmissibilityError):
        TrigMode(1, 1, SIN, 1.0)
    with pytest.raises(DomainError):
        TrigMode(3, 0, SIN, 1.0)
    with pytest.raises(DomainError):
        TrigMode(2, 1, "tan", 1.0)
    with pytest.raises(AdmissibilityError):
        family_to_spec(FamilyParams((1, 3), 0.0, 0.5))
    with pytest.raises(AdmissibilityError):
        family_to_spec(FamilyParams((2, 2), 0.0, 0.5), 2, 2)


def test_spec_validation():
    with pytest.raises(DomainError):
        EigenfunctionSpec((TrigMode(1, 2, SIN, 1.0), TrigMode(2, 3, SIN, 1.0)), 5)
    with pytest.raises(DegenerateSpecError):
        EigenfunctionSpec((TrigMode(1, 2, SIN, 0.0),), 5)
    with pytest.raises(DegenerateSpecError):
        build_spec([(1, 2, SIN, 1.0), (1, 2, SIN, -1.0)])


def test_family_params_normalize_beta():
    params = FamilyParams((2, 3), 0.7 + 2 * math.pi, 0.3)
    assert params.beta == pytest.approx(0.7)
    with pytest.raises(DomainError):
        FamilyParams((2, 3), 0.7, 2.0)
    with pytest.raises(DomainError):
        FamilyParams((2, 3), float("nan"), 0.3)


def test_moebius_invariance():
    rng = np.random.default_rng(7)
    for _ in range(10):
        spec = family_to_spec(_random_family(rng))
        x = rng.uniform(0, math.pi, 20)
        y = rng.uniform(0, 2 * math.pi, 20)
        np.testing.assert_allclose(evaluate(spec, math.pi - x, y + math.pi), evaluate(spec, x, y), atol=1e-12)


def test_dirichlet_boundary():
    spec = family_to_spec(FamilyParams((2, 3), 0.4, 0.9))
    y = np.linspace(0, math.pi, 50)
    assert np.max(np.abs(evaluate(spec, 0.0, y))) < 1e-12
    assert np.max(np.abs(evaluate(spec, math.pi, y))) < 1e-12


def test_eigen_equation_residual():
    rng = np.random.default_rng(11)
    for family in ((1, 2), (2, 3)):
        spec = family_to_spec(_random_family(rng, family))
        x = rng.uniform(0, math.pi, 30)
        y = rng.uniform(0, math.pi, 30)
        laplacian = partial_derivative(spec, x, y, 2, 0) + partial_derivative(spec, x, y, 0, 2)
        residual = laplacian + spec.eigenvalue * evaluate(spec, x, y)
        assert np.max(np.abs(residual)) < 1e-10 * spec.derivative_scale(2)


def test_derivatives_against_finite_differences():
    spec = family_to_spec(FamilyParams((2, 3), 0.9, 0.6))
    rng = np.random.default_rng(3)
    x = rng.uniform(0.1, 3.0, 10)
    y = rng.uniform(0.1, 3.0, 10)
    h = 1e-6
    dx = (evaluate(spec, x + h, y) - evaluate(spec, x - h, y)) / (2 * h)
    dy = (evaluate(spec, x, y + h) - evaluate(spec, x, y - h)) / (2 * h)
    dxy = (partial_derivative(spec, x, y + h, 1, 0) - partial_derivative(spec, x, y - h, 1, 0)) / (2 * h)
    np.testing.assert_allclose(partial_derivative(spec, x, y, 1, 0), dx, atol=1e-6)
    np.testing.assert_allclose(partial_derivative(spec, x, y, 0, 1), dy, atol=1e-6)
    np.testing.assert_allclose(partial_derivative(spec, x, y, 1, 1), dxy, atol=1e-5)
    with pytest.raises(UnsupportedOrderError):
        partial_derivative(spec, x, y, 3, 2)


def test_reduced_value():
    spec = family_to_spec(FamilyParams((2, 3), 1.1, 0.4))
    x = np.linspace(0.2, 2.9, 15)
    y = np.linspace(0.0, math.pi, 15)
    np.testing.assert_allclose(reduced_value(spec, x, y) * np.sin(x), evaluate(spec, x, y), atol=1e-12)

    # On the boundary the reduced value is +-dPhi/dx
    np.testing.assert_allclose(reduced_value(spec, 0.0, y), partial_derivative(spec, 0.0, y, 1, 0), atol=1e-12)
    np.testing.assert_allclose(reduced_value(spec, math.pi, y), -partial_derivative(spec, math.pi, y, 1, 0), atol=1e-12)


def test_evaluate_on_grid_matches_pointwise():
    spec = stern_spec(2, 0.01)
    xs = np.linspace(0, math.pi, 9)
    ys = np.linspace(0, math.pi, 7)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    np.testing.assert_allclose(evaluate_on_grid(spec, xs, ys), evaluate(spec, xx, yy), atol=1e-12)
    np.testing.assert_allclose(evaluate_on_grid(spec, xs, ys, reduced=True), reduced_value(spec, xx, yy), atol=1e-12)


@pytest.mark.parametrize("family,shift", [((2, 3), math.pi / 3), ((1, 2), math.pi / 2)])
def test_translation_flips_sign_and_shifts_beta(family, shift):
    rng = np.random.default_rng(5)
    x = rng.uniform(0, math.pi, 25)
    y = rng.uniform(0, math.pi, 25)
    for beta, theta in ((0.2, 0.5), (1.0, 1.3), (-0.7, 0.1)):
        translated = apply_translation(family_to_spec(FamilyParams(family, beta, theta)), shift)
        shifted = family_to_spec(FamilyParams(family, beta + shift, theta))
        np.testing.assert_allclose(evaluate(translated, x, y), -evaluate(shifted, x, y), atol=1e-12)


@pytest.mark.parametrize("family", [(1, 2), (2, 3)])
def test_reflection_identity(family):
    m, n = family
    rng = np.random.default_rng(9)
    x = rng.uniform(0, math.pi, 25)
    y = rng.uniform(0, math.pi, 25)
    params = FamilyParams(family, 0.45, 0.8)
    reflected = family_to_spec(FamilyParams(family, params.beta + math.pi, params.theta))
    np.testing.assert_allclose(evaluate(reflected, x, y),
                               (-1) ** n * evaluate(family_to_spec(params), math.pi - x, y), atol=1e-12)


def test_common_zeros_shared_by_family():
    beta = 0.7
    points = common_zeros(beta)
    assert len(points) == 8
    for theta in (0.0, 0.3, 1.0, math.pi / 2):
        spec = family_to_spec(FamilyParams((2, 3), beta, theta))
        for x, y in points:
            assert abs(evaluate(spec, x, y)) < 1e-12


def test_checkerboard_value_sign():
    assert checkerboard_value(0.5, 0.2, 0.2) > 0
    assert checkerboard_value(0.5, math.pi / 2, 0.2) == pytest.approx(0.0, abs=1e-15)


def test_identically_vanishing_lines():
    assert identically_vanishing_lines(FamilyParams((2, 3), math.pi / 4, 0.3)) == []

    at_zero = identically_vanishing_lines(FamilyParams((2, 3), 0.0, 0.3))
    assert {axis for axis, _ in at_zero} == {"y"}
    assert sorted(round(eta, 9) for _, eta in at_zero) == [0.0, round(math.pi, 9)]

    at_third = identically_vanishing_lines(FamilyParams((2, 3), math.pi / 3, math.pi / 4))
    assert at_third
    assert {round(eta, 9) for _, eta in at_third} == {round(math.pi / 3, 9)}


def test_stern_spec(caplog):
    spec = stern_spec(2, 0.01)
    assert spec.eigenvalue == 17
    assert {(md.m, md.n) for md in spec.modes} == {(1, 4), (4, 1)}
    with pytest.raises(DomainError):
        stern_spec(2, -0.1)
    with caplog.at_level(logging.WARNING):
        stern_spec(2, 0.0)
    assert "degenerate" in caplog.text


def test_presets():
    for name in EIGENFUNCTION_PRESETS:
        assert get_preset(name).eigenvalue > 0
    assert get_preset("sin3").modes[0].kind == COS
    with pytest.raises(DomainError):
        get_preset("sin2")


def test_load_spec(tmp_path):
    spec = family_to_spec(FamilyParams((2, 3), 0.3, 0.6))
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))

    loaded = load_spec(path)
    assert loaded.eigenvalue == 13
    assert evaluate(loaded, 1.0, 0.5) == pytest.approx(evaluate(spec, 1.0, 0.5))

    path.write_text(json.dumps({"modes": [{"m": 1}]}))
    with pytest.raises(DomainError):
        load_spec(path)


def test_pure_sine_mode_defaults_to_cos_kind(tmp_path):
    path = tmp_path / "sin3.json"
    path.write_text(json.dumps({"modes": [{"m": 3, "n": 0, "c": 1}]}))

    loaded = load_spec(path)
    assert loaded.modes[0].kind == COS
    assert loaded.eigenvalue == 9
    assert evaluate(loaded, 0.4, 1.1) == pytest.approx(math.sin(1.2))

    mixed = EigenfunctionSpec.from_dict({"modes": [{"m": 2, "n": 3, "c": 1.0}]})
    assert mixed.modes[0].kind == SIN
