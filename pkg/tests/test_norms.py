import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.norms import (
    PNorm, WeightedPNorm, Quadratic, PolytopeGauge2D,
    adversarial_grid, as_rows, eval_norm, gauge_normalize, normalize_rows,
    norm_axiom_residuals, rational_scaling_check,
)

HEXAGON = PolytopeGauge2D(((1.0, 0.0), (0.5, 0.75), (-0.5, 0.75)))
SQUARE = PolytopeGauge2D(((1.0, 0.0), (0.0, 1.0)))


def random_spd(dim, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    A = G @ G.T + dim * np.eye(dim)
    return Quadratic.from_array((A + A.T) / 2)


@pytest.mark.parametrize("spec, x, expected", [
    (PNorm(1, 2), (3, 4), 7.0),
    (PNorm(2, 2), (3, 4), 5.0),
    (Quadratic.from_array(np.eye(2)), (3, 4), 5.0),
    (SQUARE, (3, 4), 7.0),
    (PNorm(math.inf, 2), (2, -4), 4.0),
])
def test_eval_norm_examples(spec, x, expected):
    assert eval_norm(spec, x) == pytest.approx(expected, abs=1e-12)


def test_gauge_normalize_examples():
    np.testing.assert_allclose(gauge_normalize(PNorm(1, 2), (3, 4)), [3 / 7, 4 / 7], atol=1e-15)
    np.testing.assert_allclose(gauge_normalize(PNorm(2, 2), (0, 5)), [0, 1], atol=1e-15)
    np.testing.assert_allclose(gauge_normalize(PNorm(math.inf, 2), (2, -4)), [0.5, -1], atol=1e-15)


def test_gauge_normalize_rejects_zero_vector():
    with pytest.raises(ValueError):
        gauge_normalize(PNorm(2, 3), (0, 0, 0))


@pytest.mark.parametrize("x", [(1.0, 2.0, 3.0), (1.0, math.nan), (math.inf, 0.0)])
def test_eval_norm_rejects_bad_vectors(x):
    with pytest.raises(ValueError):
        eval_norm(PNorm(2, 2), x)


def test_invalid_family_parameters():
    with pytest.raises(ValueError):
        PNorm(0.5, 2)
    with pytest.raises(ValueError):
        PNorm(2, 9)
    with pytest.raises(ValueError):
        WeightedPNorm(2, (1.0, 0.0))
    with pytest.raises(ValueError):
        Quadratic(((1.0, 0.5), (0.4, 1.0)))
    with pytest.raises(ValueError):
        Quadratic(((1.0, 2.0), (2.0, 1.0)))
    with pytest.raises(ValueError):
        PolytopeGauge2D(((1.0, 0.0), (2.0, 0.0)))


def test_polytope_is_symmetrized():
    hull = {tuple(v) for v in HEXAGON.hull_vertices.tolist()}
    assert hull == {(1.0, 0.0), (0.5, 0.75), (-0.5, 0.75), (-1.0, 0.0), (-0.5, -0.75), (0.5, -0.75)}


def test_hexagon_gauge_closed_form():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((500, 2))
    expected = np.maximum(np.abs(X[:, 0]) + 2 * np.abs(X[:, 1]) / 3, 4 * np.abs(X[:, 1]) / 3)
    np.testing.assert_allclose(HEXAGON.evaluate_many(X), expected, rtol=1e-12)


def test_square_gauge_agrees_with_l1():
    rng = np.random.default_rng(11)
    X = rng.uniform(-5, 5, (1000, 2))
    np.testing.assert_allclose(SQUARE.evaluate_many(X), PNorm(1, 2).evaluate_many(X), atol=1e-10)


def test_weighted_euclidean_matches_diagonal_quadratic():
    w = (0.5, 2.0, 3.0)
    rng = np.random.default_rng(5)
    X = rng.standard_normal((200, 3))
    quad = Quadratic.from_array(np.diag(np.square(w)))
    np.testing.assert_allclose(WeightedPNorm(2, w).evaluate_many(X), quad.evaluate_many(X), rtol=1e-12)


def test_large_p_does_not_overflow():
    spec = PNorm(300, 2)
    assert eval_norm(spec, (1e3, 1e3)) == pytest.approx(1e3 * 2 ** (1 / 300), rel=1e-12)


ALL_NORMS = [
    PNorm(1, 3), PNorm(1.5, 2), PNorm(2, 4), PNorm(4, 3), PNorm(math.inf, 2),
    WeightedPNorm(3, (1.0, 2.0)), random_spd(3, 0), HEXAGON, SQUARE,
]


@pytest.mark.parametrize("spec", ALL_NORMS, ids=lambda s: s.describe())
def test_normalization_and_symmetry(spec):
    rng = np.random.default_rng(21)
    X = rng.standard_normal((300, spec.dim))
    np.testing.assert_allclose(spec.evaluate_many(normalize_rows(spec, X)), 1.0, atol=1e-10)
    np.testing.assert_allclose(spec.evaluate_many(-X), spec.evaluate_many(X), atol=1e-12)


@pytest.mark.parametrize("spec", [PNorm(2, 2), random_spd(3, 1), HEXAGON], ids=lambda s: s.family)
def test_norm_axiom_residuals_are_noise(spec):
    res = norm_axiom_residuals(spec, 1000, 7)
    assert res.homogeneity < 1e-9
    assert res.triangle < 1e-9
    assert res.positivity == 0.0


def test_norm_axiom_residuals_are_deterministic():
    assert norm_axiom_residuals(HEXAGON, 200, 4) == norm_axiom_residuals(HEXAGON, 200, 4)


@pytest.mark.parametrize("spec, p, q, jkmn", [
    (PNorm(2, 2), (1, 0), (0, 1), (1, 2, 3, 4)),
    (PNorm(1, 2), (1, 2), (3, -1), (5, 3, -2, 7)),
    (HEXAGON, (1, 0), (0, 1), (2, 3, 1, 5)),
])
def test_rational_scaling_examples(spec, p, q, jkmn):
    assert rational_scaling_check(spec, p, q, *jkmn) < 1e-12


SCALING_NORMS = [PNorm(1, 2), PNorm(1.5, 2), PNorm(2, 2), PNorm(4, 3), PNorm(math.inf, 2), random_spd(2, 8), HEXAGON]


@st.composite
def scaling_tuples(draw):
    spec = draw(st.sampled_from(SCALING_NORMS))
    vec = arrays(np.float64, (spec.dim,), elements=st.floats(min_value=-10.0, max_value=10.0))
    coeff = st.integers(min_value=-100, max_value=100)
    denom = coeff.filter(lambda k: k != 0)
    return spec, draw(vec), draw(vec), draw(coeff), draw(denom), draw(coeff), draw(denom)


@seed(1)
@settings(max_examples=10_000, deadline=None)
@given(scaling_tuples())
def test_rational_scaling_random_tuples(case):
    spec, p, q, j, k, m, n = case
    assert rational_scaling_check(spec, p, q, j, k, m, n) < 1e-10


def test_rational_scaling_rejects_zero_denominator():
    with pytest.raises(ValueError):
        rational_scaling_check(PNorm(2, 2), (1, 0), (0, 1), 1, 0, 1, 1)


def test_adversarial_grid_shapes():
    assert adversarial_grid(2).shape == (8, 2)
    assert adversarial_grid(3).shape == (26, 3)
    grid = adversarial_grid(5)
    assert grid.shape == (28, 5)
    assert not np.any(np.all(grid == 0, axis=1))


def test_as_rows_shapes_and_errors():
    assert as_rows((1.0, 2.0), 2).shape == (1, 2)
    assert as_rows(np.zeros((5, 3)), 3).shape == (5, 3)
    with pytest.raises(ValueError):
        as_rows(np.zeros((2, 3)), 2)
    with pytest.raises(ValueError):
        as_rows([[1.0, math.nan]], 2)
