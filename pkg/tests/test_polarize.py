import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.norms import PNorm, WeightedPNorm, Quadratic, PolytopeGauge2D, eval_norm
from core.polarize import (
    TripleWitness, axiom_residuals, parallelogram_residual, parallelogram_summary,
    polarize, recover_gram,
)

A3 = np.array([[3.0, 0.5, -0.2], [0.5, 2.0, 0.3], [-0.2, 0.3, 1.5]])

# 求值对取负严格对称的范数族
SIGN_EXACT_NORMS = [
    PNorm(1, 2), PNorm(1.5, 3), PNorm(2, 3), PNorm(4, 2), PNorm(math.inf, 3),
    WeightedPNorm(3, (1.0, 2.0)), Quadratic.from_array(A3),
]


def vectors(dim):
    return arrays(np.float64, (dim,), elements=st.floats(min_value=-10.0, max_value=10.0))


@st.composite
def norm_and_pair(draw):
    spec = draw(st.sampled_from(SIGN_EXACT_NORMS))
    return spec, draw(vectors(spec.dim)), draw(vectors(spec.dim))


@seed(1)
@settings(max_examples=200, deadline=None)
@given(vectors(3), vectors(3))
def test_polarize_recovers_dot_product(v, w):
    assert polarize(PNorm(2, 3), v, w) == pytest.approx(float(v @ w), abs=1e-10)


def test_polarize_recovers_quadratic_form():
    spec = Quadratic.from_array(A3)
    v = np.array([1.0, -2.0, 0.5])
    w = np.array([0.3, 0.7, -1.1])
    assert polarize(spec, v, w) == pytest.approx(float(v @ A3 @ w), abs=1e-12)


@seed(1)
@settings(max_examples=300, deadline=None)
@given(norm_and_pair())
def test_polarize_and_parallelogram_symmetries(case):
    spec, v, w = case
    assert polarize(spec, v, w) == polarize(spec, w, v)
    residual = parallelogram_residual(spec, v, w)
    assert parallelogram_residual(spec, w, v) == residual
    assert parallelogram_residual(spec, -v, w) == residual
    n = eval_norm(spec, v)
    assert polarize(spec, v, v) == pytest.approx(n * n, rel=1e-12, abs=1e-300)


def test_parallelogram_residual():
    assert parallelogram_residual(PNorm(2, 2), (0.3, -1.2), (2.0, 0.4)) < 1e-12
    # ‖(1,1)‖₁² + ‖(1,−1)‖₁² − 2 − 2 = 4
    assert parallelogram_residual(PNorm(1, 2), (1, 0), (0, 1)) == pytest.approx(4.0)


def test_axiom_residuals_vanish_for_euclidean_norms():
    for spec in (PNorm(2, 3), Quadratic.from_array(A3)):
        res = axiom_residuals(spec, 500, 3)
        assert res.max_residual < 1e-9
        assert res.triple_count > 500


@pytest.mark.parametrize("spec", [PNorm(1, 2), PNorm(4, 3), PNorm(math.inf, 2)], ids=lambda s: s.describe())
def test_axiom_residuals_detect_non_euclidean(spec):
    res = axiom_residuals(spec, 200, 3)
    assert res.max_residual > 0.1
    assert res.worst is not None
    assert res.worst.residual == pytest.approx(res.max_residual)
    assert res.worst.recompute(spec) == pytest.approx(res.worst.residual, rel=1e-9, abs=1e-12)


def test_axiom_residuals_are_deterministic():
    spec = PolytopeGauge2D(((1.0, 0.0), (0.5, 0.75), (-0.5, 0.75)))
    a = axiom_residuals(spec, 100, 9)
    b = axiom_residuals(spec, 100, 9)
    assert a.as_dict() == b.as_dict()
    assert a.worst == b.worst


def test_triple_witness_dict_round_trip():
    w = TripleWitness('homogeneity', (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), 0.5, 0.25)
    assert TripleWitness.from_dict(w.to_dict()) == w
    assert w.to_dict()['kind'] == 'triple'


def test_recover_gram_identity():
    gram = recover_gram(PNorm(2, 4), 200, 0)
    np.testing.assert_allclose(gram.matrix, np.eye(4), atol=1e-9)
    assert gram.psd
    assert gram.max_model_residual < 1e-9


def test_recover_gram_quadratic():
    gram = recover_gram(Quadratic.from_array(A3), 200, 0)
    np.testing.assert_allclose(gram.matrix, A3, atol=1e-8)
    assert gram.psd
    assert gram.max_model_residual < 1e-9


def test_recover_gram_l1_is_singular():
    gram = recover_gram(PNorm(1, 2), 50, 0)
    np.testing.assert_allclose(gram.matrix, [[1, 1], [1, 1]], atol=1e-12)
    assert not gram.psd


def test_parallelogram_summary():
    assert parallelogram_summary(PNorm(2, 3), 100, 1).max_residual < 1e-9
    summary = parallelogram_summary(PNorm(4, 2), 100, 1)
    assert summary.max_residual > 0.01
    v, w = summary.worst_pair
    assert parallelogram_residual(PNorm(4, 2), v, w) == pytest.approx(summary.max_residual)
