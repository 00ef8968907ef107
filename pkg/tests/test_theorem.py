"""三种判据（Aronszajn 搜索、极化公理、平行四边形采样）在同一组范数上结论一致"""
import math

import numpy as np
import pytest

from core.norms import PNorm, Quadratic, PolytopeGauge2D
from core.polarize import axiom_residuals, parallelogram_summary
from core.aronszajn import SearchConfig, search_violation
from core.geometry2d import detect_euclidean_2d

TOL = 1e-7


def random_spd2(seed):
    rng = np.random.default_rng(100 + seed)
    G = rng.standard_normal((2, 2))
    A = G @ G.T + 0.3 * np.eye(2)
    return Quadratic.from_array((A + A.T) / 2)


SUITE = (
    [(PNorm(p, 2), p == 2) for p in (1, 1.5, 2, 4, math.inf)]
    + [(random_spd2(s), True) for s in range(5)]
    + [
        (PolytopeGauge2D(((1.0, 0.0), (0.5, 0.75), (-0.5, 0.75))), False),
        (PolytopeGauge2D(((1.0, 0.0), (0.0, 1.0))), False),
        (PolytopeGauge2D(((1.0, 0.2), (0.6, 0.9), (-0.3, 1.0), (-0.9, 0.5))), False),
    ]
)


@pytest.mark.parametrize("spec, euclidean", SUITE, ids=[s.describe() for s, _ in SUITE])
def test_criteria_agree(spec, euclidean):
    cert = search_violation(spec, SearchConfig(restarts=24 if euclidean else 200, seed=0))
    aronszajn = cert is None
    polarization = axiom_residuals(spec, 200, 0).max_residual < TOL
    parallelogram = parallelogram_summary(spec, 200, 0).max_residual < TOL
    constancy = detect_euclidean_2d(spec).verdict

    assert aronszajn == polarization == parallelogram == constancy == euclidean
    if cert is not None:
        assert cert.recheck(spec)
