import math

import pytest

from core.norms import PNorm, WeightedPNorm, Quadratic, PolytopeGauge2D
from core.spec_parser import NormSpecError, parse_norm_spec


def test_pnorm_with_dim():
    assert parse_norm_spec("p:2", 3) == PNorm(2.0, 3)


def test_pnorm_defaults_to_two_dimensions():
    assert parse_norm_spec("p:1.5") == PNorm(1.5, 2)


def test_pnorm_infinity():
    spec = parse_norm_spec("p:inf", 4)
    assert spec.p == math.inf
    assert spec.dim == 4


def test_quadratic():
    spec = parse_norm_spec("quad:1,0.5,0.5,1")
    assert spec == Quadratic(((1.0, 0.5), (0.5, 1.0)))
    assert spec.dim == 2


def test_polytope_symmetrization():
    spec = parse_norm_spec("poly:1,0;0.5,0.75")
    assert isinstance(spec, PolytopeGauge2D)
    hull = {tuple(v) for v in spec.hull_vertices.tolist()}
    assert hull == {(1.0, 0.0), (-1.0, 0.0), (0.5, 0.75), (-0.5, -0.75)}


def test_weighted():
    assert parse_norm_spec("wp:3:1,2.5") == WeightedPNorm(3.0, (1.0, 2.5))


def test_scientific_notation():
    assert parse_norm_spec("quad:1e0,0,0,2.5E-1") == Quadratic(((1.0, 0.0), (0.0, 0.25)))


@pytest.mark.parametrize("text, token, position", [
    ("p:nonsense", "nonsense", 2),
    ("quad:1,x,0,1", "x", 7),
    ("foo:1", "foo", 0),
    ("p2", "p2", 0),
    ("poly:1,0;0.5", "0.5", 9),
    ("wp:2:1,,3", "", 7),
    ("", "", 0),
])
def test_parse_errors_name_token_and_position(text, token, position):
    with pytest.raises(NormSpecError) as info:
        parse_norm_spec(text)
    assert info.value.token == token
    assert info.value.position == position
    assert info.value.to_dict()['type'] == 'NormSpecError'


def test_invalid_parameters_are_spec_errors():
    with pytest.raises(NormSpecError):
        parse_norm_spec("p:0.5")
    with pytest.raises(NormSpecError):
        parse_norm_spec("quad:1,2,3")
    with pytest.raises(NormSpecError):
        parse_norm_spec("quad:1,2,2,1")
    with pytest.raises(NormSpecError):
        parse_norm_spec("poly:1,0;2,0")


def test_conflicting_dim_is_an_error():
    with pytest.raises(NormSpecError):
        parse_norm_spec("quad:1,0,0,1", 3)
    with pytest.raises(NormSpecError):
        parse_norm_spec("poly:1,0;0,1", 3)
    with pytest.raises(NormSpecError):
        parse_norm_spec("wp:2:1,2", 3)


def test_spec_error_is_value_error():
    assert issubclass(NormSpecError, ValueError)


@pytest.mark.parametrize("spec", [
    PNorm(2.0, 3), PNorm(math.inf, 2), WeightedPNorm(1.5, (0.5, 2.0, 3.0)),
    Quadratic(((2.0, 0.5), (0.5, 1.0))), PolytopeGauge2D(((1.0, 0.0), (0.5, 0.75), (-0.5, 0.75))),
], ids=lambda s: s.family)
def test_describe_parses_back(spec):
    assert parse_norm_spec(spec.describe(), spec.dim) == spec
