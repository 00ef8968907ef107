import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from core.norms import PNorm
from core.lift3d import DetectConfig, certificate_spec, detect_euclidean
from core.svg import render_svg

NS = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg.encode('utf-8'))


def path_points(path):
    nums = [float(x) for x in re.findall(r'-?\d+\.\d+', path.get('d'))]
    return np.array(nums).reshape(-1, 2)


def test_euclidean_ball_lies_on_unit_circle():
    root = parse(render_svg(PNorm(2, 2)))
    assert root.get('viewBox') == "-1.5 -1.5 3 3"
    paths = root.findall(f'{NS}path')
    assert len(paths) == 1
    pts = path_points(paths[0])
    assert len(pts) == 512
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-6)


def test_only_basic_elements_are_used():
    verdict = detect_euclidean(PNorm(1, 2), DetectConfig(seed=0))
    root = parse(render_svg(PNorm(1, 2), verdict))
    tags = {el.tag for el in root.iter()} - {f'{NS}svg'}
    assert tags <= {f'{NS}path', f'{NS}line', f'{NS}text'}


def test_witness_layout_and_label_fidelity():
    spec = PNorm(1, 2)
    verdict = detect_euclidean(spec, DetectConfig(seed=0))
    root = parse(render_svg(spec, verdict))
    quads = [p for p in root.findall(f'{NS}path') if len(path_points(p)) == 4]
    assert len(quads) == 2

    labels = {t.text.split('=')[0]: float(t.text.split('=')[1]) for t in root.findall(f'{NS}text') if '=' in t.text}
    assert len(labels) == 8
    q = verdict.witness.quadruple
    norm = certificate_spec(spec, verdict.witness)
    expected = {
        '|v1|': norm(q.v1), '|w1|': norm(q.w1), '|v1-w1|': norm(q.v1 - q.w1), '|v1+w1|': norm(q.v1 + q.w1),
        '|v2|': norm(q.v2), '|w2|': norm(q.w2), '|v2-w2|': norm(q.v2 - q.w2), '|v2+w2|': norm(q.v2 + q.w2),
    }
    for key, value in expected.items():
        assert labels[key] == pytest.approx(value, abs=5e-5)


def test_p4_ball_is_convex():
    root = parse(render_svg(PNorm(4, 2), None))
    pts = path_points(root.findall(f'{NS}path')[0])
    edges = np.roll(pts, -1, axis=0) - pts
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    sign = np.sign(cross.sum())
    assert np.all(sign * cross > -1e-9)


def test_rendering_is_byte_deterministic():
    verdict = detect_euclidean(PNorm(1, 2), DetectConfig(seed=0))
    assert render_svg(PNorm(1, 2), verdict) == render_svg(PNorm(1, 2), verdict)


def test_higher_dimension_needs_section():
    with pytest.raises(ValueError, match="--section"):
        render_svg(PNorm(2, 3))
    root = parse(render_svg(PNorm(4, 3), section=(0, 2)))
    assert len(root.findall(f'{NS}path')) == 1
    with pytest.raises(ValueError):
        render_svg(PNorm(2, 3), section=(1, 1))
