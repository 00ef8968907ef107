"""
SVG 渲染模块
单位球边界与 Aronszajn 反例的两个平行四边形；只用 path/line/text 元素，输出逐字节确定
"""
import math
import xml.etree.ElementTree as ET
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .norms import NormSpec, normalize_rows
from .aronszajn import ViolationCertificate
from .lift3d import Subspace2D, Verdict, certificate_spec, restrict_norm

SVG_NS = "http://www.w3.org/2000/svg"

# 单位球边界的方向数
BALL_DIRECTIONS = 512

# 单位球在画布上的最大半径（viewBox 半宽 1.5）
BALL_EXTENT = 1.4

LABEL_SIZE = "0.055"


def _fmt(x: float) -> str:
    s = f"{x:.8f}"
    return "0.00000000" if s == "-0.00000000" else s


def svgroot() -> ET.Element:
    return ET.Element("svg", xmlns=SVG_NS, version="1.1",
                      width="600", height="600", viewBox="-1.5 -1.5 3 3")


def svglineloop(parent: ET.Element, points: Sequence[Tuple[float, float]], **attrs) -> ET.Element:
    """闭合折线"""
    d = "M" + " L".join(f"{_fmt(x)} {_fmt(y)}" for x, y in points) + " Z"
    return ET.SubElement(parent, "path", d=d, fill="none", **attrs)


def svgline(parent: ET.Element, a, b, **attrs) -> ET.Element:
    return ET.SubElement(parent, "line", x1=_fmt(a[0]), y1=_fmt(a[1]), x2=_fmt(b[0]), y2=_fmt(b[1]), **attrs)


def svgtext(parent: ET.Element, pos, text: str) -> ET.Element:
    node = ET.SubElement(parent, "text", x=_fmt(pos[0]), y=_fmt(pos[1]),
                         **{"font-size": LABEL_SIZE, "text-anchor": "middle"})
    node.text = text
    return node


def _to_canvas(points: np.ndarray, scale: float, center: Tuple[float, float]) -> List[Tuple[float, float]]:
    """数学坐标 → 画布坐标（y 轴翻转）"""
    return [(center[0] + scale * x, center[1] - scale * y) for x, y in np.asarray(points, dtype=float)]


def unit_ball_points(spec: NormSpec, count: int = BALL_DIRECTIONS) -> np.ndarray:
    angles = np.arange(count) * (2 * math.pi / count)
    return normalize_rows(spec, np.column_stack([np.cos(angles), np.sin(angles)]))


def _ball_scale(points: np.ndarray) -> float:
    radius = float(np.max(np.linalg.norm(points, axis=1)))
    return min(1.0, BALL_EXTENT / radius)


def _draw_ball(root: ET.Element, spec: NormSpec, scale: float, center: Tuple[float, float]) -> None:
    points = unit_ball_points(spec)
    s = scale * _ball_scale(points)
    extent = 1.2 * s * float(np.max(np.abs(points)))
    svgline(root, (center[0] - extent, center[1]), (center[0] + extent, center[1]),
            stroke="#bbbbbb", **{"stroke-width": "0.005"})
    svgline(root, (center[0], center[1] - extent), (center[0], center[1] + extent),
            stroke="#bbbbbb", **{"stroke-width": "0.005"})
    svglineloop(root, _to_canvas(points, s, center), stroke="#000000", **{"stroke-width": "0.01"})


def _parallelogram_labels(spec: NormSpec, v: np.ndarray, w: np.ndarray, tag: str) -> List[Tuple[np.ndarray, str]]:
    n = spec.evaluate_many(np.stack([v, w, v - w, v + w]))
    return [
        (0.5 * v, f"|v{tag}|={n[0]:.4f}"),
        (0.5 * w, f"|w{tag}|={n[1]:.4f}"),
        (w + 0.3 * (v - w), f"|v{tag}-w{tag}|={n[2]:.4f}"),
        (0.7 * (v + w), f"|v{tag}+w{tag}|={n[3]:.4f}"),
    ]


def _draw_witness(root: ET.Element, spec: NormSpec, cert: ViolationCertificate) -> None:
    """左下、右下两个平行四边形 (0, v, v+w, w)，公共缩放"""
    norm = certificate_spec(spec, cert)
    q = cert.quadruple
    shapes = [(q.v1, q.w1, '1', (-0.75, 0.7)), (q.v2, q.w2, '2', (0.75, 0.7))]

    corners = [np.stack([np.zeros(2), v, v + w, w]) for v, w, _, _ in shapes]
    width = max(float(np.ptp(c[:, 0])) for c in corners)
    height = max(float(np.ptp(c[:, 1])) for c in corners)
    scale = min(1.2 / max(width, 1e-12), 0.6 / max(height, 1e-12))

    for (v, w, tag, panel), pts in zip(shapes, corners):
        mid = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        center = (panel[0] - scale * mid[0], panel[1] + scale * mid[1])
        canvas = _to_canvas(pts, scale, center)
        svglineloop(root, canvas, stroke="#1f4e99", **{"stroke-width": "0.008"})
        svgline(root, canvas[0], canvas[2], stroke="#b22222", **{"stroke-width": "0.006"})
        svgline(root, canvas[1], canvas[3], stroke="#228b22", **{"stroke-width": "0.006"})
        for pos, text in _parallelogram_labels(norm, v, w, tag):
            svgtext(root, _to_canvas(pos[None, :], scale, center)[0], text)


def render_svg(
    spec: NormSpec,
    verdict: Optional[Verdict] = None,
    section: Optional[Tuple[int, int]] = None
) -> str:
    """
    渲染 SVG 文本

    Args:
        spec: 范数
        verdict: 带 Aronszajn 证书时同时绘制两个平行四边形
        section: dim ≥ 3 时取坐标平面 (i, j) 的截面绘制单位球

    Raises:
        ValueError: dim ≥ 3 未给出 section，或 dim = 1
    """
    if spec.dim == 1:
        raise ValueError("一维范数没有可绘制的单位球")
    ball_spec = spec
    if spec.dim >= 3:
        if section is None:
            raise ValueError(f"dim={spec.dim} 的单位球无法直接绘制，请用 --section i,j 选择坐标截面")
        i, j = section
        if not (0 <= i < spec.dim and 0 <= j < spec.dim and i != j):
            raise ValueError(f"截面下标 {section} 无效 (dim={spec.dim})")
        ball_spec = restrict_norm(spec, Subspace2D.coordinate(spec.dim, i, j))
    elif section is not None and tuple(section) != (0, 1):
        raise ValueError("二维范数只有截面 0,1")

    root = svgroot()
    cert = None
    if verdict is not None and isinstance(verdict.witness, ViolationCertificate):
        cert = verdict.witness

    if cert is None:
        _draw_ball(root, ball_spec, 1.0, (0.0, 0.0))
    else:
        _draw_ball(root, ball_spec, 0.5, (0.0, -0.8))
        _draw_witness(root, spec, cert)

    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
