"""
范数核心模块
向量校验、范数族、批量求值、规范化、范数公理残差
"""
import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

logger = logging.getLogger(__name__)


# 默认最大维数
MAX_DIM = 8

# 零向量阈值（绝对值）
ZERO_TOL = 1e-12

# 二次型对称性容差
SYMMETRY_TOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """所有随机操作统一使用 PCG64，保证报告可复现"""
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def as_vector(x, dim: Optional[int] = None, max_dim: int = MAX_DIM) -> np.ndarray:
    """
    把输入转成一维 float64 向量并校验

    Raises:
        ValueError: 维数不符、超出上限或含非有限坐标
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"向量必须是一维的，得到 shape={v.shape}")
    if not 1 <= v.size <= max_dim:
        raise ValueError(f"向量维数 {v.size} 超出范围 [1, {max_dim}]")
    if dim is not None and v.size != dim:
        raise ValueError(f"维数不匹配: 需要 {dim}，得到 {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"向量含非有限坐标: {v.tolist()}")
    return v


def as_rows(X, dim: int) -> np.ndarray:
    """转成二维 float64 数组（每行一个向量）并校验列数与有限性"""
    rows = np.asarray(X, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2 or rows.shape[1] != dim:
        raise ValueError(f"维数不匹配: 需要 (n, {dim})，得到 {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("输入含非有限坐标")
    return rows


def _format_number(value: float) -> str:
    if math.isinf(value):
        return 'inf'
    return repr(float(value))


class NormSpec(ABC):
    """
    范数描述符基类

    子类提供 `dim` 与批量求值 `evaluate_many`（每行一个向量）。
    """

    family: str = ''

    @abstractmethod
    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def describe(self) -> str:
        """规范字符串，语法见 spec_parser"""

    def __call__(self, x) -> float:
        return eval_norm(self, x)


def _check_exponent(p: float) -> None:
    if not (p == math.inf or (math.isfinite(p) and p >= 1)):
        raise ValueError(f"p 必须 ≥ 1 或为 inf，得到 {p}")


def _pnorm_rows(X: np.ndarray, p: float) -> np.ndarray:
    A = np.abs(X)
    if math.isinf(p):
        return A.max(axis=1)
    if p == 1:
        return A.sum(axis=1)
    if p == 2:
        return np.sqrt(np.sum(A * A, axis=1))
    # 先按最大坐标缩放，避免 |x|^p 上溢
    m = A.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    scaled = A / safe[:, None]
    return np.where(m > 0, safe * np.sum(scaled ** p, axis=1) ** (1.0 / p), 0.0)


@dataclass(frozen=True)
class PNorm(NormSpec):
    """ℓᵖ 范数，p = math.inf 是独立标签，求值为 max|xᵢ|"""
    p: float
    dim: int

    family = 'p'

    def __post_init__(self):
        _check_exponent(self.p)
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"维数 {self.dim} 超出范围 [1, {MAX_DIM}]")

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return _pnorm_rows(as_rows(X, self.dim), self.p)

    def describe(self) -> str:
        return f"p:{_format_number(self.p)}"


@dataclass(frozen=True)
class WeightedPNorm(NormSpec):
    """加权 ℓᵖ 范数: ‖w∘x‖_p，p=2 时等价于 Quadratic(diag(w²))"""
    p: float
    weights: Tuple[float, ...]

    family = 'wp'

    def __post_init__(self):
        _check_exponent(self.p)
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, 'weights', w)
        if not 1 <= len(w) <= MAX_DIM:
            raise ValueError(f"权重个数 {len(w)} 超出范围 [1, {MAX_DIM}]")
        if not all(math.isfinite(x) and x > 0 for x in w):
            raise ValueError(f"权重必须全部为正: {w}")

    @property
    def dim(self) -> int:
        return len(self.weights)

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        rows = as_rows(X, self.dim)
        return _pnorm_rows(rows * np.asarray(self.weights), self.p)

    def describe(self) -> str:
        ws = ','.join(_format_number(w) for w in self.weights)
        return f"wp:{_format_number(self.p)}:{ws}"


@dataclass(frozen=True)
class Quadratic(NormSpec):
    """二次型范数 √(xᵀAx)，A 对称正定"""
    matrix: Tuple[Tuple[float, ...], ...]

    family = 'quad'

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"二次型矩阵必须是方阵，得到 shape={A.shape}")
        if not 1 <= A.shape[0] <= MAX_DIM:
            raise ValueError(f"维数 {A.shape[0]} 超出范围 [1, {MAX_DIM}]")
        if not np.all(np.isfinite(A)):
            raise ValueError("二次型矩阵含非有限元素")
        if np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
            raise ValueError("二次型矩阵不对称")
        minors = leading_minors(A)
        if np.any(minors <= 0):
            raise ValueError(f"二次型矩阵非正定，顺序主子式: {minors.tolist()}")
        object.__setattr__(self, 'matrix', tuple(tuple(float(a) for a in row) for row in A))
        object.__setattr__(self, '_A', A)

    @classmethod
    def from_array(cls, A) -> 'Quadratic':
        return cls(tuple(tuple(float(a) for a in row) for row in np.asarray(A, dtype=float)))

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        rows = as_rows(X, self.dim)
        q = np.einsum('ij,jk,ik->i', rows, self._A, rows)
        return np.sqrt(np.maximum(q, 0.0))

    def describe(self) -> str:
        return 'quad:' + ','.join(_format_number(a) for row in self.matrix for a in row)


@dataclass(frozen=True)
class PolytopeGauge2D(NormSpec):
    """
    二维多边形规范函数（Minkowski 泛函）

    顶点集构造时自动中心对称化（每个 v 配一个 −v），
    求值为射线与各边交点: ‖x‖ = max_e (n_e·x) / h_e。
    """
    vertices: Tuple[Tuple[float, float], ...]

    family = 'poly'

    def __post_init__(self):
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ValueError(f"多边形顶点必须是二维点列表，得到 shape={pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("多边形顶点含非有限坐标")
        object.__setattr__(self, 'vertices', tuple((float(x), float(y)) for x, y in pts))

        sym = np.vstack([pts, -pts])
        try:
            hull = ConvexHull(sym)
        except (QhullError, ValueError) as e:
            raise ValueError(f"多边形退化，原点不在凸包内部: {e}") from e

        # 2D 凸包顶点按逆时针排列
        ring = sym[hull.vertices]
        nxt = np.roll(ring, -1, axis=0)
        d = nxt - ring
        normals = np.column_stack([d[:, 1], -d[:, 0]])
        offsets = np.einsum('ij,ij->i', normals, ring)
        if np.any(offsets <= ZERO_TOL * max(1.0, float(np.max(np.abs(ring))))):
            raise ValueError("原点不在多边形内部")
        object.__setattr__(self, '_ring', ring)
        object.__setattr__(self, '_normals', normals / offsets[:, None])

    @property
    def dim(self) -> int:
        return 2

    @property
    def hull_vertices(self) -> np.ndarray:
        """对称化后的凸包顶点（逆时针）"""
        return self._ring.copy()

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        rows = as_rows(X, 2)
        return np.maximum((rows @ self._normals.T).max(axis=1), 0.0)

    def describe(self) -> str:
        return 'poly:' + ';'.join(f"{_format_number(x)},{_format_number(y)}" for x, y in self.vertices)


def leading_minors(A: np.ndarray) -> np.ndarray:
    """顺序主子式"""
    A = np.asarray(A, dtype=float)
    return np.array([np.linalg.det(A[:k, :k]) for k in range(1, A.shape[0] + 1)])


def eval_norm(spec: NormSpec, x) -> float:
    """单个向量求范数"""
    v = as_vector(x, spec.dim)
    return float(spec.evaluate_many(v[None, :])[0])


def gauge_normalize(spec: NormSpec, x) -> np.ndarray:
    """x / ‖x‖，落到单位球面上"""
    v = as_vector(x, spec.dim)
    n = float(spec.evaluate_many(v[None, :])[0])
    if n <= ZERO_TOL:
        raise ValueError(f"向量范数 {n:.3e} 过小，无法规范化")
    return v / n


def normalize_rows(spec: NormSpec, X: np.ndarray) -> np.ndarray:
    """批量规范化，零行保持不变"""
    rows = as_rows(X, spec.dim)
    n = spec.evaluate_many(rows)
    safe = np.where(n > ZERO_TOL, n, 1.0)
    return rows / safe[:, None]


def adversarial_grid(dim: int, include_diagonals: bool = True) -> np.ndarray:
    """
    确定性对抗网格

    前 min(dim, 3) 个坐标取 {−1, 0, 1} 的全部非零组合（其余补零），
    再加上 (1,1,…,1) 与 (1,−1,1,…) 两条对角线。p 范数的典型反例都在这里。
    """
    k = min(dim, 3)
    axes = np.array(np.meshgrid(*([[-1.0, 0.0, 1.0]] * k), indexing='ij')).reshape(k, -1).T
    axes = axes[np.any(axes != 0, axis=1)]
    grid = np.zeros((len(axes), dim))
    grid[:, :k] = axes
    if include_diagonals and dim > k:
        ones = np.ones(dim)
        alt = np.array([(-1.0) ** i for i in range(dim)])
        grid = np.vstack([grid, ones, alt])
    return grid


@dataclass
class NormAxiomResiduals:
    homogeneity: float
    triangle: float
    positivity: float

    def as_dict(self) -> dict:
        return {
            'homogeneity': self.homogeneity,
            'triangle': self.triangle,
            'positivity': self.positivity,
        }


def norm_axiom_residuals(spec: NormSpec, sample_count: int, seed: int) -> NormAxiomResiduals:
    """范数公理残差（齐次性、三角不等式、正定性），按 seed 确定性采样"""
    if sample_count < 1:
        raise ValueError("sample_count 必须 ≥ 1")
    rng = make_rng(seed)
    d = spec.dim
    X = rng.standard_normal((sample_count, d))
    Y = rng.standard_normal((sample_count, d))
    a = rng.uniform(-3.0, 3.0, sample_count)

    nx = spec.evaluate_many(X)
    ny = spec.evaluate_many(Y)
    homogeneity = np.abs(spec.evaluate_many(a[:, None] * X) - np.abs(a) * nx)
    triangle = np.maximum(0.0, spec.evaluate_many(X + Y) - nx - ny)
    nonzero = np.any(X != 0, axis=1)
    positivity = np.maximum(0.0, ZERO_TOL - nx[nonzero]) if np.any(nonzero) else np.zeros(1)

    return NormAxiomResiduals(
        homogeneity=float(homogeneity.max()),
        triangle=float(triangle.max()),
        positivity=float(positivity.max()),
    )


def rational_scaling_check(
    spec: NormSpec,
    p: Sequence[float],
    q: Sequence[float],
    j: int, k: int, m: int, n: int
) -> float:
    """
    有理缩放恒等式
    |‖(j/k)p + (m/n)q‖ − |1/(kn)|·‖jn·p + km·q‖|，对任何范数都只剩浮点噪声
    """
    if k == 0 or n == 0:
        raise ValueError("k 和 n 不能为 0")
    pv = as_vector(p, spec.dim)
    qv = as_vector(q, spec.dim)
    lhs, rhs = spec.evaluate_many(np.stack([
        (j / k) * pv + (m / n) * qv,
        (j * n) * pv + (k * m) * qv,
    ]))
    return float(abs(lhs - abs(1.0 / (k * n)) * rhs))
