"""
二维几何模块
格点归纳验证、μ 等距残差、二分构造正交单位向量、反射/旋转等距检验、二维欧氏判定
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, List

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .norms import NormSpec, ZERO_TOL, as_vector, gauge_normalize, make_rng, normalize_rows
from .aronszajn import criterion_residuals

logger = logging.getLogger(__name__)


# 格点引理前提 ‖p+q‖ = ‖p−q‖ 的容差
LATTICE_BASE_TOL = 1e-8

# (*) 失败与归纳实例"断裂"的判定阈值
STAR_TOL = 1e-6

# 二维欧氏判定阈值
VERDICT_TOL = 1e-7


@dataclass
class LatticePair:
    """满足 ‖p+q‖ = ‖p−q‖ 的非零向量对"""
    p: np.ndarray
    q: np.ndarray
    base_residual: float

    def __post_init__(self):
        self.p = as_vector(self.p, 2)
        self.q = as_vector(self.q, 2)
        if not np.any(self.p) or not np.any(self.q):
            raise ValueError("p 和 q 必须非零")
        if self.base_residual <= LATTICE_BASE_TOL:
            pu = self.p / np.linalg.norm(self.p)
            qu = self.q / np.linalg.norm(self.q)
            if abs(pu[0] * qu[1] - pu[1] * qu[0]) <= 1e-10:
                raise ValueError("p 与 q 线性相关，不可能满足 ‖p+q‖ = ‖p−q‖")

    @classmethod
    def from_vectors(cls, spec: NormSpec, p, q) -> 'LatticePair':
        p = as_vector(p, 2)
        q = as_vector(q, 2)
        n = spec.evaluate_many(np.stack([p, q, p + q, p - q]))
        if n[0] <= ZERO_TOL or n[1] <= ZERO_TOL:
            raise ValueError("p 和 q 必须非零")
        return cls(p=p, q=q, base_residual=float(abs(n[2] - n[3])))


def _isosceles_gap(spec: NormSpec, p: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """h = ‖p + q‖ − ‖p − q‖，q 为各方向上的单位向量"""
    Q = normalize_rows(spec, directions)
    return spec.evaluate_many(p[None, :] + Q) - spec.evaluate_many(p[None, :] - Q)


def find_lattice_pair(spec: NormSpec, p, scan_count: int = 360) -> LatticePair:
    """
    扫描 q 的方向寻找 ‖p+q‖ = ‖p−q‖，再二分精化

    q 从 p 的方向转到 −p 的方向时 h 从 2 变到 −2，必有变号。
    """
    if spec.dim != 2:
        raise ValueError(f"find_lattice_pair 需要二维范数，得到 dim={spec.dim}")
    pu = gauge_normalize(spec, p)
    theta_p = math.atan2(pu[1], pu[0])
    phis = theta_p + math.pi * np.arange(scan_count + 1) / scan_count
    h = _isosceles_gap(spec, pu, np.column_stack([np.cos(phis), np.sin(phis)]))

    change = np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0)[0]
    k = int(change[0])

    def gap_fn(phi: float) -> float:
        return float(_isosceles_gap(spec, pu, np.array([[math.cos(phi), math.sin(phi)]]))[0])

    if h[k] == 0.0:
        phi = phis[k]
    elif h[k + 1] == 0.0:
        phi = phis[k + 1]
    else:
        phi = bisect(gap_fn, phis[k], phis[k + 1], xtol=1e-15, maxiter=200)
    q = gauge_normalize(spec, [math.cos(phi), math.sin(phi)])
    return LatticePair.from_vectors(spec, pu, q)


@dataclass
class SchemaInstance:
    """归纳链上的一个 Aronszajn 判据实例"""
    chain: str          # 'a': 对 a 归纳 (b = 1)；'b': 对 b 归纳
    a: int
    b: int
    antecedent: float   # 前件残差最大值
    consequent: float   # 后件残差
    defect: float

    @property
    def broken(self) -> bool:
        return self.antecedent <= STAR_TOL < self.consequent


@dataclass
class LatticeReport:
    max_star_residual: float
    first_failure: Optional[Tuple[int, int]]
    schema_residuals: float
    first_broken_schema: Optional[SchemaInstance]
    max_n: int
    residuals: np.ndarray = field(repr=False, default=None)

    def residual_at(self, a: int, b: int) -> float:
        return float(self.residuals[a + self.max_n, b + self.max_n])


def _check_pair(pair: LatticePair) -> None:
    if pair.base_residual > LATTICE_BASE_TOL:
        raise ValueError(f"不满足格点引理前提: |‖p+q‖ − ‖p−q‖| = {pair.base_residual:.3e}")


def _schema_instances(spec: NormSpec, p: np.ndarray, q: np.ndarray, max_n: int) -> List[SchemaInstance]:
    instances = []

    def record(chain, a, b, quad):
        antecedent = max(quad.side_v_residual, quad.side_w_residual, quad.diag_minus_residual)
        consequent = quad.diag_plus_gap
        instances.append(SchemaInstance(chain, a, b, antecedent, consequent, max(0.0, consequent - antecedent)))

    # (a−1, 1), (a, 1) ⇒ (a+1, 1)
    for a in range(1, max_n):
        quad = criterion_residuals(spec, a * p + q, p, a * p - q, p)
        record('a', a, 1, quad)
    # (a, b−1), (a, b) ⇒ (a, b+1)
    for a in range(1, max_n + 1):
        for b in range(1, max_n):
            quad = criterion_residuals(spec, a * p + b * q, q, a * p - b * q, -q)
            record('b', a, b, quad)
    return instances


def verify_lattice(spec: NormSpec, pair: LatticePair, max_n: int) -> LatticeReport:
    """
    在整数格 [−N, N]² 上检查 (*) ‖ap + bq‖ = ‖ap − bq‖，
    并沿两条归纳链检查每个判据实例，定位第一个断裂的蕴含
    """
    _check_pair(pair)
    if max_n < 1:
        raise ValueError("max_n 必须 ≥ 1")
    ks = np.arange(-max_n, max_n + 1, dtype=float)
    A, B = np.meshgrid(ks, ks, indexing='ij')
    a = A.ravel()[:, None]
    b = B.ravel()[:, None]
    plus = spec.evaluate_many(a * pair.p + b * pair.q)
    minus = spec.evaluate_many(a * pair.p - b * pair.q)
    residuals = np.abs(plus - minus).reshape(A.shape)

    failing = np.argwhere(residuals > STAR_TOL)
    first_failure = None
    if len(failing):
        i, j = failing[0]
        first_failure = (int(ks[i]), int(ks[j]))

    instances = _schema_instances(spec, pair.p, pair.q, max_n)
    schema = max((inst.defect for inst in instances), default=0.0)
    broken = next((inst for inst in instances if inst.broken), None)
    if broken is not None:
        logger.info("第一个断裂的归纳实例: 链 %s, a=%d, b=%d, 后件残差 %.3e",
                    broken.chain, broken.a, broken.b, broken.consequent)

    return LatticeReport(
        max_star_residual=float(residuals.max()),
        first_failure=first_failure,
        schema_residuals=float(schema),
        first_broken_schema=broken,
        max_n=max_n,
        residuals=residuals,
    )


def mu_isometry_residual(spec: NormSpec, pair: LatticePair, sample_count: int, seed: int) -> float:
    """实系数 (a, b) ∈ [−3, 3]² 上 |‖ap+bq‖ − ‖ap−bq‖| 的最大值"""
    _check_pair(pair)
    rng = make_rng(seed)
    coeffs = rng.uniform(-3.0, 3.0, (sample_count, 2))
    a = coeffs[:, :1]
    b = coeffs[:, 1:]
    plus = spec.evaluate_many(a * pair.p + b * pair.q)
    minus = spec.evaluate_many(a * pair.p - b * pair.q)
    return float(np.max(np.abs(plus - minus)))


@dataclass
class BisectionTrace:
    bisection_iters: int
    final_f_value: float
    t: float


@dataclass
class Basis2D:
    """二分构造的 (e₁, e₂)，以及由它们确定的参考坐标 (a, b) ↦ a·e₁ + b·e₂"""
    e1: np.ndarray
    e2: np.ndarray
    construction_trace: Optional[BisectionTrace] = None

    @classmethod
    def standard(cls) -> 'Basis2D':
        return cls(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    @property
    def matrix(self) -> np.ndarray:
        """行向量为 e₁, e₂"""
        return np.vstack([self.e1, self.e2])

    def frame(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return coords @ self.matrix

    def circle_point(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.frame(np.column_stack([np.cos(theta), np.sin(theta)]))

    def to_dict(self) -> dict:
        data = {'e1': self.e1.tolist(), 'e2': self.e2.tolist()}
        if self.construction_trace is not None:
            data['bisection_iters'] = self.construction_trace.bisection_iters
            data['final_f_value'] = self.construction_trace.final_f_value
        return data


@dataclass
class LinearMap2D:
    """作用在 Basis2D 参考坐标上的 2×2 线性映射"""
    matrix: np.ndarray

    @classmethod
    def reflection_x_axis(cls) -> 'LinearMap2D':
        return cls(np.array([[1.0, 0.0], [0.0, -1.0]]))

    @classmethod
    def reflection_diagonal(cls) -> 'LinearMap2D':
        """关于直线 x = y 的反射"""
        return cls(np.array([[0.0, 1.0], [1.0, 0.0]]))

    @classmethod
    def reflection_line(cls, angle: float) -> 'LinearMap2D':
        """关于参考坐标中方向角为 angle 的直线的反射（角平分线反射用它构造）"""
        c, s = math.cos(2 * angle), math.sin(2 * angle)
        return cls(np.array([[c, s], [s, -c]]))

    @classmethod
    def rotation(cls, angle: float) -> 'LinearMap2D':
        c, s = math.cos(angle), math.sin(angle)
        return cls(np.array([[c, -s], [s, c]]))

    def compose(self, other: 'LinearMap2D') -> 'LinearMap2D':
        """self ∘ other"""
        return LinearMap2D(self.matrix @ other.matrix)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def apply(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.matrix.T


def _unit_check(spec: NormSpec, e1: np.ndarray) -> None:
    n = float(spec.evaluate_many(e1[None, :])[0])
    if abs(n - 1.0) > 1e-10:
        raise ValueError(f"e₁ 必须是单位向量，‖e₁‖ = {n!r}")


def find_orthogonal_unit(spec: NormSpec, e1, tol: float = 1e-10) -> Basis2D:
    """
    x(t) 沿单位圆从 e₁ (t=0) 走到 −e₁ (t=π)，
    f(t) = ‖e₁ + x(t)‖ − ‖e₁ − x(t)‖ 从 2 连续变到 −2，二分求零点作为 e₂
    """
    if spec.dim != 2:
        raise ValueError(f"find_orthogonal_unit 需要二维范数，得到 dim={spec.dim}")
    if tol <= 0:
        raise ValueError("tol 必须为正")
    e1 = as_vector(e1, 2)
    _unit_check(spec, e1)
    perp = np.array([-e1[1], e1[0]])

    def point(t: float) -> np.ndarray:
        return gauge_normalize(spec, math.cos(t) * e1 + math.sin(t) * perp)

    def f(t: float) -> float:
        x = point(t)
        n = spec.evaluate_many(np.stack([e1 + x, e1 - x]))
        return float(n[0] - n[1])

    root, info = bisect(f, 0.0, math.pi, xtol=tol * 1e-3, maxiter=200, full_output=True, disp=False)
    final = f(root)
    if abs(final) > tol:
        logger.warning("二分结束时 |f| = %.3e 超过 tol=%.1e", abs(final), tol)
    return Basis2D(e1=e1, e2=point(root), construction_trace=BisectionTrace(int(info.iterations), final, float(root)))


def isometry_residual(
    spec: NormSpec,
    basis: Basis2D,
    linear_map: LinearMap2D,
    sample_count: int,
    seed: int
) -> float:
    """max |‖map(x)‖ − ‖x‖|，x 取参考坐标单位圆上的随机点与 kπ/8 网格点"""
    if sample_count < 1:
        raise ValueError("sample_count 必须 ≥ 1")
    rng = make_rng(seed)
    angles = np.concatenate([np.arange(16) * math.pi / 8, rng.uniform(0, 2 * math.pi, sample_count)])
    coords = np.column_stack([np.cos(angles), np.sin(angles)])
    x = basis.frame(coords)
    y = basis.frame(linear_map.apply(coords))
    return float(np.max(np.abs(spec.evaluate_many(y) - spec.evaluate_many(x))))


@dataclass
class Detection2D:
    verdict: bool
    max_deviation: float
    worst_theta: float
    basis: Basis2D

    def as_dict(self) -> dict:
        return {
            'verdict': self.verdict,
            'max_deviation': self.max_deviation,
            'worst_theta': self.worst_theta,
            'basis': self.basis.to_dict(),
        }


def constancy_deviation(spec: NormSpec, basis: Basis2D, theta) -> np.ndarray:
    """|‖cos θ·e₁ + sin θ·e₂‖ − 1|"""
    return np.abs(spec.evaluate_many(basis.circle_point(theta)) - 1.0)


def detect_euclidean_2d(spec: NormSpec, theta_samples: int = 720) -> Detection2D:
    """
    二维欧氏判定
    取 e₁ = (1,0)/‖(1,0)‖，二分得到 e₂，在 θ ∈ [0, π) 网格上检查
    g(θ) = ‖cos θ·e₁ + sin θ·e₂‖ 是否恒为 1；最差格点附近做有界一维精化
    """
    if spec.dim != 2:
        raise ValueError(f"detect_euclidean_2d 需要二维范数，得到 dim={spec.dim}")
    if theta_samples < 16:
        raise ValueError("theta_samples 必须 ≥ 16")
    e1 = gauge_normalize(spec, [1.0, 0.0])
    basis = find_orthogonal_unit(spec, e1, 1e-10)

    step = math.pi / theta_samples
    thetas = np.arange(theta_samples) * step
    deviation = constancy_deviation(spec, basis, thetas)
    idx = int(np.argmax(deviation))
    worst_theta = float(thetas[idx])
    max_dev = float(deviation[idx])

    if max_dev > 0:
        refined = minimize_scalar(
            lambda t: -float(constancy_deviation(spec, basis, t)[0]),
            bounds=(worst_theta - step, worst_theta + step),
            method='bounded',
            options={'xatol': 1e-12},
        )
        if -refined.fun > max_dev:
            max_dev = float(-refined.fun)
            worst_theta = float(refined.x) % math.pi

    return Detection2D(
        verdict=max_dev <= VERDICT_TOL,
        max_deviation=max_dev,
        worst_theta=worst_theta,
        basis=basis,
    )
