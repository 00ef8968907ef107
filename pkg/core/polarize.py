"""
极化模块
极化候选内积、平行四边形残差、三变量内积公理残差、Gram 矩阵恢复
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .norms import NormSpec, ZERO_TOL, as_vector, make_rng, normalize_rows, adversarial_grid, leading_minors

logger = logging.getLogger(__name__)


# 齐次性采样的固定标量（有理数与黄金比例混合）
GOLDEN_RATIO = (1.0 + 5.0 ** 0.5) / 2.0
HOMOGENEITY_SCALARS = (-2.0, -1.0, -0.5, 0.0, 0.5, GOLDEN_RATIO, 2.0)

# Gram 矩阵正定判定阈值
PSD_TOL = 1e-10


def polarize_many(spec: NormSpec, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """批量极化: ⟨v,w⟩ = (‖v+w‖² − ‖v‖² − ‖w‖²)/2，逐行"""
    nv = spec.evaluate_many(V)
    nw = spec.evaluate_many(W)
    ns = spec.evaluate_many(V + W)
    # ‖v‖² + ‖w‖² 先求和，保证对 (v, w) 严格对称
    return (ns * ns - (nv * nv + nw * nw)) / 2.0


def polarize(spec: NormSpec, v, w) -> float:
    """极化公式给出的候选内积"""
    v = as_vector(v, spec.dim)
    w = as_vector(w, spec.dim)
    return float(polarize_many(spec, v[None, :], w[None, :])[0])


def parallelogram_many(spec: NormSpec, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """批量平行四边形残差 |‖v+w‖² + ‖v−w‖² − 2‖v‖² − 2‖w‖²|"""
    nv = spec.evaluate_many(V)
    nw = spec.evaluate_many(W)
    plus = spec.evaluate_many(V + W)
    minus = spec.evaluate_many(V - W)
    return np.abs((plus * plus + minus * minus) - 2.0 * (nv * nv + nw * nw))


def parallelogram_residual(spec: NormSpec, v, w) -> float:
    """平方形式的平行四边形恒等式残差，欧氏范数下只剩浮点噪声"""
    v = as_vector(v, spec.dim)
    w = as_vector(w, spec.dim)
    return float(parallelogram_many(spec, v[None, :], w[None, :])[0])


@dataclass
class TripleWitness:
    """违反内积公理的三元组"""
    axiom: str
    u: Tuple[float, ...]
    v: Tuple[float, ...]
    w: Tuple[float, ...]
    scalar: float
    residual: float

    def recompute(self, spec: NormSpec) -> float:
        u, v, w = (np.asarray(x, dtype=float) for x in (self.u, self.v, self.w))
        if self.axiom == 'additivity':
            return abs(polarize(spec, u + v, w) - polarize(spec, u, w) - polarize(spec, v, w))
        if self.axiom == 'homogeneity':
            return abs(polarize(spec, self.scalar * v, w) - self.scalar * polarize(spec, v, w))
        if self.axiom == 'definiteness':
            return max(0.0, ZERO_TOL - polarize(spec, v, v))
        raise ValueError(f"未知公理: {self.axiom}")

    def to_dict(self) -> dict:
        return {
            'kind': 'triple',
            'axiom': self.axiom,
            'u': list(self.u),
            'v': list(self.v),
            'w': list(self.w),
            'scalar': self.scalar,
            'residual': self.residual,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TripleWitness':
        return cls(
            axiom=data['axiom'],
            u=tuple(data['u']),
            v=tuple(data['v']),
            w=tuple(data['w']),
            scalar=data['scalar'],
            residual=data['residual'],
        )


@dataclass
class AxiomResiduals:
    additivity: float
    homogeneity: float
    definiteness: float
    worst: Optional[TripleWitness] = None
    triple_count: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.additivity, self.homogeneity, self.definiteness)

    def as_dict(self) -> dict:
        return {
            'additivity': self.additivity,
            'homogeneity': self.homogeneity,
            'definiteness': self.definiteness,
            'triple_count': self.triple_count,
        }


def _grid_triples(dim: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    G = adversarial_grid(dim)
    n = len(G)
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing='ij')
    return G[i.ravel()], G[j.ravel()], G[k.ravel()]


def sample_triples(spec: NormSpec, sample_count: int, seed: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    三元组样本: 确定性对抗网格的全部三元组 + seed 随机单位三元组

    网格向量不做规范化，随机向量规范化到单位球面。
    """
    gu, gv, gw = _grid_triples(spec.dim)
    rng = make_rng(seed)
    R = rng.standard_normal((3, sample_count, spec.dim))
    ru, rv, rw = (normalize_rows(spec, R[i]) for i in range(3))
    return np.vstack([gu, ru]), np.vstack([gv, rv]), np.vstack([gw, rw])


def axiom_residuals(spec: NormSpec, sample_count: int, seed: int) -> AxiomResiduals:
    """
    内积公理残差
    公理只涉及 3 个向量变量，所以在三元组 (u, v, w) 上采样即可；
    对称性由公式恒成立，不采样
    """
    if sample_count < 1:
        raise ValueError("sample_count 必须 ≥ 1")
    U, V, W = sample_triples(spec, sample_count, seed)

    additivity = np.abs(
        polarize_many(spec, U + V, W) - polarize_many(spec, U, W) - polarize_many(spec, V, W)
    )

    # 齐次性: 固定标量轮转 + 随机标量
    rng = make_rng(seed + 1)
    n = len(U)
    fixed = np.resize(np.asarray(HOMOGENEITY_SCALARS), n)
    random_a = rng.uniform(-3.0, 3.0, n)
    scalars = np.concatenate([fixed, random_a])
    VV = np.vstack([V, V])
    WW = np.vstack([W, W])
    homogeneity = np.abs(polarize_many(spec, scalars[:, None] * VV, WW) - scalars * polarize_many(spec, VV, WW))

    nonzero = spec.evaluate_many(V) > ZERO_TOL
    self_products = polarize_many(spec, V[nonzero], V[nonzero])
    definiteness = np.maximum(0.0, ZERO_TOL - self_products) if len(self_products) else np.zeros(1)

    worst = None
    add_max = float(additivity.max())
    hom_max = float(homogeneity.max())
    def_max = float(definiteness.max())
    if add_max >= hom_max and add_max >= def_max:
        idx = int(np.argmax(additivity))
        worst = TripleWitness('additivity', tuple(U[idx]), tuple(V[idx]), tuple(W[idx]), 1.0, add_max)
    elif hom_max >= def_max:
        idx = int(np.argmax(homogeneity))
        worst = TripleWitness('homogeneity', tuple(np.zeros(spec.dim)), tuple(VV[idx]), tuple(WW[idx]),
                              float(scalars[idx]), hom_max)
    else:
        idx = int(np.argmax(definiteness))
        vv = V[nonzero][idx]
        worst = TripleWitness('definiteness', tuple(np.zeros(spec.dim)), tuple(vv), tuple(vv), 1.0, def_max)

    logger.debug("公理残差 %s: additivity=%.3e homogeneity=%.3e definiteness=%.3e (%d 个三元组)",
                 spec.describe(), add_max, hom_max, def_max, n)
    return AxiomResiduals(add_max, hom_max, def_max, worst, n)


@dataclass
class ParallelogramSummary:
    max_residual: float
    worst_pair: Tuple[Tuple[float, ...], Tuple[float, ...]]
    pair_count: int

    def as_dict(self) -> dict:
        return {
            'max_residual': self.max_residual,
            'worst_v': list(self.worst_pair[0]),
            'worst_w': list(self.worst_pair[1]),
            'pair_count': self.pair_count,
        }


def parallelogram_summary(spec: NormSpec, sample_count: int, seed: int) -> ParallelogramSummary:
    """在三元组样本诱导的向量对 (u,v), (v,w), (u,w) 上采样平行四边形残差"""
    U, V, W = sample_triples(spec, sample_count, seed)
    P = np.vstack([U, V, U])
    Q = np.vstack([V, W, W])
    residuals = parallelogram_many(spec, P, Q)
    idx = int(np.argmax(residuals))
    return ParallelogramSummary(
        max_residual=float(residuals[idx]),
        worst_pair=(tuple(P[idx]), tuple(Q[idx])),
        pair_count=len(P),
    )


@dataclass
class GramResult:
    matrix: np.ndarray
    psd: bool
    max_model_residual: float
    minors: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            'matrix': self.matrix.tolist(),
            'psd': self.psd,
            'max_model_residual': self.max_model_residual,
        }


def recover_gram(spec: NormSpec, probe_count: int, seed: int) -> GramResult:
    """
    在标准基上由极化恢复 Gram 矩阵 Gᵢⱼ = ⟨bᵢ, bⱼ⟩，
    并用 ‖x‖² 与 xᵀGx 在单位探测向量上的最大偏差检验模型
    """
    if probe_count < 1:
        raise ValueError("probe_count 必须 ≥ 1")
    d = spec.dim
    E = np.eye(d)
    i, j = np.triu_indices(d)
    values = polarize_many(spec, E[i], E[j])
    G = np.zeros((d, d))
    G[i, j] = values
    G[j, i] = values

    minors = leading_minors(G)
    psd = bool(np.all(minors > PSD_TOL))

    rng = make_rng(seed)
    probes = np.vstack([adversarial_grid(d), rng.standard_normal((probe_count, d))])
    probes = normalize_rows(spec, probes)
    norms = spec.evaluate_many(probes)
    model = np.einsum('ij,jk,ik->i', probes, G, probes)
    residual = float(np.max(np.abs(norms * norms - model)))

    return GramResult(matrix=G, psd=psd, max_model_residual=residual, minors=minors)
