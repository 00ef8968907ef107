"""
Aronszajn 判据模块
四元组残差、违例判定、无导数多起点搜索反例（Nelder–Mead + 二分修正）
"""
import math
import logging
from dataclasses import dataclass, asdict
from typing import Optional, Tuple, List
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize, bisect

from .norms import NormSpec, as_vector, gauge_normalize, normalize_rows

logger = logging.getLogger(__name__)


# 退化构型阈值: ‖v₁ − w₁‖ 低于此值直接拒绝
DEGENERATE_TOL = 1e-6

# 修正阶段 β₂ 的扫描点数（覆盖 [β₂ − π, β₂ + π]）
POLISH_SCAN = 512

# 单次爬升的 Nelder–Mead 轮数上限（差距不再增大时提前停止）
MAX_CLIMB_ROUNDS = 20

# 差距的最小有效改进
GAP_IMPROVEMENT = 1e-9

# 胜出重启的后续改进: 尝试次数上限与连续无改进的容忍次数
REFINE_ATTEMPTS = 40
REFINE_PATIENCE = 12


@dataclass
class AronszajnQuadruple:
    """两个平行四边形 (v₁, w₁) 与 (v₂, w₂) 及其四项残差"""
    v1: np.ndarray
    w1: np.ndarray
    v2: np.ndarray
    w2: np.ndarray
    side_v_residual: float
    side_w_residual: float
    diag_minus_residual: float
    diag_plus_gap: float

    def recompute(self, spec: NormSpec) -> 'AronszajnQuadruple':
        return criterion_residuals(spec, self.v1, self.w1, self.v2, self.w2)

    def to_dict(self) -> dict:
        return {
            'v1': self.v1.tolist(),
            'w1': self.w1.tolist(),
            'v2': self.v2.tolist(),
            'w2': self.w2.tolist(),
            'side_v_residual': self.side_v_residual,
            'side_w_residual': self.side_w_residual,
            'diag_minus_residual': self.diag_minus_residual,
            'diag_plus_gap': self.diag_plus_gap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'AronszajnQuadruple':
        return cls(
            v1=np.asarray(data['v1'], dtype=float),
            w1=np.asarray(data['w1'], dtype=float),
            v2=np.asarray(data['v2'], dtype=float),
            w2=np.asarray(data['w2'], dtype=float),
            side_v_residual=data['side_v_residual'],
            side_w_residual=data['side_w_residual'],
            diag_minus_residual=data['diag_minus_residual'],
            diag_plus_gap=data['diag_plus_gap'],
        )


def criterion_residuals(spec: NormSpec, v1, w1, v2, w2) -> AronszajnQuadruple:
    """直接求范数得到四元组的两条边、减对角线残差与加对角线差距"""
    v1, w1, v2, w2 = (as_vector(x, spec.dim) for x in (v1, w1, v2, w2))
    n = spec.evaluate_many(np.stack([v1, v2, w1, w2, v1 - w1, v2 - w2, v1 + w1, v2 + w2]))
    return AronszajnQuadruple(
        v1=v1, w1=w1, v2=v2, w2=w2,
        side_v_residual=float(abs(n[0] - n[1])),
        side_w_residual=float(abs(n[2] - n[3])),
        diag_minus_residual=float(abs(n[4] - n[5])),
        diag_plus_gap=float(abs(n[6] - n[7])),
    )


def is_violation(q: AronszajnQuadruple, eps: float, gap_threshold: float) -> bool:
    """前件在 eps 内成立而后件差距 ≥ gap_threshold"""
    if eps <= 0 or gap_threshold <= 0:
        raise ValueError("eps 与 gap_threshold 必须为正")
    return (
        q.side_v_residual <= eps
        and q.side_w_residual <= eps
        and q.diag_minus_residual <= eps
        and q.diag_plus_gap >= gap_threshold
    )


@dataclass
class SearchConfig:
    restarts: int = 200
    max_iters: int = 400
    eps: float = 1e-8
    gap_threshold: float = 0.05
    seed: int = 0
    penalty: float = 100.0
    num_threads: int = 8
    s_min: float = 0.1


@dataclass
class SearchTrace:
    seed: int
    restarts_used: int
    objective_evals: int


@dataclass
class ViolationCertificate:
    """Aronszajn 判据失败的见证"""
    quadruple: AronszajnQuadruple
    eps_used: float
    gap_threshold_used: float
    search_trace: SearchTrace
    restart_index: int = 0
    # 在限制范数上找到时，记录二维子空间的基 (b₁, b₂)
    subspace: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    def recheck(self, spec: NormSpec) -> bool:
        """从原始向量重新计算全部残差并判定"""
        fresh = self.quadruple.recompute(spec)
        return is_violation(fresh, self.eps_used, self.gap_threshold_used)

    def to_dict(self) -> dict:
        return {
            'kind': 'aronszajn',
            'quadruple': self.quadruple.to_dict(),
            'eps_used': self.eps_used,
            'gap_threshold_used': self.gap_threshold_used,
            'search_trace': asdict(self.search_trace),
            'restart_index': self.restart_index,
            'subspace': None if self.subspace is None else [list(b) for b in self.subspace],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ViolationCertificate':
        sub = data.get('subspace')
        return cls(
            quadruple=AronszajnQuadruple.from_dict(data['quadruple']),
            eps_used=data['eps_used'],
            gap_threshold_used=data['gap_threshold_used'],
            search_trace=SearchTrace(**data['search_trace']),
            restart_index=data.get('restart_index', 0),
            subspace=None if sub is None else (tuple(sub[0]), tuple(sub[1])),
        )


def _directions(angles: np.ndarray) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    return np.column_stack([np.cos(angles), np.sin(angles)])


class _QuadrupleObjective:
    """
    参数化 x = (α₁, β₁, s, α₂, β₂):
    v₁ = unit(α₁), w₁ = s·unit(β₁), v₂ = unit(α₂), w₂ = s·unit(β₂)，
    两条边的相等由构造保证，只剩减对角线一个约束（罚函数 λ·残差²）
    """

    def __init__(self, spec: NormSpec, penalty: float, s_min: float):
        self.spec = spec
        self.penalty = penalty
        self.s_min = s_min

    def clip_s(self, s: float) -> float:
        return min(1.0, max(self.s_min, float(s)))

    def vectors(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        units = normalize_rows(self.spec, _directions([x[0], x[1], x[3], x[4]]))
        s = self.clip_s(x[2])
        return units[0], s * units[1], units[2], s * units[3]

    def __call__(self, x: np.ndarray) -> float:
        v1, w1, v2, w2 = self.vectors(x)
        n = self.spec.evaluate_many(np.stack([v1 - w1, v2 - w2, v1 + w1, v2 + w2]))
        if n[0] < DEGENERATE_TOL:
            return 10.0
        gap = abs(n[2] - n[3])
        return -(gap - self.penalty * (n[0] - n[1]) ** 2)


def _polish(objective: _QuadrupleObjective, x: np.ndarray) -> np.ndarray:
    """
    固定 ‖w₂‖，在 β₂ 上二分使 ‖v₂ − w₂‖ = ‖v₁ − w₁‖

    β₂ 绕一圈时 ‖v₂ − s·unit(β₂)‖ 取遍 [1 − s, 1 + s]，而由三角不等式目标值也在此区间，
    所以一定存在变号区间；取离当前 β₂ 最近的那个。
    """
    spec = objective.spec
    v1, w1, v2, _ = objective.vectors(x)
    s = objective.clip_s(x[2])
    target = float(spec.evaluate_many((v1 - w1)[None, :])[0])

    offsets = np.linspace(-math.pi, math.pi, POLISH_SCAN + 1)
    betas = x[4] + offsets
    W2 = s * normalize_rows(spec, _directions(betas))
    g = spec.evaluate_many(v2[None, :] - W2) - target

    polished = np.array(x, dtype=float)
    exact = np.nonzero(g == 0.0)[0]
    change = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if len(exact):
        k = exact[np.argmin(np.abs(offsets[exact]))]
        polished[4] = betas[k]
        return polished
    if not len(change):
        return polished
    k = change[np.argmin(np.abs(offsets[change] + 0.5 * (offsets[1] - offsets[0])))]

    def gap_fn(beta: float) -> float:
        w2 = s * gauge_normalize(spec, _directions([beta])[0])
        return float(spec.evaluate_many((v2 - w2)[None, :])[0]) - target

    try:
        polished[4] = bisect(gap_fn, betas[k], betas[k + 1], xtol=1e-15, maxiter=200)
    except (ValueError, RuntimeError) as e:
        logger.debug("β₂ 二分修正失败: %s", e)
    return polished


def _initial_point(rng: np.random.Generator, config: SearchConfig) -> np.ndarray:
    two_pi = 2.0 * math.pi
    return np.array([
        rng.uniform(0, two_pi), rng.uniform(0, two_pi),
        rng.uniform(config.s_min, 1.0),
        rng.uniform(0, two_pi), rng.uniform(0, two_pi),
    ])


def _climb(
    objective: _QuadrupleObjective,
    config: SearchConfig,
    x: np.ndarray
) -> Tuple[Optional[AronszajnQuadruple], np.ndarray, int]:
    """
    Nelder–Mead + β₂ 修正，成功后缩小单纯形继续爬升，直到差距不再增大

    Returns:
        (最好的违例四元组或 None, 对应参数, 目标函数调用次数)
    """
    spec = objective.spec
    steps = np.array([0.5, 0.5, 0.2, 0.5, 0.5])
    best, best_x = None, np.array(x, dtype=float)
    nfev = 0
    for _ in range(MAX_CLIMB_ROUNDS):
        result = minimize(
            objective, x, method='Nelder-Mead',
            options={
                'maxiter': config.max_iters,
                'initial_simplex': np.vstack([x, x + np.diag(steps)]),
                'xatol': 1e-10,
                'fatol': 1e-12,
            },
        )
        nfev += int(result.nfev)
        x = _polish(objective, result.x)
        v1, w1, v2, w2 = objective.vectors(x)
        if float(spec.evaluate_many((v1 - w1)[None, :])[0]) < DEGENERATE_TOL:
            break
        quad = criterion_residuals(spec, v1, w1, v2, w2)
        if not is_violation(quad, config.eps, config.gap_threshold):
            break
        if best is not None and quad.diag_plus_gap <= best.diag_plus_gap + GAP_IMPROVEMENT:
            break
        best, best_x = quad, x
        steps = steps * 0.2
    return best, best_x, nfev


def _run_restart(
    spec: NormSpec,
    config: SearchConfig,
    index: int,
    seed_seq: np.random.SeedSequence
) -> Tuple[int, Optional[AronszajnQuadruple], np.ndarray, int]:
    """单次重启（供多线程调用）"""
    rng = np.random.default_rng(seed_seq)
    objective = _QuadrupleObjective(spec, config.penalty, config.s_min)
    quad, x, nfev = _climb(objective, config, _initial_point(rng, config))
    return index, quad, x, nfev


def _refine(
    spec: NormSpec,
    config: SearchConfig,
    quad: AronszajnQuadruple,
    x: np.ndarray,
    seed_seq: np.random.SeedSequence
) -> Tuple[AronszajnQuadruple, int]:
    """
    对胜出的重启继续提高差距: 新起点与当前最优点的扰动交替尝试，
    连续 REFINE_PATIENCE 次没有改进即停止
    """
    rng = np.random.default_rng(seed_seq)
    objective = _QuadrupleObjective(spec, config.penalty, config.s_min)
    jitter = np.array([0.3, 0.3, 0.1, 0.3, 0.3])
    nfev = 0
    stale = 0
    for attempt in range(REFINE_ATTEMPTS):
        if stale >= REFINE_PATIENCE:
            break
        if attempt % 2 == 0:
            x0 = _initial_point(rng, config)
        else:
            x0 = x + rng.normal(0.0, jitter)
            x0[2] = objective.clip_s(x0[2])
        cand, cand_x, n = _climb(objective, config, x0)
        nfev += n
        if cand is not None and cand.diag_plus_gap > quad.diag_plus_gap + GAP_IMPROVEMENT:
            quad, x = cand, cand_x
            stale = 0
        else:
            stale += 1
    return quad, nfev


def search_violation(spec: NormSpec, config: SearchConfig) -> Optional[ViolationCertificate]:
    """
    多起点搜索 Aronszajn 违例四元组

    各次重启使用 SeedSequence(seed).spawn 派生的独立子种子，按 num_threads 分批并行；
    取编号最小的成功重启，再用它自己的子种子继续提高差距，结果与调度无关。
    找不到时返回 None（不代表范数是欧氏的）。
    """
    if spec.dim != 2:
        raise ValueError(f"search_violation 需要二维范数，得到 dim={spec.dim}；高维请先用 lift3d.restrict_norm 限制")
    if config.restarts < 1:
        raise ValueError("restarts 必须 ≥ 1")

    children = np.random.SeedSequence(int(config.seed)).spawn(config.restarts)
    chunk = max(1, config.num_threads)
    evals = {}

    with ThreadPoolExecutor(max_workers=chunk) as executor:
        for start in range(0, config.restarts, chunk):
            indices = range(start, min(start + chunk, config.restarts))
            futures = [executor.submit(_run_restart, spec, config, i, children[i]) for i in indices]
            results = {}
            for future in futures:
                index, quad, x, nfev = future.result()
                results[index] = (quad, x)
                evals[index] = nfev

            found: List[int] = sorted(i for i, (q, _) in results.items() if q is not None)
            if found:
                best = found[0]
                quad, x = results[best]
                quad, refine_evals = _refine(spec, config, quad, x, children[best].spawn(1)[0])
                trace = SearchTrace(
                    seed=int(config.seed),
                    restarts_used=best + 1,
                    objective_evals=sum(evals[i] for i in range(best + 1)) + refine_evals,
                )
                logger.info("找到 Aronszajn 违例: 重启 #%d, gap=%.6f", best, quad.diag_plus_gap)
                return ViolationCertificate(
                    quadruple=quad,
                    eps_used=config.eps,
                    gap_threshold_used=config.gap_threshold,
                    search_trace=trace,
                    restart_index=best,
                )
            logger.debug("重启 %d-%d 未找到违例", indices[0], indices[-1])

    logger.info("%d 次重启内未找到 Aronszajn 违例", config.restarts)
    return None
