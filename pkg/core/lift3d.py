"""
高维提升模块
子空间限制、支撑平面向量、球面参数化残差、n 维欧氏判定与判定结果（Verdict）
"""
import math
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, List, Union
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize, root

from .norms import NormSpec, MAX_DIM, as_rows, as_vector, gauge_normalize, make_rng
from .polarize import TripleWitness, axiom_residuals, recover_gram
from .aronszajn import SearchConfig, ViolationCertificate, search_violation
from .geometry2d import (
    VERDICT_TOL, Basis2D, Detection2D, constancy_deviation, detect_euclidean_2d,
)

logger = logging.getLogger(__name__)


# 子空间基向量的 Gram 行列式下限
INDEPENDENCE_TOL = 1e-10

# 单位向量容差
UNIT_TOL = 1e-8

# 支撑平面允许的最大穿透
SUPPORT_TOL = 1e-6

# 支撑向量粗网格 (极角 × 方位角)
SUPPORT_GRID = 64

# 中心差分步长（root 修正用）
SUPPORT_STEP = 1e-4


@dataclass
class Subspace2D:
    """二维子空间 span{b₁, b₂}，限制范数为 (a, b) ↦ ‖a·b₁ + b·b₂‖"""
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.b1 = as_vector(self.b1)
        self.b2 = as_vector(self.b2, self.b1.size)
        if self.b1.size < 2:
            raise ValueError("二维子空间需要环境维数 ≥ 2")
        B = self.basis
        det = float(np.linalg.det(B @ B.T))
        if det <= INDEPENDENCE_TOL:
            raise ValueError(f"b₁ 与 b₂ 线性相关 (Gram 行列式 {det:.3e})")

    @classmethod
    def coordinate(cls, dim: int, i: int, j: int) -> 'Subspace2D':
        E = np.eye(dim)
        return cls(E[i], E[j])

    @property
    def ambient_dim(self) -> int:
        return self.b1.size

    @property
    def basis(self) -> np.ndarray:
        """2 × n，行向量为 b₁, b₂"""
        return np.vstack([self.b1, self.b2])

    def embed(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.basis

    def as_tuple(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        return tuple(self.b1.tolist()), tuple(self.b2.tolist())


class RestrictedNorm(NormSpec):
    """环境范数在二维子空间上的限制，本身是一个二维范数"""

    family = 'section'

    def __init__(self, parent: NormSpec, subspace: Subspace2D):
        if subspace.ambient_dim != parent.dim:
            raise ValueError(f"子空间维数 {subspace.ambient_dim} 与范数维数 {parent.dim} 不符")
        self.parent = parent
        self.subspace = subspace
        self._basis = subspace.basis

    @property
    def dim(self) -> int:
        return 2

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        return self.parent.evaluate_many(as_rows(X, 2) @ self._basis)

    def describe(self) -> str:
        return f"{self.parent.describe()} | span{{{self.subspace.b1.tolist()}, {self.subspace.b2.tolist()}}}"


def restrict_norm(spec: NormSpec, sub: Subspace2D) -> RestrictedNorm:
    return RestrictedNorm(spec, sub)


@dataclass
class SubspaceVerdict:
    index: int
    subspace: Subspace2D
    detection: Detection2D

    @property
    def deviation(self) -> float:
        return self.detection.max_deviation


@dataclass
class SubspaceSurvey:
    all_euclidean: bool
    worst: Optional[SubspaceVerdict]
    checked: int

    def as_dict(self) -> dict:
        data = {'all_euclidean': self.all_euclidean, 'checked': self.checked, 'worst': None}
        if self.worst is not None:
            b1, b2 = self.worst.subspace.as_tuple()
            data['worst'] = {
                'b1': list(b1),
                'b2': list(b2),
                'deviation': self.worst.deviation,
                'theta': self.worst.detection.worst_theta,
            }
        return data


def survey_subspaces(dim: int, count: int, seed: int) -> List[Subspace2D]:
    """全部坐标平面在前，随后是 count 个随机高斯对经 QR 正交化得到的平面"""
    subs = [Subspace2D.coordinate(dim, i, j) for i in range(dim) for j in range(i + 1, dim)]
    rng = make_rng(seed)
    for G in rng.standard_normal((count, dim, 2)):
        Q, _ = np.linalg.qr(G)
        subs.append(Subspace2D(Q[:, 0], Q[:, 1]))
    return subs


def sample_subspace_verdicts(
    spec: NormSpec,
    count: int,
    seed: int,
    theta_samples: int = 720,
    num_threads: int = 8
) -> SubspaceSurvey:
    """
    在坐标平面与随机平面上逐一运行二维判定

    多线程执行，按编号归并，偏差相同时编号小者为 worst。
    """
    if spec.dim < 3:
        raise ValueError(f"子空间抽样需要 dim ≥ 3，得到 {spec.dim}")
    if count < 1:
        raise ValueError("count 必须 ≥ 1")
    subs = survey_subspaces(spec.dim, count, seed)

    def run(sub: Subspace2D) -> Detection2D:
        return detect_euclidean_2d(restrict_norm(spec, sub), theta_samples)

    with ThreadPoolExecutor(max_workers=max(1, num_threads)) as executor:
        detections = list(executor.map(run, subs))

    deviations = np.array([d.max_deviation for d in detections])
    idx = int(np.argmax(deviations))
    worst = SubspaceVerdict(idx, subs[idx], detections[idx])
    all_euclidean = all(d.verdict for d in detections)
    logger.info("子空间抽样: %d 个平面，最大偏差 %.3e (#%d)", len(subs), deviations[idx], idx)
    return SubspaceSurvey(all_euclidean=all_euclidean, worst=worst, checked=len(subs))


@dataclass
class Frame3D:
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    support_defect: float

    def point(self, theta, phi) -> np.ndarray:
        """sin φ cos θ·e₁ + sin φ sin θ·e₂ + cos φ·e₃（逐元素广播）"""
        theta = np.asarray(theta, dtype=float).ravel()[:, None]
        phi = np.asarray(phi, dtype=float).ravel()[:, None]
        return (np.sin(phi) * np.cos(theta)) * self.e1 + (np.sin(phi) * np.sin(theta)) * self.e2 + np.cos(phi) * self.e3

    def as_dict(self) -> dict:
        return {
            'e1': self.e1.tolist(),
            'e2': self.e2.tolist(),
            'e3': self.e3.tolist(),
            'support_defect': self.support_defect,
        }


def support_defect(spec: NormSpec, e1: np.ndarray, e2: np.ndarray, e3: np.ndarray) -> float:
    """max(0, 1 − ‖e₃ + u‖)，u 取 U 中对数分布半径 × 32 个方向"""
    radii = np.geomspace(1e-3, 2.0, 16)
    angles = np.arange(32) * (2 * math.pi / 32)
    R, A = np.meshgrid(radii, angles, indexing='ij')
    r = R.ravel()[:, None]
    a = A.ravel()[:, None]
    U = r * (np.cos(a) * e1 + np.sin(a) * e2)
    values = spec.evaluate_many(np.vstack([e3[None, :], e3 + U]))
    return float(max(0.0, np.max(1.0 - values)))


def make_frame(spec: NormSpec, e1, e2, e3) -> Frame3D:
    """
    校验三个单位向量并计算支撑缺陷

    Raises:
        ValueError: 维数不是 3 或向量不是单位向量
    """
    if spec.dim != 3:
        raise ValueError(f"Frame3D 需要三维范数，得到 dim={spec.dim}")
    vectors = [as_vector(v, 3) for v in (e1, e2, e3)]
    norms = spec.evaluate_many(np.stack(vectors))
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError(f"e₁, e₂, e₃ 必须是单位向量，范数为 {norms.tolist()}")
    return Frame3D(*vectors, support_defect=support_defect(spec, *vectors))


def _sphere_grid(count: int) -> np.ndarray:
    polar = (np.arange(count) + 0.5) * (math.pi / count)
    azimuth = np.arange(count) * (2 * math.pi / count)
    P, A = np.meshgrid(polar, azimuth, indexing='ij')
    P = P.ravel()
    A = A.ravel()
    return np.column_stack([np.sin(P) * np.cos(A), np.sin(P) * np.sin(A), np.cos(P)])


def _tangent_basis(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = x / np.linalg.norm(x)
    helper = np.eye(3)[int(np.argmin(np.abs(x)))]
    t1 = np.cross(x, helper)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(x, t1)


def find_support_vector(spec: NormSpec, U: Subspace2D, theta_samples: int = 720) -> Frame3D:
    """
    支撑平面 e₃ + U
    e₃ 取线性泛函 f(x) = n·x（n = b₁ × b₂，在 U 上为零）在单位球面上的最大点:
    64×64 球面粗网格 → 切平面坐标上的 Nelder–Mead → 方向导数方程 root 修正。
    e₁, e₂ 取 U 上二维判定得到的基。

    Raises:
        ValueError: 维数不是 3，或 U 不是欧氏的
        RuntimeError: 修正后支撑缺陷仍超过 1e-6
    """
    if spec.dim != 3:
        raise ValueError(f"find_support_vector 需要三维范数，得到 dim={spec.dim}")
    detection = detect_euclidean_2d(restrict_norm(spec, U), theta_samples)
    if not detection.verdict:
        raise ValueError(f"子空间 U 不是欧氏的 (偏差 {detection.max_deviation:.3e})，无法构造 Frame3D")
    normal = np.cross(U.b1, U.b2)

    def ratio_many(X: np.ndarray) -> np.ndarray:
        return (X @ normal) / spec.evaluate_many(X)

    grid = _sphere_grid(SUPPORT_GRID)
    x0 = grid[int(np.argmax(ratio_many(grid)))]
    t1, t2 = _tangent_basis(x0)

    def lift(y: np.ndarray) -> np.ndarray:
        return x0 + y[0] * t1 + y[1] * t2

    def objective(y: np.ndarray) -> float:
        return -float(ratio_many(lift(y)[None, :])[0])

    result = minimize(objective, np.zeros(2), method='Nelder-Mead',
                      options={'xatol': 1e-13, 'fatol': 1e-16, 'maxiter': 4000,
                               'initial_simplex': np.array([[0.0, 0.0], [0.05, 0.0], [0.0, 0.05]])})
    y = result.x

    # 光滑点处最大点满足沿 b₁, b₂ 的方向导数为零
    def stationarity(z: np.ndarray) -> np.ndarray:
        x = lift(z)
        x = x / float(spec.evaluate_many(x[None, :])[0])
        h = SUPPORT_STEP
        n = spec.evaluate_many(np.stack([x + h * U.b1, x - h * U.b1, x + h * U.b2, x - h * U.b2]))
        return np.array([n[0] - n[1], n[2] - n[3]]) / (2 * h)

    polished = root(stationarity, y, method='hybr')
    if polished.success and np.all(np.isfinite(polished.x)) and objective(polished.x) <= objective(y) + 1e-12:
        y = polished.x
    else:
        logger.debug("支撑向量 root 修正未采用: %s", polished.message)

    e3 = gauge_normalize(spec, lift(y))
    if float(normal @ e3) < 0:
        e3 = -e3
    e1 = U.embed(detection.basis.e1)
    e2 = U.embed(detection.basis.e2)
    frame = make_frame(spec, e1, e2, e3)
    if frame.support_defect > SUPPORT_TOL:
        raise RuntimeError(f"支撑向量修正失败: 支撑缺陷 {frame.support_defect:.3e}")
    logger.debug("支撑向量 e₃=%s, 缺陷 %.3e", e3.tolist(), frame.support_defect)
    return frame


@dataclass
class SphereResidual:
    residual: float
    worst_theta: float
    worst_phi: float
    max_section_deviation: float

    def as_dict(self) -> dict:
        return {
            'residual': self.residual,
            'worst_theta': self.worst_theta,
            'worst_phi': self.worst_phi,
            'max_section_deviation': self.max_section_deviation,
        }


def sphere_param_residual(
    spec: NormSpec,
    frame: Frame3D,
    grid: Tuple[int, int] = (64, 64),
    section_samples: int = 180
) -> SphereResidual:
    """
    单位球面参数化残差 |‖sin φ cos θ·e₁ + sin φ sin θ·e₂ + cos φ·e₃‖ − 1|，
    θ ∈ [0, π)，φ ∈ [0, 2π)；同时对每个 θ 把 W_θ = span{p_θ, e₃} 上的限制送入二维判定
    """
    theta_count, phi_count = grid
    if theta_count < 1 or phi_count < 1:
        raise ValueError("网格大小必须为正")
    thetas = np.arange(theta_count) * (math.pi / theta_count)
    phis = np.arange(phi_count) * (2 * math.pi / phi_count)
    T, P = np.meshgrid(thetas, phis, indexing='ij')
    deviation = np.abs(spec.evaluate_many(frame.point(T, P)) - 1.0)
    idx = int(np.argmax(deviation))

    section = 0.0
    for theta in thetas:
        p_theta = math.cos(theta) * frame.e1 + math.sin(theta) * frame.e2
        restricted = restrict_norm(spec, Subspace2D(p_theta, frame.e3))
        section = max(section, detect_euclidean_2d(restricted, section_samples).max_deviation)

    return SphereResidual(
        residual=float(deviation[idx]),
        worst_theta=float(T.ravel()[idx]),
        worst_phi=float(P.ravel()[idx]),
        max_section_deviation=float(section),
    )


@dataclass
class SectionWitness:
    """二维截面上 ‖cos θ·e₁ + sin θ·e₂‖ ≠ 1 的见证（e₁, e₂ 为截面坐标）"""
    b1: Tuple[float, ...]
    b2: Tuple[float, ...]
    e1: Tuple[float, float]
    e2: Tuple[float, float]
    theta: float
    deviation: float

    @classmethod
    def from_detection(cls, sub: Subspace2D, detection: Detection2D) -> 'SectionWitness':
        b1, b2 = sub.as_tuple()
        return cls(
            b1=b1, b2=b2,
            e1=tuple(detection.basis.e1.tolist()),
            e2=tuple(detection.basis.e2.tolist()),
            theta=detection.worst_theta,
            deviation=detection.max_deviation,
        )

    def recompute(self, spec: NormSpec) -> float:
        """基不满足单位性或等腰正交性时返回 0"""
        restricted = restrict_norm(spec, Subspace2D(self.b1, self.b2))
        e1 = np.asarray(self.e1, dtype=float)
        e2 = np.asarray(self.e2, dtype=float)
        n = restricted.evaluate_many(np.stack([e1, e2, e1 + e2, e1 - e2]))
        if abs(n[0] - 1) > UNIT_TOL or abs(n[1] - 1) > UNIT_TOL or abs(n[2] - n[3]) > UNIT_TOL:
            return 0.0
        return float(constancy_deviation(restricted, Basis2D(e1, e2), self.theta)[0])

    def to_dict(self) -> dict:
        return {
            'kind': 'section',
            'b1': list(self.b1),
            'b2': list(self.b2),
            'e1': list(self.e1),
            'e2': list(self.e2),
            'theta': self.theta,
            'deviation': self.deviation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SectionWitness':
        return cls(
            b1=tuple(data['b1']), b2=tuple(data['b2']),
            e1=tuple(data['e1']), e2=tuple(data['e2']),
            theta=data['theta'], deviation=data['deviation'],
        )


Witness = Union[ViolationCertificate, SectionWitness, TripleWitness]

_WITNESS_KINDS = {
    'aronszajn': ViolationCertificate,
    'section': SectionWitness,
    'triple': TripleWitness,
}


@dataclass
class Verdict:
    euclidean: bool
    gram: Optional[np.ndarray] = None
    witness: Optional[Witness] = None
    tolerances: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if (self.gram is None) == (self.witness is None):
            raise ValueError("Verdict 必须恰好携带 gram 或 witness 之一")
        if self.euclidean != (self.gram is not None):
            raise ValueError("欧氏判定携带 Gram 矩阵，非欧氏判定携带见证")
        if self.gram is not None:
            self.gram = np.asarray(self.gram, dtype=float)

    def to_dict(self) -> dict:
        return {
            'euclidean': self.euclidean,
            'gram': None if self.gram is None else self.gram.tolist(),
            'witness': None if self.witness is None else self.witness.to_dict(),
            'tolerances': dict(self.tolerances),
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Verdict':
        witness = None
        if data.get('witness') is not None:
            kind = data['witness'].get('kind')
            if kind not in _WITNESS_KINDS:
                raise ValueError(f"未知见证类型: {kind}")
            witness = _WITNESS_KINDS[kind].from_dict(data['witness'])
        gram = data.get('gram')
        return cls(
            euclidean=bool(data['euclidean']),
            gram=None if gram is None else np.asarray(gram, dtype=float),
            witness=witness,
            tolerances=dict(data.get('tolerances', {})),
            seed=int(data.get('seed', 0)),
        )


@dataclass
class DetectConfig:
    triple_samples: int = 500
    subspace_samples: int = 50
    seed: int = 0
    theta_samples: int = 720
    probe_count: int = 200
    tolerance: float = 1e-7
    num_threads: int = 8
    max_dim: int = MAX_DIM
    search: SearchConfig = field(default_factory=SearchConfig)


def certificate_spec(spec: NormSpec, cert: ViolationCertificate) -> NormSpec:
    """证书所在的范数：记录了子空间时为限制范数"""
    if cert.subspace is None:
        return spec
    return restrict_norm(spec, Subspace2D(*cert.subspace))


def verify_witness(spec: NormSpec, verdict: Verdict) -> bool:
    """
    按见证自身的标签重新检验

    欧氏判定时重新恢复 Gram 矩阵并与记录值比较。
    """
    tol = verdict.tolerances
    if verdict.euclidean:
        fresh = recover_gram(spec, 1, verdict.seed).matrix
        if fresh.shape != verdict.gram.shape:
            return False
        return bool(np.max(np.abs(fresh - verdict.gram)) <= 1e-8 * max(1.0, float(np.max(np.abs(fresh)))))
    w = verdict.witness
    if isinstance(w, ViolationCertificate):
        return w.recheck(certificate_spec(spec, w))
    if isinstance(w, SectionWitness):
        return w.recompute(spec) > tol.get('section', VERDICT_TOL)
    if isinstance(w, TripleWitness):
        return w.recompute(spec) > tol.get('axiom', 1e-7)
    return False


def _tolerances(config: DetectConfig) -> dict:
    return {
        'axiom': config.tolerance,
        'gram_model': config.tolerance,
        'section': VERDICT_TOL,
        'eps': config.search.eps,
        'gap_threshold': config.search.gap_threshold,
    }


def _search_on(spec: NormSpec, config: DetectConfig) -> Optional[ViolationCertificate]:
    search = replace(config.search, seed=config.seed, num_threads=config.num_threads)
    return search_violation(spec, search)


def detect_euclidean(spec: NormSpec, config: Optional[DetectConfig] = None) -> Verdict:
    """
    n 维欧氏判定

    dim 1 平凡为欧氏；dim 2 交给二维判定；dim ≥ 3 要求三元组公理残差、
    Gram 模型残差与子空间抽样同时通过。非欧氏时附带最强的见证:
    Aronszajn 证书 > 截面见证 > 三元组。
    """
    config = config or DetectConfig()
    if spec.dim > config.max_dim:
        raise ValueError(f"维数 {spec.dim} 超过配置上限 {config.max_dim}")
    tolerances = _tolerances(config)
    seed = int(config.seed)

    if spec.dim == 1:
        gram = recover_gram(spec, config.probe_count, seed)
        return Verdict(True, gram=gram.matrix, tolerances=tolerances, seed=seed)

    if spec.dim == 2:
        detection = detect_euclidean_2d(spec, config.theta_samples)
        if detection.verdict:
            gram = recover_gram(spec, config.probe_count, seed)
            return Verdict(True, gram=gram.matrix, tolerances=tolerances, seed=seed)
        witness = _search_on(spec, config) or SectionWitness.from_detection(Subspace2D.coordinate(2, 0, 1), detection)
        return Verdict(False, witness=witness, tolerances=tolerances, seed=seed)

    axioms = axiom_residuals(spec, config.triple_samples, seed)
    gram = recover_gram(spec, config.probe_count, seed)
    survey = sample_subspace_verdicts(spec, config.subspace_samples, seed, config.theta_samples, config.num_threads)
    euclidean = (
        axioms.max_residual < config.tolerance
        and gram.psd
        and gram.max_model_residual < config.tolerance
        and survey.all_euclidean
    )
    logger.info("%s: 公理残差 %.3e, Gram 模型残差 %.3e, 子空间全部欧氏=%s",
                spec.describe(), axioms.max_residual, gram.max_model_residual, survey.all_euclidean)
    if euclidean:
        return Verdict(True, gram=gram.matrix, tolerances=tolerances, seed=seed)

    witness: Witness = axioms.worst
    if not survey.all_euclidean:
        sub = survey.worst.subspace
        cert = _search_on(restrict_norm(spec, sub), config)
        if cert is not None:
            cert.subspace = sub.as_tuple()
            witness = cert
        else:
            witness = SectionWitness.from_detection(sub, survey.worst.detection)
    return Verdict(False, witness=witness, tolerances=tolerances, seed=seed)
