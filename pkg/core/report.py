"""
报告模块
汇总三种判据，生成 JSON 报告（浮点数 17 位有效数字，可无损往返）
"""
import json
import math
import time
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .norms import NormSpec, norm_axiom_residuals
from .polarize import axiom_residuals, parallelogram_summary, recover_gram
from .aronszajn import ViolationCertificate, search_violation
from .lift3d import (
    DetectConfig, Subspace2D, Verdict, detect_euclidean, find_support_vector,
    restrict_norm, sphere_param_residual,
)

logger = logging.getLogger(__name__)


# 平行四边形判据阈值（平方形式）
PARALLELOGRAM_TOL = 1e-7


def _format_float(x: float) -> str:
    if math.isnan(x):
        return 'NaN'
    if math.isinf(x):
        return 'Infinity' if x > 0 else '-Infinity'
    # 尾数固定 17 位有效数字，整数值也保持浮点字面量
    return f"{x:.16e}"


def _emit(value, level: int = 0) -> str:
    pad = '  ' * (level + 1)
    end = '  ' * level
    if value is None:
        return 'null'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_emit(v, level + 1)}" for k, v in value.items()]
        return '{\n' + ',\n'.join(items) + '\n' + end + '}'
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in value):
            return '[' + ', '.join(_emit(v, level + 1) for v in value) + ']'
        return '[\n' + ',\n'.join(pad + _emit(v, level + 1) for v in value) + '\n' + end + ']'
    raise TypeError(f"无法序列化的类型: {type(value).__name__}")


def dumps(value) -> str:
    """确定性 JSON 文本，浮点数 17 位有效数字"""
    return _emit(value) + '\n'


@dataclass
class Report:
    tool_version: str
    norm_spec_string: str
    verdict: dict
    summaries: dict = field(default_factory=dict)
    criteria: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def exit_code(self) -> int:
        """0 = 欧氏，1 = 非欧氏（附见证）"""
        return 0 if self.verdict['euclidean'] else 1

    def verdict_object(self) -> Verdict:
        return Verdict.from_dict(self.verdict)

    def to_dict(self) -> dict:
        return {
            'tool_version': self.tool_version,
            'norm_spec_string': self.norm_spec_string,
            'seed': self.seed,
            'verdict': self.verdict,
            'criteria': self.criteria,
            'summaries': self.summaries,
            'timings': self.timings,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> 'Report':
        data = json.loads(text)
        return cls(
            tool_version=data['tool_version'],
            norm_spec_string=data['norm_spec_string'],
            verdict=data['verdict'],
            summaries=data.get('summaries', {}),
            criteria=data.get('criteria', {}),
            timings=data.get('timings', {}),
            seed=data.get('seed', 0),
        )


class _PhaseTimer:
    def __init__(self):
        self.timings = {}

    def run(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[name] = (time.perf_counter() - start) * 1000.0
        logger.info("阶段 %s 完成 (%.1f ms)", name, self.timings[name])
        return result


def _search_target(spec: NormSpec) -> Optional[NormSpec]:
    """确认搜索所用的二维范数: dim 2 为自身，高维取第一个坐标平面"""
    if spec.dim == 2:
        return spec
    if spec.dim >= 3:
        return restrict_norm(spec, Subspace2D.coordinate(spec.dim, 0, 1))
    return None


def run_analyze(
    spec: NormSpec,
    config: Optional[DetectConfig] = None,
    confirm_restarts: int = 16,
    include_timings: bool = False,
    spec_string: Optional[str] = None
) -> Report:
    """
    并列给出三种判据: Aronszajn 搜索、极化公理、平行四边形采样

    Args:
        confirm_restarts: 判定为欧氏时，在二维（截面）上追加的确认搜索重启次数
        include_timings: 是否在报告中写入各阶段耗时（写入后报告不再逐字节确定）
    """
    config = config or DetectConfig()
    seed = int(config.seed)
    timer = _PhaseTimer()

    verdict = timer.run('detect', detect_euclidean, spec, config)
    norm_axioms = timer.run('norm_axioms', norm_axiom_residuals, spec, config.triple_samples, seed)
    axioms = timer.run('polarization', axiom_residuals, spec, config.triple_samples, seed)
    gram = timer.run('gram', recover_gram, spec, config.probe_count, seed)
    parallelogram = timer.run('parallelogram', parallelogram_summary, spec, config.triple_samples, seed)

    cert = verdict.witness if isinstance(verdict.witness, ViolationCertificate) else None
    aronszajn = {'searched': False, 'found': cert is not None, 'restarts': 0}
    if cert is not None:
        aronszajn.update(searched=True, restarts=cert.search_trace.restarts_used,
                         gap=cert.quadruple.diag_plus_gap)
    else:
        target = _search_target(spec)
        if target is not None and confirm_restarts > 0:
            search = replace(config.search, seed=seed, restarts=confirm_restarts, num_threads=config.num_threads)
            found = timer.run('aronszajn', search_violation, target, search)
            aronszajn.update(searched=True, found=found is not None, restarts=confirm_restarts)
            if found is not None:
                aronszajn['gap'] = found.quadruple.diag_plus_gap

    polarization_ok = axioms.max_residual < config.tolerance and gram.psd and gram.max_model_residual < config.tolerance
    criteria = {
        'aronszajn': not aronszajn['found'],
        'polarization': bool(polarization_ok),
        'parallelogram': parallelogram.max_residual < PARALLELOGRAM_TOL,
    }
    criteria['agree'] = len(set(criteria.values())) == 1
    if not criteria['agree']:
        logger.warning("三种判据不一致: %s", criteria)

    summaries = {
        'dim': spec.dim,
        'norm_axioms': norm_axioms.as_dict(),
        'polarization': axioms.as_dict(),
        'gram': gram.as_dict(),
        'parallelogram': parallelogram.as_dict(),
        'aronszajn': aronszajn,
    }

    if spec.dim == 3 and verdict.euclidean:
        try:
            frame = timer.run('support_vector', find_support_vector, spec,
                              Subspace2D.coordinate(3, 0, 1), config.theta_samples)
            sphere = timer.run('sphere', sphere_param_residual, spec, frame)
            summaries['lift3d'] = {'frame': frame.as_dict(), 'sphere': sphere.as_dict()}
        except RuntimeError as e:
            logger.warning("三维提升失败: %s", e)
            summaries['lift3d'] = {'error': str(e)}

    return Report(
        tool_version=__version__,
        norm_spec_string=spec_string if spec_string is not None else spec.describe(),
        verdict=verdict.to_dict(),
        summaries=summaries,
        criteria=criteria,
        timings=timer.timings if include_timings else {},
        seed=seed,
    )
