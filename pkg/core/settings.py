"""
设置管理模块
配置保存在项目根目录的 config.json，可用环境变量 NORMSCOPE_CONFIG 指定其他路径
"""
import json
import os
import sys
import logging
from pathlib import Path
from typing import Optional

from .norms import MAX_DIM
from .aronszajn import SearchConfig
from .lift3d import DetectConfig

logger = logging.getLogger(__name__)


def get_config_path() -> Path:
    """获取配置文件路径（打包后保存到 exe 同目录）"""
    override = os.environ.get('NORMSCOPE_CONFIG')
    if override:
        return Path(override)
    if getattr(sys, 'frozen', False):
        base_path = Path(sys.executable).parent
    else:
        base_path = Path(__file__).parent.parent
    return base_path / 'config.json'


# 默认设置
DEFAULT_SETTINGS = {
    'seed': 0,
    'num_threads': 8,
    'restarts': 200,             # Aronszajn 搜索重启次数
    'max_iters': 400,            # 单轮 Nelder–Mead 迭代上限
    'eps': 1e-8,                 # 前件容差
    'gap_threshold': 0.05,       # 后件差距阈值
    'penalty': 100.0,            # 罚系数 λ
    'theta_samples': 720,
    'triple_samples': 500,
    'probe_count': 200,
    'subspace_samples': 50,
    'confirm_restarts': 16,      # 欧氏判定后的确认搜索
    'max_dim': MAX_DIM,
}


def _clamp(value, low, high=None):
    value = max(low, value)
    return value if high is None else min(high, value)


class Settings:
    """设置管理器，加载时合并默认值，修改后需显式 save()"""

    def __init__(self, config_path: Optional[Path] = None):
        self.config_path = Path(config_path) if config_path else get_config_path()
        self._data = DEFAULT_SETTINGS.copy()
        self.load()

    def load(self):
        """加载配置文件"""
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    saved = json.load(f)
                self._data.update({k: v for k, v in saved.items() if k in DEFAULT_SETTINGS})
            except (OSError, ValueError) as e:
                logger.warning("读取配置失败 %s: %s", self.config_path, e)

    def save(self):
        """保存配置到文件"""
        try:
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(self._data, f, indent=2, ensure_ascii=False)
        except OSError as e:
            logger.error("保存配置失败: %s", e)

    @property
    def seed(self) -> int:
        """环境变量 NORMSCOPE_SEED 优先于配置文件"""
        env = os.environ.get('NORMSCOPE_SEED')
        if env is not None:
            try:
                return int(env)
            except ValueError:
                logger.warning("忽略无效的 NORMSCOPE_SEED=%r", env)
        return int(self._data.get('seed', 0))

    @seed.setter
    def seed(self, value: int):
        self._data['seed'] = int(value)

    @property
    def num_threads(self) -> int:
        return self._data.get('num_threads', 8)

    @num_threads.setter
    def num_threads(self, value: int):
        self._data['num_threads'] = _clamp(int(value), 1, 100)

    @property
    def restarts(self) -> int:
        return self._data.get('restarts', 200)

    @restarts.setter
    def restarts(self, value: int):
        self._data['restarts'] = _clamp(int(value), 1)

    @property
    def max_iters(self) -> int:
        return self._data.get('max_iters', 400)

    @max_iters.setter
    def max_iters(self, value: int):
        self._data['max_iters'] = _clamp(int(value), 1)

    @property
    def eps(self) -> float:
        return self._data.get('eps', 1e-8)

    @eps.setter
    def eps(self, value: float):
        if value <= 0:
            raise ValueError("eps 必须为正")
        self._data['eps'] = float(value)

    @property
    def gap_threshold(self) -> float:
        return self._data.get('gap_threshold', 0.05)

    @gap_threshold.setter
    def gap_threshold(self, value: float):
        if value <= 0:
            raise ValueError("gap_threshold 必须为正")
        self._data['gap_threshold'] = float(value)

    @property
    def penalty(self) -> float:
        return self._data.get('penalty', 100.0)

    @penalty.setter
    def penalty(self, value: float):
        self._data['penalty'] = _clamp(float(value), 0.0)

    @property
    def theta_samples(self) -> int:
        return self._data.get('theta_samples', 720)

    @theta_samples.setter
    def theta_samples(self, value: int):
        self._data['theta_samples'] = _clamp(int(value), 16)

    @property
    def triple_samples(self) -> int:
        return self._data.get('triple_samples', 500)

    @triple_samples.setter
    def triple_samples(self, value: int):
        self._data['triple_samples'] = _clamp(int(value), 1)

    @property
    def probe_count(self) -> int:
        return self._data.get('probe_count', 200)

    @probe_count.setter
    def probe_count(self, value: int):
        self._data['probe_count'] = _clamp(int(value), 1)

    @property
    def subspace_samples(self) -> int:
        return self._data.get('subspace_samples', 50)

    @subspace_samples.setter
    def subspace_samples(self, value: int):
        self._data['subspace_samples'] = _clamp(int(value), 1)

    @property
    def confirm_restarts(self) -> int:
        return self._data.get('confirm_restarts', 16)

    @confirm_restarts.setter
    def confirm_restarts(self, value: int):
        self._data['confirm_restarts'] = _clamp(int(value), 0)

    @property
    def max_dim(self) -> int:
        return self._data.get('max_dim', MAX_DIM)

    @max_dim.setter
    def max_dim(self, value: int):
        self._data['max_dim'] = _clamp(int(value), 1, MAX_DIM)

    def search_config(self, seed: Optional[int] = None, restarts: Optional[int] = None) -> SearchConfig:
        return SearchConfig(
            restarts=self.restarts if restarts is None else restarts,
            max_iters=self.max_iters,
            eps=self.eps,
            gap_threshold=self.gap_threshold,
            seed=self.seed if seed is None else seed,
            penalty=self.penalty,
            num_threads=self.num_threads,
        )

    def detect_config(self, seed: Optional[int] = None) -> DetectConfig:
        seed = self.seed if seed is None else seed
        return DetectConfig(
            triple_samples=self.triple_samples,
            subspace_samples=self.subspace_samples,
            seed=seed,
            theta_samples=self.theta_samples,
            probe_count=self.probe_count,
            num_threads=self.num_threads,
            max_dim=self.max_dim,
            search=self.search_config(seed),
        )
