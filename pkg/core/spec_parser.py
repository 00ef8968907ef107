"""
范数规范字符串解析
语法: p:<float|inf> | wp:<float|inf>:<w1,...,wd> | quad:<a11,a12,...,add> | poly:<x1,y1;x2,y2;...>
与区域设置无关，小数点为 '.'
"""
import re
from typing import Iterator, List, Optional, Tuple

from .norms import NormSpec, PNorm, WeightedPNorm, Quadratic, PolytopeGauge2D

# p 范数未给定 --dim 时的默认维数
DEFAULT_PNORM_DIM = 2

_NUMBER = re.compile(r'[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z')
_INF = {'inf', '+inf', 'infinity'}


class NormSpecError(ValueError):
    """规范字符串错误，记录出错的 token 及其在原字符串中的位置（从 0 开始）"""

    def __init__(self, message: str, token: str, position: int):
        super().__init__(f"{message}: {token!r} (位置 {position})")
        self.reason = message
        self.token = token
        self.position = position

    def to_dict(self) -> dict:
        return {
            'type': 'NormSpecError',
            'message': self.reason,
            'token': self.token,
            'position': self.position,
        }


def _split(text: str, sep: str, offset: int) -> Iterator[Tuple[str, int]]:
    pos = offset
    for part in text.split(sep):
        yield part, pos
        pos += len(part) + len(sep)


def _number(token: str, position: int, allow_inf: bool = False) -> float:
    if allow_inf and token.lower() in _INF:
        return float('inf')
    if not _NUMBER.match(token):
        raise NormSpecError("无法解析的数字", token, position)
    return float(token)


def _numbers(text: str, offset: int) -> List[float]:
    if not text:
        raise NormSpecError("缺少参数", text, offset)
    return [_number(tok, pos) for tok, pos in _split(text, ',', offset)]


def _check_dim(inferred: int, dim: Optional[int], token: str, position: int) -> None:
    if dim is not None and dim != inferred:
        raise NormSpecError(f"参数推出维数 {inferred}，与 --dim {dim} 冲突", token, position)


def _build(factory, token: str, position: int, *args) -> NormSpec:
    try:
        return factory(*args)
    except NormSpecError:
        raise
    except ValueError as e:
        raise NormSpecError(str(e), token, position) from e


def parse_norm_spec(s: str, dim: Optional[int] = None) -> NormSpec:
    """
    解析规范字符串

    Args:
        s: 规范字符串
        dim: 命令行给出的维数；p 范数必须靠它（缺省为 2），其他族用于一致性检查

    Raises:
        NormSpecError: 字符串格式错误或参数不构成合法范数
    """
    if not s:
        raise NormSpecError("规范字符串为空", s, 0)
    family, colon, rest = s.partition(':')
    if not colon:
        raise NormSpecError("缺少 ':' 分隔符", s, 0)
    offset = len(family) + 1

    if family == 'p':
        p = _number(rest, offset, allow_inf=True)
        d = DEFAULT_PNORM_DIM if dim is None else dim
        return _build(PNorm, rest, offset, p, d)

    if family == 'wp':
        p_text, colon, w_text = rest.partition(':')
        if not colon:
            raise NormSpecError("wp 需要 'wp:<p>:<w1,...,wd>'", rest, offset)
        p = _number(p_text, offset, allow_inf=True)
        w_offset = offset + len(p_text) + 1
        weights = _numbers(w_text, w_offset)
        _check_dim(len(weights), dim, w_text, w_offset)
        return _build(WeightedPNorm, w_text, w_offset, p, tuple(weights))

    if family == 'quad':
        values = _numbers(rest, offset)
        d = int(round(len(values) ** 0.5))
        if d * d != len(values):
            raise NormSpecError(f"元素个数 {len(values)} 不是完全平方数", rest, offset)
        _check_dim(d, dim, rest, offset)
        matrix = tuple(tuple(values[i * d:(i + 1) * d]) for i in range(d))
        return _build(Quadratic, rest, offset, matrix)

    if family == 'poly':
        if not rest:
            raise NormSpecError("缺少顶点", rest, offset)
        points = []
        for tok, pos in _split(rest, ';', offset):
            coords = _numbers(tok, pos)
            if len(coords) != 2:
                raise NormSpecError("顶点必须是 'x,y'", tok, pos)
            points.append((coords[0], coords[1]))
        _check_dim(2, dim, rest, offset)
        return _build(PolytopeGauge2D, rest, offset, tuple(points))

    raise NormSpecError("未知范数族", family, 0)
