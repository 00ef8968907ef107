"""
NormScope - 判定有限维范数是否为欧氏范数
入口文件

    python main.py analyze --norm p:1 --dim 2 --seed 42 --out report.json
    python main.py search --norm p:4 --restarts 50
    python main.py render --norm p:1 --witness report.json --out fig.svg

退出码: 0 = 欧氏（或未找到反例），1 = 非欧氏且附见证，2 = 错误
"""
import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from core import __version__
from core.settings import Settings
from core.spec_parser import NormSpecError, parse_norm_spec
from core.aronszajn import search_violation
from core.lift3d import Subspace2D, restrict_norm
from core.report import Report, dumps, run_analyze
from core.svg import render_svg

logger = logging.getLogger('normscope')

EXIT_ERROR = 2


def write_atomic(path: str, text: str) -> None:
    """先写同目录临时文件再 os.replace，避免留下半截文件"""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path('.')
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_output(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
        logger.info("已写入 %s", out)
    else:
        sys.stdout.write(text)


def _section(value: str):
    try:
        i, j = (int(x) for x in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--section 需要 'i,j'，得到 {value!r}")
    return i, j


def cmd_analyze(args, settings: Settings) -> int:
    spec = parse_norm_spec(args.norm, args.dim)
    config = settings.detect_config(args.seed)
    report = run_analyze(spec, config, settings.confirm_restarts, args.timings, args.norm)
    _emit_output(report.to_json(), args.out)
    return report.exit_code


def cmd_search(args, settings: Settings) -> int:
    spec = parse_norm_spec(args.norm, args.dim)
    target = spec
    if spec.dim != 2:
        if args.section is None:
            raise ValueError(f"dim={spec.dim} 时需要 --section i,j 指定搜索的坐标平面")
        target = restrict_norm(spec, Subspace2D.coordinate(spec.dim, *args.section))
    config = settings.search_config(args.seed, args.restarts)
    cert = search_violation(target, config)
    if cert is not None and target is not spec:
        cert.subspace = target.subspace.as_tuple()
    payload = {
        'tool_version': __version__,
        'norm_spec_string': args.norm,
        'seed': config.seed,
        'certificate': None if cert is None else cert.to_dict(),
    }
    _emit_output(dumps(payload), args.out)
    return 0 if cert is None else 1


def cmd_render(args, settings: Settings) -> int:
    spec = parse_norm_spec(args.norm, args.dim)
    verdict = None
    if args.witness:
        with open(args.witness, 'r', encoding='utf-8') as f:
            verdict = Report.from_json(f.read()).verdict_object()
    svg = render_svg(spec, verdict, args.section)
    write_atomic(args.out, svg)
    logger.info("已写入 %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='normscope', description='判定有限维范数是否为欧氏范数')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='输出调试日志到 stderr')
    parser.add_argument('--config', help='配置文件路径（默认项目根目录 config.json）')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p):
        p.add_argument('--norm', required=True, help='范数规范字符串，如 p:2、quad:1,0.5,0.5,1')
        p.add_argument('--dim', type=int, help='维数（p 范数缺省为 2）')
        p.add_argument('--seed', type=int, help='随机种子（缺省取 NORMSCOPE_SEED 或配置文件）')

    p = sub.add_parser('analyze', help='三种判据并列分析，输出 JSON 报告')
    common(p)
    p.add_argument('--out', help='报告路径（缺省输出到 stdout）')
    p.add_argument('--timings', action='store_true', help='报告中写入各阶段耗时')
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('search', help='搜索 Aronszajn 反例')
    common(p)
    p.add_argument('--restarts', type=int, help='重启次数')
    p.add_argument('--section', type=_section, help='dim ≥ 3 时搜索的坐标平面 i,j')
    p.add_argument('--out', help='证书路径（缺省输出到 stdout）')
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser('render', help='绘制单位球与反例平行四边形 SVG')
    common(p)
    p.add_argument('--witness', help='analyze 生成的报告，用其中的见证绘图')
    p.add_argument('--section', type=_section, help='dim ≥ 3 时绘制的坐标截面 i,j')
    p.add_argument('--out', required=True, help='SVG 输出路径')
    p.set_defaults(handler=cmd_render)
    return parser


def _error_object(e: Exception) -> dict:
    if isinstance(e, NormSpecError):
        return {'error': e.to_dict()}
    return {'error': {'type': type(e).__name__, 'message': str(e)}}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    try:
        settings = Settings(args.config)
        return args.handler(args, settings)
    except (ValueError, RuntimeError, OSError) as e:
        logger.debug("命令失败", exc_info=True)
        sys.stderr.write(json.dumps(_error_object(e), ensure_ascii=False) + '\n')
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
