"""命令行入口：python -m app.cli <run|corpus|laws|hierarchy|wellbehaved|serve>"""
import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from tqdm import tqdm

from app.core.config import APP_HOST, APP_PORT, CORPUS_DIR, DOMAIN_SIZE, JOBS, SAMPLES, SEED, UNROLL_BOUND
from app.core.errors import LitmusError
from app.core.explorer import Backend
from app.core.init import configure_logging
from app.core.lang import MemoryModelId
from app.core.memory_models import WELL_BEHAVED_MODELS
from app.models.litmus import LitmusTest
from app.models.schema import CheckSummary, CorpusSummary, Report
from app.services.law_checks import run_law_checks
from app.services.litmus_runner import (
    EXIT_CAP,
    EXIT_MISMATCH,
    EXIT_OK,
    EXIT_USAGE,
    RunOptions,
    backends_disagree,
    is_cap_error,
    run_corpus,
    run_test,
    run_test_all,
)
from app.services.model_checks import check_hierarchy, check_well_behaved
from app.services.sampling import ProgramShape
from app.utils.litmus_parser import format_litmus, parse_litmus

logger = logging.getLogger(__name__)

BACKEND_CHOICES = [b.value for b in Backend] + ["all"]
MODEL_CHOICES = [m.value for m in MemoryModelId]


def _parent(*adders) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    for add in adders:
        add(parent)
    return parent


def _logging_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="store_true", help="输出调试日志")


def _output_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="输出 JSON")


def _model_option(help_text: str):
    def add(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", choices=MODEL_CHOICES, help=help_text)

    return add


def _exploration_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=BACKEND_CHOICES, default=Backend.PSEQ.value, help="探索后端")
    p.add_argument(
        "--unroll",
        type=int,
        default=UNROLL_BOUND,
        help="循环展开上限；带循环的测试状态数随上限快速增长，可用 --cap 限制",
    )
    p.add_argument("--cap", type=int, default=None, help="单次探索的配置数上限（默认取 PSEQ_STATE_CAP）")


def _domain_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", type=int, default=None, help="取值域大小 V（值为 0..V-1，算术取模）")


def _jobs_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=int, default=JOBS, help="并发运行的测试数")


def _sampling_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=SEED, help="随机抽样种子")
    p.add_argument("--samples", type=int, default=SAMPLES, help="每条抽样定律的实例数")


def build_parser() -> argparse.ArgumentParser:
    override = _model_option("覆盖测试声明的内存模型")
    explore_parent = _parent(_logging_options, _output_options, override, _exploration_options, _domain_options)
    parser = argparse.ArgumentParser(prog="python -m app.cli", description="弱内存模型 litmus 检查器")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[explore_parent], help="运行单个 litmus 文件")
    run.add_argument("file")

    corpus_parents = [explore_parent, _parent(_jobs_options)]
    corpus = sub.add_parser("corpus", parents=corpus_parents, help="运行目录下的所有 litmus 文件")
    corpus.add_argument("directory", nargs="?", default=CORPUS_DIR)

    laws = _parent(
        _logging_options, _output_options, _model_option("只检查该模型"), _domain_options, _sampling_options
    )
    sub.add_parser("laws", parents=[laws], help="检查代数定律与后端等价性")
    sub.add_parser(
        "hierarchy", parents=[_parent(_logging_options, _output_options, _domain_options)], help="检查模型层级"
    )
    wellbehaved = _parent(_logging_options, _output_options, _model_option("只检查该模型（par 不适用）"))
    sub.add_parser("wellbehaved", parents=[wellbehaved], help="检查 well-behaved 条件")

    serve = sub.add_parser("serve", parents=[_parent(_logging_options)], help="启动 HTTP 服务")
    serve.add_argument("--host", default=APP_HOST)
    serve.add_argument("--port", type=int, default=APP_PORT)
    return parser


def _options(args: argparse.Namespace) -> RunOptions:
    return RunOptions(
        model=MemoryModelId(args.model) if args.model else None,
        unroll_bound=args.unroll,
        cap=args.cap,
        domain=args.domain,
    )


def _print_json(data) -> None:
    print(json.dumps(data, ensure_ascii=False, indent=2))


def _format_report(report: Report) -> str:
    if report.error:
        return f"{report.name} [{report.backend}/{report.model}]: 错误 {report.error}"
    flag = "OK" if report.match else "MISMATCH"
    line = (
        f"{report.name} [{report.backend}/{report.model}]: {report.verdict} "
        f"(expect {report.expect}) {flag}  states={report.states} {report.millis:.1f}ms"
    )
    if report.witness:
        line += "\n  witness: " + " ".join(f"{k}={v}" for k, v in report.witness.items())
    return line


def _exit_code(reports: Sequence[Report]) -> int:
    if any(is_cap_error(r) for r in reports):
        return EXIT_CAP
    return EXIT_OK if all(r.match for r in reports) else EXIT_MISMATCH


def cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.file, "r", encoding="utf-8") as f:
            test: LitmusTest = parse_litmus(f.read(), source=args.file)
    except (OSError, LitmusError) as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE

    options = _options(args)
    if args.backend == "all":
        reports = run_test_all(test, options)
    else:
        reports = [run_test(test, Backend(args.backend), options)]

    if args.json:
        payload = [r.model_dump(mode="json") for r in reports]
        _print_json(payload if args.backend == "all" else payload[0])
    else:
        print(format_litmus(test, native=True))
        for report in reports:
            print(_format_report(report))
    if backends_disagree(reports):
        print("警告: 不同后端的判定结果不一致", file=sys.stderr)
        return EXIT_MISMATCH
    return _exit_code(reports)


def cmd_corpus(args: argparse.Namespace) -> int:
    backend = None if args.backend == "all" else Backend(args.backend)
    bar = tqdm(desc="corpus", unit="test", disable=args.json)
    try:
        summary: CorpusSummary = run_corpus(
            args.directory, backend, _options(args), args.jobs, on_report=lambda _: bar.update(1)
        )
    except LitmusError as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        bar.close()

    if args.json:
        _print_json(summary.model_dump(mode="json"))
    else:
        for report in summary.reports:
            print(_format_report(report))
        for error in summary.errors:
            print(f"解析失败: {error}")
        print(f"\n{summary.passed}/{summary.total} 一致, {summary.failed} 不一致, {len(summary.errors)} 个文件解析失败")
    return summary.exit_code


def _print_checks(summary: CheckSummary, as_json: bool) -> int:
    if as_json:
        _print_json({**summary.model_dump(mode="json"), "holds": summary.holds})
    else:
        for r in summary.results:
            where = f" [{r.model}]" if r.model else ""
            status = "OK" if r.holds else f"{r.violations} 个反例"
            print(f"{r.law}{where}: {r.checked} 个实例, {status}")
            for example in r.counterexamples:
                print(f"    {example}")
    return EXIT_OK if summary.holds else EXIT_MISMATCH


def cmd_laws(args: argparse.Namespace) -> int:
    models: Optional[List[MemoryModelId]] = [MemoryModelId(args.model)] if args.model else None
    summary = run_law_checks(
        models=models,
        samples=args.samples,
        seed=args.seed,
        domain=args.domain or DOMAIN_SIZE,
        shape=ProgramShape(),
        progress=not args.json,
    )
    return _print_checks(summary, args.json)


def cmd_hierarchy(args: argparse.Namespace) -> int:
    return _print_checks(check_hierarchy(domain=args.domain or DOMAIN_SIZE), args.json)


def cmd_wellbehaved(args: argparse.Namespace) -> int:
    if not args.model:
        return _print_checks(check_well_behaved(), args.json)
    model = MemoryModelId(args.model)
    if model not in WELL_BEHAVED_MODELS:
        print(f"错误: 模型 {model.value} 不参与 well-behaved 检查", file=sys.stderr)
        return EXIT_USAGE
    return _print_checks(check_well_behaved(models=[model]), args.json)


def cmd_serve(args: argparse.Namespace) -> int:
    from app.main import serve

    serve(args.host, args.port)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "corpus": cmd_corpus,
    "laws": cmd_laws,
    "hierarchy": cmd_hierarchy,
    "wellbehaved": cmd_wellbehaved,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    configure_logging("DEBUG" if args.verbose else None, force=args.verbose)
    logger.debug("执行命令: %s", args.command)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
