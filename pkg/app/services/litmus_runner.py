"""litmus 测试运行器：单个测试、多后端、整个语料目录"""
from __future__ import annotations

import asyncio
import logging
import os
import time
from dataclasses import dataclass
from typing import Awaitable, Callable, List, Optional, Sequence, Tuple

from app.core.config import CORPUS_DIR, JOBS, UNROLL_BOUND
from app.core.errors import CheckerError, LitmusError, NonTerminatingExploration
from app.core.explorer import Backend, State, as_domain, holds, initial_states, run_exploration
from app.core.lang import MemoryModelId, actions_of
from app.core.storebuffer import check_assembler_level
from app.models.litmus import LitmusTest, Quantifier, Verdict
from app.models.schema import CorpusSummary, Report
from app.services.task_queue import run_jobs
from app.utils.litmus_parser import parse_litmus

logger = logging.getLogger(__name__)

# 退出码
EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_CAP = 3


@dataclass(frozen=True)
class RunOptions:
    """命令行 / API 传入的覆盖参数"""
    model: Optional[MemoryModelId] = None
    unroll_bound: int = UNROLL_BOUND
    cap: Optional[int] = None
    domain: Optional[int] = None


def effective_model(test: LitmusTest, options: RunOptions) -> MemoryModelId:
    return options.model or test.model


def legal_backends(test: LitmusTest, model: Optional[MemoryModelId] = None) -> List[Backend]:
    """模型允许的所有后端；存储缓冲只接受 TSO 下的汇编级程序"""
    model = model or test.model
    result = [Backend.PSEQ]
    if model is not MemoryModelId.PAR:
        result.append(Backend.PIPELINE)
    if model is MemoryModelId.TSO:
        try:
            for thread in test.threads:
                for a in actions_of(thread):
                    check_assembler_level(a)
            result.append(Backend.STOREBUFFER)
        except CheckerError:
            pass
    return result


def _witness(test: LitmusTest, finals: Sequence[State], modulus: Optional[int]) -> Optional[State]:
    satisfying = [s for s in finals if holds(test.condition, s, modulus)]
    if not satisfying:
        return None
    return min(satisfying, key=lambda s: s.sort_key)


def run_test(test: LitmusTest, backend: Backend = Backend.PSEQ, options: Optional[RunOptions] = None) -> Report:
    """运行单个测试；检查器错误记录在报告中而不是抛出"""
    options = options or RunOptions()
    model = effective_model(test, options)
    started = time.perf_counter()
    base = dict(name=test.name, model=model.value, backend=backend.value, expect=test.expect.value)
    try:
        modulus = as_domain(options.domain).modulus if options.domain else None
        starts = initial_states(test.init_map, test.variables)
        result = run_exploration(
            test.threads, model, backend, starts, options.unroll_bound, options.cap, modulus
        )
    except CheckerError as e:
        logger.warning(f"{test.name} [{backend.value}] 运行失败: {e}")
        return Report(
            **base,
            match=False,
            millis=round((time.perf_counter() - started) * 1000, 3),
            error=f"{type(e).__name__}: {e}",
        )

    # forbidden 条件与 exists 条件的计算相同，只是不给出见证
    witness = _witness(test, result.final_states, modulus)
    verdict = Verdict.ALLOWED if witness is not None else Verdict.FORBIDDEN
    if test.quantifier is not Quantifier.EXISTS:
        witness = None
    report = Report(
        **base,
        verdict=verdict.value,
        match=verdict is test.expect,
        witness=witness.as_dict() if witness is not None else None,
        states=result.visited,
        millis=round((time.perf_counter() - started) * 1000, 3),
    )
    logger.debug(f"{test.name} [{backend.value}/{model.value}]: {verdict.value}, {result.visited} 个配置")
    return report


def run_test_all(test: LitmusTest, options: Optional[RunOptions] = None) -> List[Report]:
    """在所有合法后端上运行"""
    options = options or RunOptions()
    return [run_test(test, b, options) for b in legal_backends(test, effective_model(test, options))]


def backends_disagree(reports: Sequence[Report]) -> bool:
    return len({r.verdict for r in reports if r.error is None}) > 1


def is_cap_error(report: Report) -> bool:
    return bool(report.error) and report.error.startswith(NonTerminatingExploration.__name__)


# ---------------------------------------------------------------------------
# 语料目录
# ---------------------------------------------------------------------------

def list_corpus(path: str = CORPUS_DIR) -> List[str]:
    if not os.path.isdir(path):
        raise LitmusError(f"语料目录不存在: {path}")
    return sorted(os.path.join(path, f) for f in os.listdir(path) if f.endswith(".litmus"))


def load_corpus(path: str = CORPUS_DIR) -> Tuple[List[LitmusTest], List[str]]:
    """解析目录下所有 .litmus 文件；解析失败的文件记录后跳过"""
    tests, errors = [], []
    for file_path in list_corpus(path):
        with open(file_path, "r", encoding="utf-8") as f:
            text = f.read()
        try:
            tests.append(parse_litmus(text, source=os.path.basename(file_path)))
        except LitmusError as e:
            logger.warning(f"解析失败: {e}")
            errors.append(str(e))
    return tests, errors


def summarize(reports: Sequence[Report], errors: Sequence[str] = ()) -> CorpusSummary:
    ordered = sorted(reports, key=lambda r: (r.name, r.backend))
    passed = sum(1 for r in ordered if r.match)
    cap_exceeded = any(is_cap_error(r) for r in ordered)
    if cap_exceeded:
        exit_code = EXIT_CAP
    elif errors:
        exit_code = EXIT_USAGE
    elif passed < len(ordered):
        exit_code = EXIT_MISMATCH
    else:
        exit_code = EXIT_OK
    return CorpusSummary(
        total=len(ordered),
        passed=passed,
        failed=len(ordered) - passed,
        errors=list(errors),
        cap_exceeded=cap_exceeded,
        exit_code=exit_code,
        reports=ordered,
    )


def _jobs_for(tests: Sequence[LitmusTest], backend: Optional[Backend], options: RunOptions) -> List[Callable[[], Report]]:
    """backend 为 None 表示所有合法后端"""
    jobs = []
    for test in tests:
        backends = [backend] if backend else legal_backends(test, effective_model(test, options))
        for b in backends:
            jobs.append(lambda test=test, b=b: run_test(test, b, options))
    return jobs


async def run_corpus_async(
    path: str = CORPUS_DIR,
    backend: Optional[Backend] = Backend.PSEQ,
    options: Optional[RunOptions] = None,
    jobs: int = JOBS,
    on_report: Optional[Callable[[Report], Awaitable[None]]] = None,
) -> CorpusSummary:
    options = options or RunOptions()
    tests, errors = load_corpus(path)
    logger.info(f"语料 {path}: {len(tests)} 个测试, {len(errors)} 个解析失败")

    async def report_ready(_: int, report: Report) -> None:
        if on_report is not None:
            await on_report(report)

    reports = await run_jobs(_jobs_for(tests, backend, options), jobs, report_ready)
    summary = summarize(reports, errors)
    logger.info(f"语料运行完成: {summary.passed}/{summary.total} 一致")
    return summary


def run_corpus(
    path: str = CORPUS_DIR,
    backend: Optional[Backend] = Backend.PSEQ,
    options: Optional[RunOptions] = None,
    jobs: int = JOBS,
    on_report: Optional[Callable[[Report], None]] = None,
) -> CorpusSummary:
    """同步入口（命令行使用）"""

    async def forward(report: Report) -> None:
        if on_report is not None:
            on_report(report)

    return asyncio.run(run_corpus_async(path, backend, options, jobs, forward))
