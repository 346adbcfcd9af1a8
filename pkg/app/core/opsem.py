"""并行化顺序组合的小步操作语义与迹枚举"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple, TypeVar

from app.core.config import STATE_CAP, UNROLL_BOUND
from app.core.errors import NonTerminatingExploration
from app.core.lang import (
    TAU,
    TERMINATED,
    Act,
    Action,
    ActionClass,
    Choice,
    Command,
    Iterate,
    MemoryModelId,
    PSeq,
    Terminated,
    classify_visibility,
    finite_iter,
)
from app.core.memory_models import reorder_over_command

logger = logging.getLogger(__name__)

Trace = Tuple[Action, ...]
Config = TypeVar("Config", bound=Hashable)


@dataclass(frozen=True)
class Step:
    label: Action
    next: Command


def _steps(c: Command, unroll_bound: int, reorder: bool) -> Iterable[Step]:
    if isinstance(c, Terminated):
        return
    if isinstance(c, Act):
        yield Step(c.action, TERMINATED)
    elif isinstance(c, Iterate):
        for n in range(unroll_bound + 1):
            yield Step(TAU, finite_iter(c.model, c.body, n))
    elif isinstance(c, Choice):
        yield Step(TAU, c.left)
        yield Step(TAU, c.right)
    else:
        for s in _steps(c.left, unroll_bound, reorder):
            yield Step(s.label, PSeq(c.model, s.next, c.right))
        if isinstance(c.left, Terminated):
            yield Step(TAU, c.right)
        if reorder:
            for s in _steps(c.right, unroll_bound, reorder):
                label = reorder_over_command(c.model, c.left, s.label)
                if label is not None:
                    yield Step(label, PSeq(c.model, c.left, s.next))


def step(c: Command, unroll_bound: int = UNROLL_BOUND) -> FrozenSet[Step]:
    """一步可达的所有 (label, next)"""
    if unroll_bound < 0:
        raise ValueError("unroll_bound 不能为负")
    return frozenset(_steps(c, unroll_bound, reorder=True))


def sequential_steps(c: Command, unroll_bound: int = UNROLL_BOUND) -> FrozenSet[Step]:
    """只使用顺序片段（不含 pseqcB 重排规则）"""
    return frozenset(_steps(c, unroll_bound, reorder=False))


def under_model(c: Command, m: MemoryModelId) -> Command:
    """把所有 PSeq / Iterate 的模型参数替换为 m，PAR 节点保留"""
    if isinstance(c, PSeq):
        model = c.model if c.model is MemoryModelId.PAR else m
        return PSeq(model, under_model(c.left, m), under_model(c.right, m))
    if isinstance(c, Choice):
        return Choice(under_model(c.left, m), under_model(c.right, m))
    if isinstance(c, Iterate):
        return Iterate(m, under_model(c.body, m))
    return c


def split_threads(c: Command) -> List[Command]:
    """展开顶层的 PAR 组合"""
    if isinstance(c, PSeq) and c.model is MemoryModelId.PAR:
        return split_threads(c.left) + split_threads(c.right)
    return [c]


def collect_traces(
    initial: Config,
    successors: Callable[[Config], Iterable[Tuple[Action, Config]]],
    is_terminal: Callable[[Config], bool],
    cap: Optional[int] = None,
) -> FrozenSet[Trace]:
    """从 initial 出发到终止配置的所有可见迹（静默标签省略，不可行的运行丢弃）"""
    cap = STATE_CAP if cap is None else cap
    memo: Dict[Config, FrozenSet[Trace]] = {}

    def traces(config: Config) -> FrozenSet[Trace]:
        cached = memo.get(config)
        if cached is not None:
            return cached
        if len(memo) >= cap:
            raise NonTerminatingExploration(cap)
        result = set()
        if is_terminal(config):
            result.add(())
        for label, nxt in successors(config):
            kind = classify_visibility(label)
            if kind is ActionClass.INFEASIBLE:
                continue
            sub = traces(nxt)
            if kind is ActionClass.SILENT:
                result |= sub
            else:
                result.update((label,) + t for t in sub)
        memo[config] = frozenset(result)
        return memo[config]

    found = traces(initial)
    logger.debug(f"迹枚举完成: {len(memo)} 个配置, {len(found)} 条迹")
    return found


def enumerate_traces(c: Command, unroll_bound: int = UNROLL_BOUND, cap: Optional[int] = None) -> FrozenSet[Trace]:
    return collect_traces(
        c,
        lambda config: ((s.label, s.next) for s in step(config, unroll_bound)),
        lambda config: isinstance(config, Terminated),
        cap,
    )


def trace_refines(c: Command, d: Command, unroll_bound: int = UNROLL_BOUND, cap: Optional[int] = None) -> bool:
    """d 的每条迹都是 c 的迹"""
    return enumerate_traces(d, unroll_bound, cap) <= enumerate_traces(c, unroll_bound, cap)


def trace_equiv(c: Command, d: Command, unroll_bound: int = UNROLL_BOUND, cap: Optional[int] = None) -> bool:
    return enumerate_traces(c, unroll_bound, cap) == enumerate_traces(d, unroll_bound, cap)
