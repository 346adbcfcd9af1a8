"""TSO 的显式存储缓冲语义（每个线程一个 FIFO 缓冲）"""
from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Mapping, Optional, Tuple

from app.core.config import UNROLL_BOUND
from app.core.errors import UnsupportedInstruction, UnsupportedMixedAccess
from app.core.lang import (
    TAU,
    TERMINATED,
    Action,
    ActionClass,
    Annotated,
    Assign,
    Command,
    Const,
    Fence,
    FenceKind,
    Guard,
    MemoryModelId,
    Terminated,
    Variable,
    classify_visibility,
    eval_expr,
    free_vars,
    is_mixed,
    subst,
    var_analysis,
)
from app.core.opsem import Trace, collect_traces, sequential_steps, under_model


@dataclass(frozen=True)
class BufferEntry:
    var: Variable
    value: int

    def __post_init__(self):
        if not self.var.is_shared:
            raise ValueError(f"缓冲项必须是共享变量: {self.var}")


@dataclass(frozen=True)
class SBConfig:
    buffer: Tuple[BufferEntry, ...] = ()
    code: Command = TERMINATED

    @property
    def is_terminal(self) -> bool:
        return not self.buffer and isinstance(self.code, Terminated)


def check_assembler_level(a: Action) -> None:
    """只接受 store / load / 寄存器操作 / guard / full 屏障"""
    if isinstance(a, Annotated):
        raise UnsupportedInstruction(f"存储缓冲后端不支持注解指令: {a}")
    if isinstance(a, Fence) and a.kind is not FenceKind.FULL:
        raise UnsupportedInstruction(f"存储缓冲后端只支持 full 屏障: {a}")
    if is_mixed(a):
        raise UnsupportedMixedAccess(a)


def _latest(buffer: Tuple[BufferEntry, ...], x: Variable) -> Optional[int]:
    for entry in reversed(buffer):
        if entry.var == x:
            return entry.value
    return None


def _bypass(a: Action, buffer: Tuple[BufferEntry, ...]) -> Action:
    """用缓冲中最新的值替换读到的共享变量"""
    for x in var_analysis(a).rsv:
        value = _latest(buffer, x)
        if value is None:
            continue
        if isinstance(a, Assign):
            a = Assign(a.lhs, subst(a.rhs, x, Const(value)))
        elif isinstance(a, Guard):
            a = Guard(subst(a.cond, x, Const(value)))
    return a


def _store_value(a: Assign, local_state: Optional[Mapping[Variable, int]], modulus: Optional[int]) -> int:
    missing = [v for v in free_vars(a.rhs) if local_state is None or v not in local_state]
    if missing:
        raise UnsupportedInstruction(f"无法在缓冲时求值 store {a}: 缺少 {', '.join(map(str, missing))}")
    return eval_expr(a.rhs, local_state or {}, modulus)


def sb_step(
    cfg: SBConfig,
    local_state: Optional[Mapping[Variable, int]] = None,
    unroll_bound: int = UNROLL_BOUND,
    modulus: Optional[int] = None,
) -> FrozenSet[Tuple[Action, SBConfig]]:
    result = set()
    if cfg.buffer:
        head = cfg.buffer[0]
        result.add((Assign(head.var, Const(head.value)), SBConfig(cfg.buffer[1:], cfg.code)))
    for s in sequential_steps(cfg.code, unroll_bound):
        a = s.label
        check_assembler_level(a)
        if classify_visibility(a) is ActionClass.SILENT:
            result.add((TAU, SBConfig(cfg.buffer, s.next)))
        elif isinstance(a, Fence):
            if not cfg.buffer:
                result.add((a, SBConfig(cfg.buffer, s.next)))
        elif isinstance(a, Assign) and a.lhs.is_shared:
            entry = BufferEntry(a.lhs, _store_value(a, local_state, modulus))
            result.add((TAU, SBConfig(cfg.buffer + (entry,), s.next)))
        else:
            result.add((_bypass(a, cfg.buffer), SBConfig(cfg.buffer, s.next)))
    return frozenset(result)


def sb_traces(c: Command, unroll_bound: int = UNROLL_BOUND, cap: Optional[int] = None) -> FrozenSet[Trace]:
    """不带状态的迹枚举；store 的表达式必须是封闭的"""
    start = SBConfig((), under_model(c, MemoryModelId.SC))
    return collect_traces(
        start,
        lambda cfg: sb_step(cfg, None, unroll_bound),
        lambda cfg: cfg.is_terminal,
        cap,
    )
