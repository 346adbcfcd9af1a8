"""取指 / 提交流水线语义

代码按顺序取指放到 pending 末尾；pending 中任一条指令只要能越过它前面的
所有指令（按模型重排，带 forwarding）就可以提交。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

from app.core.config import UNROLL_BOUND
from app.core.errors import IncompatibleBackend
from app.core.lang import TAU, TERMINATED, Action, ActionClass, Command, MemoryModelId, Terminated, classify_visibility
from app.core.memory_models import reorder_over_trace
from app.core.opsem import Trace, collect_traces, sequential_steps, under_model


@dataclass(frozen=True)
class PipelineConfig:
    pending: Tuple[Action, ...] = ()
    code: Command = TERMINATED

    @property
    def is_terminal(self) -> bool:
        return not self.pending and isinstance(self.code, Terminated)


def pipeline_step(
    cfg: PipelineConfig, m: MemoryModelId, unroll_bound: int = UNROLL_BOUND
) -> FrozenSet[Tuple[Action, PipelineConfig]]:
    result = set()
    # 取指；静默指令不占流水线位置
    for s in sequential_steps(cfg.code, unroll_bound):
        if classify_visibility(s.label) is ActionClass.SILENT:
            result.add((TAU, PipelineConfig(cfg.pending, s.next)))
        else:
            result.add((TAU, PipelineConfig(cfg.pending + (s.label,), s.next)))
    # 乱序提交
    for i, alpha in enumerate(cfg.pending):
        committed = reorder_over_trace(m, cfg.pending[:i], alpha)
        if committed is not None:
            result.add((committed, PipelineConfig(cfg.pending[:i] + cfg.pending[i + 1:], cfg.code)))
    return frozenset(result)


def require_pipeline_model(m: MemoryModelId) -> None:
    if m is MemoryModelId.PAR:
        raise IncompatibleBackend("流水线后端要求 well-behaved 模型，PAR 不满足")


def pipeline_traces(
    c: Command, m: MemoryModelId, unroll_bound: int = UNROLL_BOUND, cap: Optional[int] = None
) -> FrozenSet[Trace]:
    require_pipeline_model(m)
    start = PipelineConfig((), under_model(c, MemoryModelId.SC))
    return collect_traces(
        start,
        lambda cfg: pipeline_step(cfg, m, unroll_bound),
        lambda cfg: cfg.is_terminal,
        cap,
    )
