"""litmus 测试的数据结构"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

from app.core.lang import Command, Expression, MemoryModelId, Variable


class Quantifier(str, Enum):
    EXISTS = "exists"
    FORBIDDEN = "forbidden"


class Verdict(str, Enum):
    ALLOWED = "allowed"
    FORBIDDEN = "forbidden"


@dataclass(frozen=True)
class LitmusTest:
    name: str
    model: MemoryModelId
    shared: Tuple[Variable, ...]
    locals: Tuple[Tuple[str, Tuple[Variable, ...]], ...]
    init: Tuple[Tuple[Variable, int], ...]
    thread_names: Tuple[str, ...]
    threads: Tuple[Command, ...]
    quantifier: Quantifier
    condition: Expression
    expect: Verdict
    notes: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def variables(self) -> Tuple[Variable, ...]:
        """所有声明的变量：共享变量在前，然后按线程顺序列出局部变量"""
        result = list(self.shared)
        for _, names in self.locals:
            result.extend(names)
        return tuple(result)

    @property
    def init_map(self) -> Dict[Variable, int]:
        return dict(self.init)

    @property
    def derived(self) -> bool:
        """结论来自交叉验证而非论文定理"""
        return any("derived" in note.lower() for note in self.notes)
