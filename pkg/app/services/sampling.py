"""随机程序生成（后端等价性、存储缓冲等价性、顺序性检查使用）"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from app.core.lang import (
    Action,
    Annotated,
    Assign,
    Binary,
    BinOp,
    Command,
    Const,
    Fence,
    FenceKind,
    Guard,
    MemoryModelId,
    Ordering,
    Var,
    Variable,
    chain,
    if_then_else,
)

# 各模型下有意义的屏障
MODEL_FENCES: Dict[MemoryModelId, Tuple[FenceKind, ...]] = {
    MemoryModelId.SC: (FenceKind.FULL,),
    MemoryModelId.G0: (FenceKind.FULL,),
    MemoryModelId.G: (FenceKind.FULL,),
    MemoryModelId.TSO: (FenceKind.FULL,),
    MemoryModelId.RCPC: (FenceKind.FULL,),
    MemoryModelId.RCSC: (FenceKind.FULL,),
    MemoryModelId.ARM: (FenceKind.FULL, FenceKind.STORE_STORE, FenceKind.CONTROL),
    MemoryModelId.RISCV: (
        FenceKind.FULL,
        FenceKind.STORE_STORE,
        FenceKind.LOAD_LOAD,
        FenceKind.RW_W,
        FenceKind.R_RW,
    ),
}

ANNOTATED_MODELS = frozenset({MemoryModelId.RCPC, MemoryModelId.RCSC, MemoryModelId.ARM, MemoryModelId.RISCV})


@dataclass(frozen=True)
class ProgramShape:
    shared: Tuple[str, ...] = ("x", "y")
    registers: Tuple[str, ...] = ("r1", "r2")
    constants: Tuple[int, ...] = (0, 1)
    max_actions: int = 8
    threads: int = 2
    branch: bool = True


class ProgramSampler:
    """可复现的随机程序生成器；同一个 seed 产生同一组程序"""

    def __init__(self, seed: int, shape: Optional[ProgramShape] = None):
        self.rng = random.Random(seed)
        self.shape = shape or ProgramShape()

    def _shared(self) -> Variable:
        return Variable.shared(self.rng.choice(self.shape.shared))

    def _register(self, owner: str) -> Variable:
        return Variable.local(owner, self.rng.choice(self.shape.registers))

    def _const(self) -> Const:
        return Const(self.rng.choice(self.shape.constants))

    def action(self, owner: str, model: MemoryModelId, assembler: bool = False) -> Action:
        """store / load / 寄存器操作 / 屏障，不产生混合访问"""
        kinds = ["store", "store", "load", "load", "regop"]
        fences = MODEL_FENCES.get(model, ())
        if fences:
            kinds.append("fence")
        kind = self.rng.choice(kinds)
        if kind == "fence":
            return Fence(FenceKind.FULL if assembler else self.rng.choice(fences))
        if kind == "store":
            # 汇编级程序只存常量
            if assembler or self.rng.random() < 0.7:
                a: Action = Assign(self._shared(), self._const())
            else:
                a = Assign(self._shared(), Var(self._register(owner)))
        elif kind == "load":
            a = Assign(self._register(owner), Var(self._shared()))
        elif self.rng.random() < 0.5:
            a = Assign(self._register(owner), self._const())
        else:
            a = Assign(self._register(owner), Binary(BinOp.ADD, Var(self._register(owner)), self._const()))
        if not assembler and model in ANNOTATED_MODELS and self.rng.random() < 0.2:
            a = Annotated(self.rng.choice(list(Ordering)), a)
        return a

    def guard(self, owner: str) -> Guard:
        """寄存器或共享变量与常量比较；读共享变量的分支条件按 load 处理"""
        var = self._shared() if self.rng.random() < 0.5 else self._register(owner)
        return Guard(Binary(BinOp.EQ, Var(var), self._const()))

    def thread(self, owner: str, model: MemoryModelId, length: int, assembler: bool = False, branch: bool = False) -> Command:
        """length 条指令的顺序程序（SC 参数化），可选一个 if 分支"""
        actions = [self.action(owner, model, assembler) for _ in range(length)]
        if not branch or length < 2:
            return chain(MemoryModelId.SC, actions)
        start = self.rng.randrange(0, length - 1)
        end = self.rng.randrange(start + 1, length + 1)
        inner = actions[start:end]
        split = self.rng.randrange(0, len(inner) + 1)
        cond = self.guard(owner).cond
        branch_cmd = if_then_else(
            MemoryModelId.SC,
            cond,
            chain(MemoryModelId.SC, inner[:split]),
            chain(MemoryModelId.SC, inner[split:]),
        )
        return chain(MemoryModelId.SC, actions[:start] + [branch_cmd] + actions[end:])

    def program(self, model: MemoryModelId, assembler: bool = False, threads: Optional[int] = None) -> List[Command]:
        """最多 max_actions 条指令，分布在若干线程中，最多一个分支"""
        count = threads or self.rng.randint(1, self.shape.threads)
        per_thread = max(1, self.shape.max_actions // count)
        branch_thread = self.rng.randrange(count) if self.shape.branch and self.rng.random() < 0.5 else -1
        return [
            self.thread(f"P{i}", model, self.rng.randint(1, per_thread), assembler, branch=(i == branch_thread))
            for i in range(count)
        ]

    def pick(self, universe: Sequence[Action], k: int) -> Tuple[Action, ...]:
        return tuple(self.rng.choice(universe) for _ in range(k))
