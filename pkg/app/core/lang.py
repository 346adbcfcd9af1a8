"""程序语言核心：变量、表达式、指令（action）与命令（command）

所有值都是不可变的 frozen dataclass，可以直接作为探索时的记忆化键。
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Union

from app.core.errors import UnsupportedMixedAccess


class Scope(str, Enum):
    SHARED = "shared"
    LOCAL = "local"


class MemoryModelId(str, Enum):
    """内存模型标识"""
    SC = "sc"
    PAR = "par"
    G0 = "g0"
    G = "g"
    TSO = "tso"
    RCPC = "rcpc"
    RCSC = "rcsc"
    ARM = "arm"
    RISCV = "riscv"


class UnOp(str, Enum):
    NEG = "-"
    NOT = "!"


class BinOp(str, Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    EQ = "="
    NE = "!="
    LT = "<"
    LE = "<="
    AND = "&&"
    OR = "||"


class FenceKind(str, Enum):
    FULL = "full"
    STORE_STORE = "ss"
    LOAD_LOAD = "ll"
    RW_W = "rww"
    R_RW = "rrw"
    CONTROL = "ctrl"


class Ordering(str, Enum):
    RELEASE = "rel"
    ACQUIRE = "acq"


class AccessKind(str, Enum):
    STORE = "store"
    LOAD = "load"
    REG_OP = "regop"
    GUARD = "guard"
    FENCE = "fence"


class ActionClass(str, Enum):
    VISIBLE = "visible"
    SILENT = "silent"
    INFEASIBLE = "infeasible"


# ---------------------------------------------------------------------------
# 变量与表达式
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Variable:
    """共享变量没有 owner；局部变量属于唯一一个线程"""
    name: str
    scope: Scope = Scope.SHARED
    owner: Optional[str] = None

    def __post_init__(self):
        if (self.scope is Scope.LOCAL) != (self.owner is not None):
            raise ValueError(f"变量 {self.name}: 局部变量必须且只能有一个 owner")

    @classmethod
    def shared(cls, name: str) -> "Variable":
        return cls(name)

    @classmethod
    def local(cls, owner: str, name: str) -> "Variable":
        return cls(name, Scope.LOCAL, owner)

    @property
    def is_shared(self) -> bool:
        return self.scope is Scope.SHARED

    @property
    def sort_key(self):
        # 共享变量排在前面
        return (0, "", self.name) if self.is_shared else (1, self.owner, self.name)

    def __str__(self) -> str:
        return self.name if self.is_shared else f"{self.owner}:{self.name}"


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Var:
    var: Variable

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Unary:
    op: UnOp
    operand: "Expression"

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Binary:
    op: BinOp
    left: "Expression"
    right: "Expression"

    def __str__(self) -> str:
        return format_expr(self)


Expression = Union[Const, Var, Unary, Binary]

TRUE = Const(1)
FALSE = Const(0)

_ARITH: Dict[BinOp, Callable[[int, int], int]] = {
    BinOp.ADD: operator.add,
    BinOp.SUB: operator.sub,
    BinOp.MUL: operator.mul,
}

_COMPARE: Dict[BinOp, Callable[[int, int], bool]] = {
    BinOp.EQ: operator.eq,
    BinOp.NE: operator.ne,
    BinOp.LT: operator.lt,
    BinOp.LE: operator.le,
}


def eval_expr(e: Expression, s: Mapping[Variable, int], modulus: Optional[int] = None) -> int:
    """在状态 s 下求值；给定 modulus 时算术结果取模"""
    if isinstance(e, Const):
        return e.value % modulus if modulus else e.value
    if isinstance(e, Var):
        return s[e.var]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, s, modulus)
        if e.op is UnOp.NOT:
            return int(v == 0)
        return -v % modulus if modulus else -v
    left = eval_expr(e.left, s, modulus)
    right = eval_expr(e.right, s, modulus)
    if e.op in _ARITH:
        v = _ARITH[e.op](left, right)
        return v % modulus if modulus else v
    if e.op in _COMPARE:
        return int(_COMPARE[e.op](left, right))
    if e.op is BinOp.AND:
        return int(left != 0 and right != 0)
    return int(left != 0 or right != 0)


@lru_cache(maxsize=65536)
def free_vars(e: Expression) -> FrozenSet[Variable]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.var,))
    if isinstance(e, Unary):
        return free_vars(e.operand)
    return free_vars(e.left) | free_vars(e.right)


def subst(e: Expression, x: Variable, r: Expression) -> Expression:
    """把 e 中所有的 x 替换为 r"""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return r if e.var == x else e
    if isinstance(e, Unary):
        return Unary(e.op, subst(e.operand, x, r))
    return Binary(e.op, subst(e.left, x, r), subst(e.right, x, r))


def format_expr(e: Expression, qualify: bool = True, nested: bool = False) -> str:
    """表达式转文本；嵌套的二元表达式总是加括号"""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return str(e.var) if qualify else e.var.name
    if isinstance(e, Unary):
        return f"{e.op.value}({format_expr(e.operand, qualify)})"
    text = f"{format_expr(e.left, qualify, True)} {e.op.value} {format_expr(e.right, qualify, True)}"
    return f"({text})" if nested else text


# ---------------------------------------------------------------------------
# 指令
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    lhs: Variable
    rhs: Expression

    def __str__(self) -> str:
        return f"{self.lhs} := {self.rhs}"


@dataclass(frozen=True)
class Guard:
    cond: Expression

    def __str__(self) -> str:
        return f"<{self.cond}>"


@dataclass(frozen=True)
class Fence:
    kind: FenceKind

    def __str__(self) -> str:
        return f"fence {self.kind.value}"


@dataclass(frozen=True)
class Annotated:
    ordering: Ordering
    inner: "Action"

    def __post_init__(self):
        if not isinstance(self.inner, (Assign, Guard)):
            raise ValueError(f"注解只能作用于赋值或 guard: {self.inner}")

    def __str__(self) -> str:
        return f"{self.ordering.value} {self.inner}"


Action = Union[Assign, Guard, Fence, Annotated]

# 规范的静默指令
TAU = Guard(TRUE)


def strip_annotation(a: Action) -> Action:
    return a.inner if isinstance(a, Annotated) else a


@dataclass(frozen=True)
class VarSets:
    fv: FrozenSet[Variable]
    rv: FrozenSet[Variable]
    wv: FrozenSet[Variable]
    sv: FrozenSet[Variable]
    rsv: FrozenSet[Variable]
    wsv: FrozenSet[Variable]


def _shared(vs: FrozenSet[Variable]) -> FrozenSet[Variable]:
    return frozenset(v for v in vs if v.is_shared)


@lru_cache(maxsize=65536)
def var_analysis(a: Action) -> VarSets:
    """自由变量、读变量、写变量及其共享部分"""
    a = strip_annotation(a)
    if isinstance(a, Assign):
        rv = free_vars(a.rhs)
        wv = frozenset((a.lhs,))
    elif isinstance(a, Guard):
        rv = free_vars(a.cond)
        wv = frozenset()
    else:
        rv = wv = frozenset()
    fv = rv | wv
    return VarSets(fv, rv, wv, _shared(fv), _shared(rv), _shared(wv))


def is_store(a: Action) -> bool:
    vs = var_analysis(a)
    return bool(vs.wsv) and not vs.rsv


def is_load(a: Action) -> bool:
    vs = var_analysis(a)
    return not vs.wsv and bool(vs.rsv)


def is_mixed(a: Action) -> bool:
    vs = var_analysis(a)
    return bool(vs.wsv) and bool(vs.rsv)


def classify_kind(a: Action) -> AccessKind:
    """store / load / 寄存器操作 / 封闭 guard / 屏障"""
    base = strip_annotation(a)
    if isinstance(base, Fence):
        return AccessKind.FENCE
    if is_mixed(base):
        raise UnsupportedMixedAccess(a)
    if is_store(base):
        return AccessKind.STORE
    if is_load(base):
        return AccessKind.LOAD
    if isinstance(base, Guard) and not var_analysis(base).fv:
        return AccessKind.GUARD
    return AccessKind.REG_OP


def classify_visibility(a: Action) -> ActionClass:
    if isinstance(a, Guard) and not free_vars(a.cond):
        return ActionClass.SILENT if eval_expr(a.cond, {}) != 0 else ActionClass.INFEASIBLE
    return ActionClass.VISIBLE


# ---------------------------------------------------------------------------
# 命令
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Terminated:
    def __str__(self) -> str:
        return "skip"


TERMINATED = Terminated()


@dataclass(frozen=True)
class Act:
    action: Action

    def __str__(self) -> str:
        return str(self.action)


@dataclass(frozen=True)
class PSeq:
    model: MemoryModelId
    left: "Command"
    right: "Command"

    def __str__(self) -> str:
        return f"({self.left} ;{self.model.value} {self.right})"


@dataclass(frozen=True)
class Choice:
    left: "Command"
    right: "Command"

    def __str__(self) -> str:
        return f"({self.left} |~| {self.right})"


@dataclass(frozen=True)
class Iterate:
    model: MemoryModelId
    body: "Command"

    def __str__(self) -> str:
        return f"({self.body})*{self.model.value}"


Command = Union[Terminated, Act, PSeq, Choice, Iterate]
Program = Union[Command, Assign, Guard, Fence, Annotated]


def as_command(c: Program) -> Command:
    if isinstance(c, (Assign, Guard, Fence, Annotated)):
        return Act(c)
    return c


def seq(c1: Program, c2: Program) -> Command:
    return PSeq(MemoryModelId.SC, as_command(c1), as_command(c2))


def par(c1: Program, c2: Program) -> Command:
    return PSeq(MemoryModelId.PAR, as_command(c1), as_command(c2))


def chain(model: MemoryModelId, parts: Iterable[Program]) -> Command:
    """右结合的顺序组合；空序列为 Terminated"""
    parts = [as_command(p) for p in parts]
    if not parts:
        return TERMINATED
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = PSeq(model, part, result)
    return result


def negate(b: Expression) -> Expression:
    return Unary(UnOp.NOT, b)


def if_then_else(model: MemoryModelId, b: Expression, c1: Program, c2: Program = TERMINATED) -> Command:
    return Choice(
        PSeq(model, Act(Guard(b)), as_command(c1)),
        PSeq(model, Act(Guard(negate(b))), as_command(c2)),
    )


def while_loop(model: MemoryModelId, b: Expression, c: Program) -> Command:
    return PSeq(model, Iterate(model, PSeq(model, Act(Guard(b)), as_command(c))), Act(Guard(negate(b))))


def finite_iter(model: MemoryModelId, c: Command, n: int) -> Command:
    if n < 0:
        raise ValueError("迭代次数不能为负")
    result: Command = TERMINATED
    for _ in range(n):
        result = PSeq(model, c, result)
    return result


def actions_of(c: Command) -> Iterator[Action]:
    """命令中出现的所有指令（按结构顺序）"""
    if isinstance(c, Act):
        yield c.action
    elif isinstance(c, (PSeq, Choice)):
        yield from actions_of(c.left)
        yield from actions_of(c.right)
    elif isinstance(c, Iterate):
        yield from actions_of(c.body)


def command_vars(c: Command) -> FrozenSet[Variable]:
    result = set()
    for a in actions_of(c):
        result |= var_analysis(a).fv
    return frozenset(result)
