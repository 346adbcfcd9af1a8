"""内存模型：forwarding、各模型的重排关系，以及提升到指令序列和命令

每个模型都由一个基础关系 ``reorders_base(m, α, β)``（β 能否越过 α 先执行）
和 forwarding 组合而成。例外条款总是先于基础条款检查。
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from app.core.lang import (
    TAU,
    Act,
    Action,
    Annotated,
    Assign,
    Binary,
    BinOp,
    Choice,
    Command,
    Const,
    Expression,
    Fence,
    FenceKind,
    Guard,
    MemoryModelId,
    Ordering,
    PSeq,
    Terminated,
    Var,
    Variable,
    classify_kind,
    free_vars,
    is_load,
    is_mixed,
    is_store,
    strip_annotation,
    subst,
    var_analysis,
)

logger = logging.getLogger(__name__)

ReorderResult = Optional[Action]

# PAR 不满足 well-behaved 条件
WELL_BEHAVED_MODELS: Tuple[MemoryModelId, ...] = tuple(m for m in MemoryModelId if m is not MemoryModelId.PAR)

# 需要区分 load / store 的模型
KIND_CHECKED_MODELS = frozenset({MemoryModelId.ARM, MemoryModelId.RISCV})


def forward(alpha: Action, beta: Action) -> Action:
    """把 alpha（若为赋值）的值前递到 beta 中"""
    alpha = strip_annotation(alpha)
    if not isinstance(alpha, Assign):
        return beta
    if isinstance(beta, Annotated):
        return Annotated(beta.ordering, forward(alpha, beta.inner))
    if isinstance(beta, Assign):
        return Assign(beta.lhs, subst(beta.rhs, alpha.lhs, alpha.rhs))
    if isinstance(beta, Guard):
        return Guard(subst(beta.cond, alpha.lhs, alpha.rhs))
    return beta


# ---------------------------------------------------------------------------
# 基础重排关系
# ---------------------------------------------------------------------------

def _is_fence(a: Action, kind: FenceKind) -> bool:
    return isinstance(a, Fence) and a.kind is kind


def _is_guard(a: Action) -> bool:
    return isinstance(strip_annotation(a), Guard)


def _is_closed_guard(a: Action) -> bool:
    return isinstance(a, Guard) and not free_vars(a.cond)


def _annotated(a: Action, ordering: Ordering) -> bool:
    return isinstance(a, Annotated) and a.ordering is ordering


def _sc(alpha: Action, beta: Action) -> bool:
    return False


def _par(alpha: Action, beta: Action) -> bool:
    return True


def _g0(alpha: Action, beta: Action) -> bool:
    a, b = var_analysis(alpha), var_analysis(beta)
    return a.wv.isdisjoint(b.fv) and b.wv.isdisjoint(a.fv)


def _g(alpha: Action, beta: Action) -> bool:
    if _is_fence(alpha, FenceKind.FULL) or _is_fence(beta, FenceKind.FULL):
        return False
    return _g0(alpha, beta) and var_analysis(alpha).rsv.isdisjoint(var_analysis(beta).rsv)


def _tso(alpha: Action, beta: Action) -> bool:
    # 只有 store 之后的独立 load / 寄存器操作 / guard 可以提前
    if not isinstance(alpha, Assign) or not alpha.lhs.is_shared:
        return False
    if isinstance(beta, Assign):
        if beta.lhs.is_shared or beta.lhs in free_vars(alpha.rhs):
            return False
        read = beta.rhs
    elif isinstance(beta, Guard):
        read = beta.cond
    else:
        return False
    return alpha.lhs not in free_vars(read)


def _release_acquire(alpha: Action, beta: Action, relation: Callable[[Action, Action], bool]) -> bool:
    if _annotated(beta, Ordering.RELEASE):
        return False
    if _annotated(alpha, Ordering.RELEASE):
        return relation(alpha.inner, beta)
    if _annotated(beta, Ordering.ACQUIRE):
        return relation(alpha, beta.inner)
    if _annotated(alpha, Ordering.ACQUIRE):
        return False
    return _g(alpha, beta)


def _rcpc(alpha: Action, beta: Action) -> bool:
    return _release_acquire(alpha, beta, _rcpc)


def _rcsc(alpha: Action, beta: Action) -> bool:
    if _annotated(alpha, Ordering.RELEASE) and _annotated(beta, Ordering.ACQUIRE):
        return False
    return _release_acquire(alpha, beta, _rcsc)


def _arm(alpha: Action, beta: Action) -> bool:
    if _is_fence(beta, FenceKind.STORE_STORE) and is_store(alpha):
        return False
    if _is_fence(alpha, FenceKind.STORE_STORE) and is_store(beta):
        return False
    if _is_guard(alpha) and _is_fence(beta, FenceKind.CONTROL):
        return False
    if _is_fence(alpha, FenceKind.CONTROL) and is_load(beta):
        return False
    if _is_guard(alpha) and is_store(beta):
        return False
    return _rcsc(alpha, beta)


def _riscv(alpha: Action, beta: Action) -> bool:
    # fence w,w 与 ARM 的 dsb.st 相同
    if _is_fence(beta, FenceKind.STORE_STORE) and is_store(alpha):
        return False
    if _is_fence(alpha, FenceKind.STORE_STORE) and is_store(beta):
        return False
    if _is_fence(beta, FenceKind.LOAD_LOAD) and is_load(alpha):
        return False
    if _is_fence(alpha, FenceKind.LOAD_LOAD) and is_load(beta):
        return False
    if _is_fence(beta, FenceKind.RW_W):
        return False
    if _is_fence(alpha, FenceKind.RW_W):
        # tau 必须能越过，否则不满足 well-behaved (iii)
        return is_load(beta) or _is_closed_guard(beta)
    if _is_fence(beta, FenceKind.R_RW):
        return is_store(alpha)
    if _is_fence(alpha, FenceKind.R_RW):
        return False
    if _is_guard(alpha) and is_store(beta):
        return False
    return _rcpc(alpha, beta)


_RELATIONS: Dict[MemoryModelId, Callable[[Action, Action], bool]] = {
    MemoryModelId.SC: _sc,
    MemoryModelId.PAR: _par,
    MemoryModelId.G0: _g0,
    MemoryModelId.G: _g,
    MemoryModelId.TSO: _tso,
    MemoryModelId.RCPC: _rcpc,
    MemoryModelId.RCSC: _rcsc,
    MemoryModelId.ARM: _arm,
    MemoryModelId.RISCV: _riscv,
}


def reorders_base(m: MemoryModelId, alpha: Action, beta: Action) -> bool:
    """beta 能否在 alpha 之前执行（不含 forwarding）"""
    return _RELATIONS[m](alpha, beta)


@lru_cache(maxsize=262144)
def reorder_after(m: MemoryModelId, alpha: Action, beta: Action) -> ReorderResult:
    """模型函数：允许重排时返回 forwarding 后的 beta"""
    if m in KIND_CHECKED_MODELS:
        # 只拒绝程序中本来就有的混合指令；从 load 前递得到的混合指令既非 load 也非 store
        classify_kind(alpha)
        classify_kind(beta)
    beta_fwd = beta if m is MemoryModelId.PAR else forward(alpha, beta)
    return beta_fwd if reorders_base(m, alpha, beta_fwd) else None


def reorder_over_trace(m: MemoryModelId, prior: Sequence[Action], beta: Action) -> ReorderResult:
    """从最后一条往前依次越过 prior"""
    current: ReorderResult = beta
    for alpha in reversed(prior):
        current = reorder_after(m, alpha, current)
        if current is None:
            return None
    return current


@lru_cache(maxsize=262144)
def reorder_over_command(m: MemoryModelId, c: Command, beta: Action) -> ReorderResult:
    if isinstance(c, Terminated):
        return beta
    if isinstance(c, Act):
        return reorder_after(m, c.action, beta)
    if isinstance(c, PSeq):
        after_right = reorder_over_command(m, c.right, beta)
        return None if after_right is None else reorder_over_command(m, c.left, after_right)
    if isinstance(c, Choice):
        left = reorder_over_command(m, c.left, beta)
        if left is None:
            return None
        return left if reorder_over_command(m, c.right, beta) == left else None
    # Iterate: n = 0 的展开要求 beta 不变
    return beta if reorder_over_command(m, c.body, beta) == beta else None


# ---------------------------------------------------------------------------
# Eff 语义模型（仅作为 oracle 使用）
# ---------------------------------------------------------------------------

def eff_reorderable(alpha: Action, beta: Action, domain: Union[int, Iterable[int]] = 2) -> bool:
    """穷举验证 eff(β ; α) ⊆ eff(α ; β)"""
    from app.core.explorer import as_domain, eff_trace

    dom = as_domain(domain)
    variables = sorted(var_analysis(alpha).fv | var_analysis(beta).fv, key=lambda v: v.sort_key)
    return eff_trace((beta, alpha), dom, variables) <= eff_trace((alpha, beta), dom, variables)


@dataclass(frozen=True)
class EffOracle:
    """最弱的顺序模型：只要两种顺序的效果包含关系成立就允许重排"""
    domain: int = 2
    variables: Tuple[Variable, ...] = ()

    def reorders(self, alpha: Action, beta: Action) -> bool:
        if not self.variables:
            return eff_reorderable(alpha, beta, self.domain)
        a = _effect_table(alpha, self.variables, self.domain)
        b = _effect_table(beta, self.variables, self.domain)
        return a.after(b) <= b.after(a)

    def __str__(self) -> str:
        return "eff"


@dataclass(frozen=True)
class _EffectTable:
    """固定变量集合上一条指令的效果：状态下标 -> 状态下标（None 为 guard 失败）"""
    images: Tuple[Optional[int], ...]

    def after(self, first: "_EffectTable") -> frozenset:
        """先执行 first 再执行 self 的关系"""
        pairs = set()
        for i, mid in enumerate(first.images):
            if mid is not None and self.images[mid] is not None:
                pairs.add((i, self.images[mid]))
        return frozenset(pairs)


@lru_cache(maxsize=8192)
def _effect_table(a: Action, variables: Tuple[Variable, ...], domain: int) -> _EffectTable:
    from app.core.explorer import State, apply_action

    states = [State(dict(zip(variables, values))) for values in itertools.product(range(domain), repeat=len(variables))]
    index = {s: i for i, s in enumerate(states)}
    images = []
    for s in states:
        t = apply_action(a, s, modulus=domain)
        images.append(None if t is None else index[t])
    return _EffectTable(tuple(images))


ModelLike = Union[MemoryModelId, EffOracle]


def model_pairs(m: ModelLike, alpha: Action, beta: Action) -> ReorderResult:
    if isinstance(m, EffOracle):
        beta_fwd = forward(alpha, beta)
        return beta_fwd if m.reorders(alpha, beta_fwd) else None
    return reorder_after(m, alpha, beta)


# ---------------------------------------------------------------------------
# 模型比较
# ---------------------------------------------------------------------------

@dataclass
class RefinementReport:
    weaker: str
    stronger: str
    checked: int = 0
    violations: List[Tuple[Action, Action, Action]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def refinement_violations(m1: ModelLike, m2: ModelLike, universe: Sequence[Action], limit: int = 10) -> RefinementReport:
    """m2 允许的每个 (β', β) 也必须被 m1 允许"""
    report = RefinementReport(str(getattr(m1, "value", m1)), str(getattr(m2, "value", m2)))
    for alpha in universe:
        for beta in universe:
            report.checked += 1
            produced = model_pairs(m2, alpha, beta)
            if produced is None:
                continue
            if model_pairs(m1, alpha, beta) != produced:
                logger.debug(f"{report.weaker} ⋢ {report.stronger}: {alpha} / {beta}")
                report.violations.append((alpha, beta, produced))
                if len(report.violations) >= limit:
                    return report
    return report


def model_refines(m1: ModelLike, m2: ModelLike, universe: Sequence[Action]) -> bool:
    return refinement_violations(m1, m2, universe, limit=1).holds


@dataclass
class WellBehavedReport:
    model: MemoryModelId
    checked: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def well_behaved_check(m: MemoryModelId, universe: Sequence[Action], limit: int = 20) -> WellBehavedReport:
    if m is MemoryModelId.PAR:
        raise ValueError("PAR 不在 well-behaved 检查范围内")
    report = WellBehavedReport(m)
    for alpha in universe:
        nonempty = False
        for beta in universe:
            report.checked += 1
            first = reorder_after.__wrapped__(m, alpha, beta)
            if first != reorder_after.__wrapped__(m, alpha, beta):
                report.violations.append(f"(i) 结果不确定: {alpha} / {beta}")
            if first is not None:
                nonempty = True
                if first not in (forward(alpha, beta), beta):
                    report.violations.append(f"(ii) 结果 {first} 不是 forward 或原指令: {alpha} / {beta}")
        if nonempty and reorder_after(m, alpha, TAU) != TAU:
            report.violations.append(f"(iii) {alpha} 允许重排但不允许 tau 越过")
        if len(report.violations) >= limit:
            break
    return report


# ---------------------------------------------------------------------------
# 枚举的指令全集
# ---------------------------------------------------------------------------

def enumerate_expressions(atoms: Sequence[Expression], depth: int, ops: Sequence[BinOp]) -> List[Expression]:
    exprs: List[Expression] = list(atoms)
    for _ in range(depth):
        exprs = exprs + [Binary(op, l, r) for op in ops for l in exprs for r in exprs]
    return list(dict.fromkeys(exprs))


def enumerate_universe(
    shared: Sequence[str] = ("x", "y"),
    local_names: Sequence[str] = ("r1", "r2"),
    owner: str = "P0",
    constants: Sequence[int] = (0, 1),
    depth: int = 1,
    ops: Sequence[BinOp] = (BinOp.EQ,),
    guards: bool = True,
    fences: Sequence[FenceKind] = (FenceKind.FULL,),
    annotations: bool = False,
) -> Tuple[Action, ...]:
    """小变量集、小常量集上的指令全集；不包含同时读写共享变量的指令"""
    shared_vars = [Variable.shared(n) for n in shared]
    local_vars = [Variable.local(owner, n) for n in local_names]
    atoms: List[Expression] = [Const(c) for c in constants] + [Var(v) for v in shared_vars + local_vars]
    exprs = enumerate_expressions(atoms, depth, ops)
    actions: List[Action] = []
    for lhs in shared_vars + local_vars:
        actions.extend(Assign(lhs, e) for e in exprs)
    if guards:
        actions.extend(Guard(e) for e in exprs)
    actions = [a for a in actions if not is_mixed(a)]
    if annotations:
        plain = list(actions)
        for a in plain:
            if is_store(a):
                actions.append(Annotated(Ordering.RELEASE, a))
            if is_load(a):
                actions.append(Annotated(Ordering.ACQUIRE, a))
    actions.extend(Fence(k) for k in fences)
    return tuple(dict.fromkeys(actions))


def universe_variables(universe: Iterable[Action]) -> Tuple[Variable, ...]:
    found = set()
    for a in universe:
        found |= var_analysis(a).fv
    return tuple(sorted(found, key=lambda v: v.sort_key))
