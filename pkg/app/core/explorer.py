"""状态级穷举探索：多线程交错、最终状态集合、eff / wp / Hoare 三元组"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from app.core.config import DOMAIN_SIZE, STATE_CAP, UNROLL_BOUND
from app.core.errors import IncompatibleBackend, NonTerminatingExploration, OwnershipViolation
from app.core.lang import (
    Action,
    Annotated,
    Assign,
    Command,
    Expression,
    Guard,
    MemoryModelId,
    PSeq,
    Terminated,
    Variable,
    actions_of,
    classify_kind,
    command_vars,
    eval_expr,
    free_vars,
    var_analysis,
)
from app.core.memory_models import KIND_CHECKED_MODELS
from app.core.opsem import split_threads, step, under_model
from app.core.pipeline import PipelineConfig, pipeline_step, require_pipeline_model
from app.core.storebuffer import SBConfig, check_assembler_level, sb_step

logger = logging.getLogger(__name__)


class Backend(str, Enum):
    PSEQ = "pseq"
    PIPELINE = "pipeline"
    STOREBUFFER = "storebuffer"


class State(Mapping[Variable, int]):
    """变量到值的全映射，不可变且可哈希"""

    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping[Variable, int]):
        self._values = dict(values)
        self._hash = hash(frozenset(self._values.items()))

    def __getitem__(self, key: Variable) -> int:
        return self._values[key]

    def __iter__(self) -> Iterator[Variable]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, State):
            return self._hash == other._hash and self._values == other._values
        return NotImplemented

    def set(self, var: Variable, value: int) -> "State":
        values = dict(self._values)
        values[var] = value
        return State(values)

    def project(self, variables: Iterable[Variable]) -> "State":
        return State({v: self._values[v] for v in variables if v in self._values})

    @property
    def sort_key(self) -> Tuple[int, ...]:
        return tuple(self._values[v] for v in sorted(self._values, key=lambda v: v.sort_key))

    def as_dict(self) -> Dict[str, int]:
        return {str(v): self._values[v] for v in sorted(self._values, key=lambda v: v.sort_key)}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.as_dict().items())
        return f"State({inner})"


@dataclass(frozen=True)
class Domain:
    """有限取值域 {0..size-1}，算术取模"""
    size: int

    @property
    def values(self) -> range:
        return range(self.size)

    @property
    def modulus(self) -> int:
        return self.size


def as_domain(domain: Union["Domain", int, Iterable[int], None]) -> Domain:
    if domain is None:
        return Domain(DOMAIN_SIZE)
    if isinstance(domain, Domain):
        return domain
    if isinstance(domain, int):
        return Domain(domain)
    values = sorted(set(domain))
    if values != list(range(len(values))):
        raise ValueError(f"取值域必须是 0..V-1: {values}")
    return Domain(len(values))


Predicate = Union[Expression, FrozenSet[State]]
Init = Union[Predicate, State, Mapping[Variable, int], None]


def all_states(variables: Sequence[Variable], domain: Domain) -> Iterator[State]:
    for values in itertools.product(domain.values, repeat=len(variables)):
        yield State(dict(zip(variables, values)))


def holds(pred: Predicate, s: State, modulus: Optional[int] = None) -> bool:
    if isinstance(pred, (frozenset, set)):
        return s in pred
    return eval_expr(pred, s, modulus) != 0


def predicate_vars(pred: Predicate) -> FrozenSet[Variable]:
    if isinstance(pred, (frozenset, set)):
        found = set()
        for s in pred:
            found |= set(s)
        return frozenset(found)
    return free_vars(pred)


def apply_action(a: Action, s: State, modulus: Optional[int] = None) -> Optional[State]:
    """指令在状态上的效果；guard 不成立时返回 None"""
    if isinstance(a, Annotated):
        a = a.inner
    if isinstance(a, Assign):
        return s.set(a.lhs, eval_expr(a.rhs, s, modulus))
    if isinstance(a, Guard):
        return s if eval_expr(a.cond, s, modulus) != 0 else None
    return s


# ---------------------------------------------------------------------------
# 探索
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplorationResult:
    final_states: FrozenSet[State]
    visited: int


ThreadConfig = Union[Command, PipelineConfig, SBConfig]


def _check_ownership(threads: Sequence[Command]) -> None:
    owners_seen: Dict[str, int] = {}
    for i, thread in enumerate(threads):
        for a in actions_of(thread):
            for v in var_analysis(a).wv:
                if v.is_shared:
                    continue
                previous = owners_seen.setdefault(v.owner, i)
                if previous != i:
                    raise OwnershipViolation(f"线程 {i} 写入了线程 {previous} 的局部变量 {v}")


def _admit(threads: Sequence[Command], model: Optional[MemoryModelId], backend: Backend) -> List[ThreadConfig]:
    if model is None and backend is not Backend.PSEQ:
        raise IncompatibleBackend(f"{backend.value} 后端需要指定内存模型")
    if backend is Backend.STOREBUFFER and model is not MemoryModelId.TSO:
        raise IncompatibleBackend(f"存储缓冲后端只适用于 TSO，当前模型为 {model.value}")
    if backend is Backend.PIPELINE:
        require_pipeline_model(model)
    _check_ownership(threads)
    for thread in threads:
        for a in actions_of(thread):
            if model in KIND_CHECKED_MODELS:
                classify_kind(a)
            if backend is Backend.STOREBUFFER:
                check_assembler_level(a)
    if backend is Backend.PSEQ:
        return [under_model(t, model) if model else t for t in threads]
    for thread in threads:
        if any(isinstance(t, PSeq) and t.model is MemoryModelId.PAR for t in _subterms(thread)):
            raise IncompatibleBackend(f"{backend.value} 后端的线程内不能再有并行组合")
    code = [under_model(t, MemoryModelId.SC) for t in threads]
    if backend is Backend.PIPELINE:
        return [PipelineConfig((), c) for c in code]
    return [SBConfig((), c) for c in code]


def _subterms(c: Command) -> Iterator[Command]:
    yield c
    for child in ("left", "right", "body"):
        sub = getattr(c, child, None)
        if sub is not None:
            yield from _subterms(sub)


def _is_terminal(cfg: ThreadConfig) -> bool:
    if isinstance(cfg, (PipelineConfig, SBConfig)):
        return cfg.is_terminal
    return isinstance(cfg, Terminated)


def initial_states(init: Init, variables: Sequence[Variable], domain: Optional[Domain] = None) -> List[State]:
    """初始状态：未列出的变量默认为 0"""
    if init is None:
        return [State({v: 0 for v in variables})]
    if isinstance(init, State):
        return [State({**{v: 0 for v in variables}, **init})]
    if isinstance(init, (frozenset, set)):
        return sorted(init, key=lambda s: s.sort_key)
    if isinstance(init, Mapping):
        return [State({**{v: 0 for v in variables}, **init})]
    dom = as_domain(domain)
    return [s for s in all_states(variables, dom) if holds(init, s, dom.modulus)]


def declared_variables(threads: Sequence[Command], *extra: Iterable[Variable]) -> Tuple[Variable, ...]:
    found = set()
    for t in threads:
        found |= command_vars(t)
    for group in extra:
        found |= set(group)
    return tuple(sorted(found, key=lambda v: v.sort_key))


def run_exploration(
    threads: Sequence[Command],
    model: Optional[MemoryModelId],
    backend: Backend,
    initial: Iterable[State],
    unroll_bound: int = UNROLL_BOUND,
    cap: Optional[int] = None,
    modulus: Optional[int] = None,
) -> ExplorationResult:
    """从给定初始状态出发的可达最终状态（带访问集合的 DFS）"""
    cap = STATE_CAP if cap is None else cap
    flat = [t for thread in threads for t in split_threads(thread)]
    configs = tuple(_admit(flat, model, backend))

    successor_cache: Dict[ThreadConfig, FrozenSet[Tuple[Action, ThreadConfig]]] = {}

    def successors(cfg: ThreadConfig, state: State) -> Iterable[Tuple[Action, ThreadConfig]]:
        if isinstance(cfg, SBConfig):
            return sb_step(cfg, state, unroll_bound, modulus)
        cached = successor_cache.get(cfg)
        if cached is None:
            if isinstance(cfg, PipelineConfig):
                cached = pipeline_step(cfg, model, unroll_bound)
            else:
                cached = frozenset((s.label, s.next) for s in step(cfg, unroll_bound))
            successor_cache[cfg] = cached
        return cached

    finals: Set[State] = set()
    visited: Set[Tuple[Tuple[ThreadConfig, ...], State]] = set()
    stack = [(configs, s) for s in initial]
    while stack:
        node = stack.pop()
        if node in visited:
            continue
        visited.add(node)
        if len(visited) > cap:
            logger.warning(f"探索超过配置上限 {cap}")
            raise NonTerminatingExploration(cap)
        cfgs, state = node
        if all(_is_terminal(cfg) for cfg in cfgs):
            finals.add(state)
            continue
        for i, cfg in enumerate(cfgs):
            for label, nxt in successors(cfg, state):
                new_state = apply_action(label, state, modulus)
                if new_state is None:
                    continue
                stack.append((cfgs[:i] + (nxt,) + cfgs[i + 1:], new_state))

    logger.debug(f"探索完成: 访问 {len(visited)} 个配置, {len(finals)} 个最终状态")
    return ExplorationResult(frozenset(finals), len(visited))


def explore(
    threads: Sequence[Command],
    model: Optional[MemoryModelId] = None,
    backend: Backend = Backend.PSEQ,
    init: Init = None,
    unroll_bound: int = UNROLL_BOUND,
    cap: Optional[int] = None,
    domain: Union[Domain, int, None] = None,
    variables: Optional[Sequence[Variable]] = None,
) -> FrozenSet[State]:
    """model 为 None 时保留线程自身的模型参数（仅 pseq 后端）

    init 为表达式或状态集合时按 domain 枚举初始状态，算术取模；
    否则按普通整数求值。
    """
    if init is None or isinstance(init, Mapping):
        fixed = dict(init or {})
        if variables is None:
            variables = declared_variables(threads, fixed.keys())
        modulus = as_domain(domain).modulus if domain is not None else None
        starts = initial_states(init, variables)
    else:
        dom = as_domain(domain)
        if variables is None:
            variables = declared_variables(threads, predicate_vars(init))
        modulus = dom.modulus
        starts = initial_states(init, variables, dom)
    return run_exploration(threads, model, backend, starts, unroll_bound, cap, modulus).final_states


# ---------------------------------------------------------------------------
# eff / wp / Hoare
# ---------------------------------------------------------------------------

Relation = FrozenSet[Tuple[State, State]]


def eff_trace(
    t: Sequence[Action], domain: Union[Domain, int, None] = None, variables: Optional[Sequence[Variable]] = None
) -> Relation:
    """按顺序组合每条指令的效果"""
    dom = as_domain(domain)
    if variables is None:
        found = set()
        for a in t:
            found |= var_analysis(a).fv
        variables = sorted(found, key=lambda v: v.sort_key)
    pairs = set()
    for s in all_states(variables, dom):
        current: Optional[State] = s
        for a in t:
            current = apply_action(a, current, dom.modulus)
            if current is None:
                break
        if current is not None:
            pairs.add((s, current))
    return frozenset(pairs)


def eff_command(
    c: Command,
    domain: Union[Domain, int, None] = None,
    unroll_bound: int = UNROLL_BOUND,
    variables: Optional[Sequence[Variable]] = None,
) -> Relation:
    """命令的效果：所有终止运行的效果之并"""
    dom = as_domain(domain)
    if variables is None:
        variables = declared_variables([c])
    pairs = set()
    for s in all_states(variables, dom):
        result = run_exploration([c], None, Backend.PSEQ, [s], unroll_bound, modulus=dom.modulus)
        pairs.update((s, t) for t in result.final_states)
    return frozenset(pairs)


def wp(
    c: Command,
    post: Predicate,
    domain: Union[Domain, int, None] = None,
    unroll_bound: int = UNROLL_BOUND,
    variables: Optional[Sequence[Variable]] = None,
) -> FrozenSet[State]:
    """最弱前置条件：所有后继状态都满足 post 的初始状态集合"""
    dom = as_domain(domain)
    if variables is None:
        variables = declared_variables([c], predicate_vars(post))
    result = set()
    for s in all_states(variables, dom):
        finals = run_exploration([c], None, Backend.PSEQ, [s], unroll_bound, modulus=dom.modulus).final_states
        if all(holds(post, t, dom.modulus) for t in finals):
            result.add(s)
    return frozenset(result)


def hoare_check(
    pre: Predicate,
    c: Command,
    post: Predicate,
    domain: Union[Domain, int, None] = None,
    unroll_bound: int = UNROLL_BOUND,
    variables: Optional[Sequence[Variable]] = None,
) -> bool:
    """{pre} c {post} 成立当且仅当 pre 蕴含 wp(c, post)"""
    dom = as_domain(domain)
    if variables is None:
        variables = declared_variables([c], predicate_vars(pre), predicate_vars(post))
    weakest = wp(c, post, dom, unroll_bound, variables)
    return all(s in weakest for s in all_states(variables, dom) if holds(pre, s, dom.modulus))
