"""代数定律、后端等价性与 wp / Hoare 定律的穷举和抽样检查"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from tqdm import tqdm

from app.core.config import DOMAIN_SIZE, SAMPLES, SEED, UNROLL_BOUND
from app.core.explorer import (
    Backend,
    Domain,
    Init,
    State,
    all_states,
    as_domain,
    declared_variables,
    eff_command,
    explore,
    hoare_check,
    wp,
)
from app.core.lang import (
    Act,
    Action,
    ActionClass,
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
    PSeq,
    Var,
    Variable,
    chain,
    classify_visibility,
    eval_expr,
    negate,
    par,
    seq,
    subst,
)
from app.core.memory_models import enumerate_universe, reorder_after, reorder_over_command, universe_variables
from app.core.opsem import enumerate_traces, trace_equiv, trace_refines, under_model
from app.models.schema import CheckSummary, LawCheckResult
from app.services.sampling import ANNOTATED_MODELS, MODEL_FENCES, ProgramSampler, ProgramShape

logger = logging.getLogger(__name__)

# 带 full 屏障能恢复顺序推理的模型
FENCED_MODELS: Tuple[MemoryModelId, ...] = (
    MemoryModelId.SC,
    MemoryModelId.G,
    MemoryModelId.TSO,
    MemoryModelId.RCPC,
    MemoryModelId.RCSC,
    MemoryModelId.ARM,
    MemoryModelId.RISCV,
)

# 后端等价性检查的模型
PIPELINE_MODELS: Tuple[MemoryModelId, ...] = (
    MemoryModelId.G0,
    MemoryModelId.G,
    MemoryModelId.TSO,
    MemoryModelId.RCPC,
    MemoryModelId.RCSC,
    MemoryModelId.ARM,
    MemoryModelId.RISCV,
)

# 顺序性检查的模型（PAR 不是顺序模型）
SEQUENTIAL_MODELS: Tuple[MemoryModelId, ...] = tuple(m for m in MemoryModelId if m is not MemoryModelId.PAR)

FULL_FENCE = Fence(FenceKind.FULL)


@dataclass
class LawTally:
    """累计一条定律的实例数与反例"""
    law: str
    model: Optional[MemoryModelId] = None
    checked: int = 0
    counterexamples: List[str] = field(default_factory=list)
    violations: int = 0
    limit: int = 5

    def record(self, ok: bool, *witness: object) -> None:
        self.checked += 1
        if ok:
            return
        self.violations += 1
        if len(self.counterexamples) < self.limit:
            self.counterexamples.append(" / ".join(str(w) for w in witness))
        logger.debug(f"定律 {self.law} [{self.model}] 反例: {witness}")

    def result(self) -> LawCheckResult:
        return LawCheckResult(
            law=self.law,
            model=self.model.value if self.model else None,
            checked=self.checked,
            violations=self.violations,
            counterexamples=self.counterexamples,
        )


def _progress(iterable: Iterable, desc: str, show: bool) -> Iterable:
    return tqdm(iterable, desc=desc, disable=not show, leave=False)


def visible(trace: Sequence[Action]) -> Optional[Tuple[Action, ...]]:
    """省略静默指令；含不可行 guard 时返回 None"""
    result = []
    for a in trace:
        kind = classify_visibility(a)
        if kind is ActionClass.INFEASIBLE:
            return None
        if kind is ActionClass.VISIBLE:
            result.append(a)
    return tuple(result)


def _traces_of(*candidates: Sequence[Action]) -> FrozenSet[Tuple[Action, ...]]:
    return frozenset(t for t in (visible(c) for c in candidates) if t is not None)


# ---------------------------------------------------------------------------
# 两条指令的定律（穷举）
# ---------------------------------------------------------------------------

def pair_traces(model: MemoryModelId, alpha: Action, beta: Action) -> FrozenSet[Tuple[Action, ...]]:
    """α ;m β 的迹：按顺序执行，或 β（可能经 forwarding 改写）越过 α 先执行"""
    moved = reorder_over_command(model, Act(alpha), beta)
    in_order = _in_order(alpha, beta)
    return in_order if moved is None else in_order | _traces_of((moved, alpha))


@lru_cache(maxsize=65536)
def _in_order(alpha: Action, beta: Action) -> FrozenSet[Tuple[Action, ...]]:
    return _traces_of((alpha, beta))


def two_action_laws(
    model: MemoryModelId,
    universe: Sequence[Action],
    progress: bool = False,
    sampler: Optional[ProgramSampler] = None,
    samples: int = 0,
) -> List[LawCheckResult]:
    """keep-order / swap-order / reduce，按迹集合精确比较

    全集上的每一对用 pair_traces 计算；另外抽 samples 对与 enumerate_traces 的完整迹枚举对照。
    """
    keep = LawTally("2actions-keep-order", model)
    swap = LawTally("2actions-swap-order", model)
    reduce = LawTally("2actions-reduce", model)
    opsem = LawTally("2actions-opsem", model)
    for alpha in _progress(universe, f"2actions {model.value}", progress):
        for beta in universe:
            pseq_traces = pair_traces(model, alpha, beta)
            in_order = _in_order(alpha, beta)
            moved = reorder_after(model, alpha, beta)
            keep.record(in_order <= pseq_traces, alpha, beta)
            if moved is None:
                reduce.record(pseq_traces == in_order, alpha, beta)
                continue
            swapped = _traces_of((moved, alpha))
            swap.record(swapped <= pseq_traces, alpha, beta, moved)
            reduce.record(pseq_traces == in_order | swapped, alpha, beta, moved)
    if sampler is not None:
        for _ in range(samples):
            alpha, beta = sampler.pick(universe, 2)
            opsem.record(enumerate_traces(chain(model, [alpha, beta])) == pair_traces(model, alpha, beta), alpha, beta)
    return [keep.result(), swap.result(), reduce.result(), opsem.result()]


# ---------------------------------------------------------------------------
# 抽样定律
# ---------------------------------------------------------------------------

def fence_to_seqc(model: MemoryModelId, sampler: ProgramSampler, universe: Sequence[Action], samples: int) -> LawCheckResult:
    """c1 ;m fence ;m c2 与 c1 ; fence ; c2 迹等价"""
    tally = LawTally("fence-to-seqc", model)
    for _ in range(samples):
        a1, a2, b1, b2 = sampler.pick(universe, 4)
        c1, c2 = chain(model, [a1, a2]), chain(model, [b1, b2])
        weak = chain(model, [c1, FULL_FENCE, c2])
        strong = seq(c1, seq(FULL_FENCE, c2))
        tally.record(trace_equiv(weak, strong), c1, c2)
    return tally.result()


def pseqc_assoc(model: MemoryModelId, sampler: ProgramSampler, universe: Sequence[Action], samples: int) -> LawCheckResult:
    tally = LawTally("pseqc-assoc", model)
    for _ in range(samples):
        a, b, c = (Act(x) for x in sampler.pick(universe, 3))
        right = PSeq(model, a, PSeq(model, b, c))
        left = PSeq(model, PSeq(model, a, b), c)
        tally.record(trace_equiv(right, left), a, b, c)
    return tally.result()


def keep_order(model: MemoryModelId, sampler: ProgramSampler, universe: Sequence[Action], samples: int) -> LawCheckResult:
    """c1 ;m c2 ⊑ c1 ; c2"""
    tally = LawTally("keep-order", model)
    for _ in range(samples):
        a1, a2, b1, b2 = sampler.pick(universe, 4)
        c1, c2 = chain(model, [a1, a2]), chain(model, [b1, b2])
        tally.record(trace_refines(under_model(seq(c1, c2), model), seq(c1, c2)), c1, c2)
    return tally.result()


def choice_laws(sampler: ProgramSampler, universe: Sequence[Action], samples: int) -> List[LawCheckResult]:
    """chooseL、交错定律以及选择对并行组合的分配律"""
    choose = LawTally("chooseL")
    interleave = LawTally("fix-interleaving")
    distribute = LawTally("dist-choice-pl")
    for _ in range(samples):
        a, b, c, d = (Act(x) for x in sampler.pick(universe, 4))
        choose.record(trace_refines(Choice(a, b), a), a, b)
        interleave.record(trace_refines(par(seq(a, c), d), seq(a, par(c, d))), a, c, d)
        distribute.record(trace_equiv(par(Choice(a, b), d), Choice(par(a, d), par(b, d))), a, b, d)
    return [choose.result(), interleave.result(), distribute.result()]


# ---------------------------------------------------------------------------
# 后端等价性
# ---------------------------------------------------------------------------

def backend_equivalence(model: MemoryModelId, sampler: ProgramSampler, samples: int, progress: bool = False) -> LawCheckResult:
    """流水线与 pseq 的最终状态集合一致"""
    tally = LawTally("pipeline=pseqc", model)
    for _ in _progress(range(samples), f"pipeline {model.value}", progress):
        threads = sampler.program(model)
        pseq = explore(threads, model, Backend.PSEQ)
        pipeline = explore(threads, model, Backend.PIPELINE)
        tally.record(pseq == pipeline, *threads)
    return tally.result()


def storebuffer_equivalence(sampler: ProgramSampler, samples: int, progress: bool = False) -> LawCheckResult:
    """存储缓冲、TSO 流水线与 TSO pseq 三者一致"""
    tally = LawTally("storebuffer=pipeline=pseqc", MemoryModelId.TSO)
    for _ in _progress(range(samples), "storebuffer", progress):
        threads = sampler.program(MemoryModelId.TSO, assembler=True)
        results = {b: explore(threads, MemoryModelId.TSO, b) for b in Backend}
        tally.record(len(set(results.values())) == 1, *threads)
    return tally.result()


# ---------------------------------------------------------------------------
# wp / Hoare
# ---------------------------------------------------------------------------

def _states_where(pred: Expression, variables: Sequence[Variable], domain: Domain) -> FrozenSet[State]:
    return frozenset(s for s in all_states(variables, domain) if eval_expr(pred, s, domain.modulus) != 0)


def hoare_laws(
    sampler: ProgramSampler,
    universe: Sequence[Action],
    samples: int,
    domain: int = DOMAIN_SIZE,
    models: Sequence[MemoryModelId] = FENCED_MODELS,
) -> List[LawCheckResult]:
    """赋值 / guard / 屏障公理、顺序组合、选择合取与屏障中点规则"""
    dom = as_domain(domain)
    variables = universe_variables(universe)
    guards = [a.cond for a in universe if isinstance(a, Guard)] or [Const(1)]
    asgn = LawTally("htrip-asgn")
    seqc = LawTally("htrip-seqc")
    choice = LawTally("htrip-choice")
    fence = LawTally("htrip-pseqc-fence")
    for i in range(samples):
        a, b, c, d = sampler.pick(universe, 4)
        q = sampler.rng.choice(guards)
        weakest = wp(Act(a), q, dom, variables=variables)
        if isinstance(a, Assign):
            expected = _states_where(subst(q, a.lhs, a.rhs), variables, dom)
        elif isinstance(a, Guard):
            expected = _states_where(Binary(BinOp.OR, negate(a.cond), q), variables, dom)
        else:
            expected = _states_where(q, variables, dom)
        asgn.record(weakest == expected, a, q)

        c1, c2 = Act(a), Act(b)
        seqc.record(wp(seq(c1, c2), q, dom, variables=variables) == wp(c1, wp(c2, q, dom, variables=variables), dom, variables=variables), a, b, q)
        choice.record(
            wp(Choice(c1, c2), q, dom, variables=variables)
            == wp(c1, q, dom, variables=variables) & wp(c2, q, dom, variables=variables),
            a, b, q,
        )
        m = models[i % len(models)]
        left, right = chain(m, [a, b]), chain(m, [c, d])
        weak = chain(m, [left, FULL_FENCE, right])
        strong = seq(left, seq(FULL_FENCE, right))
        fence.record(wp(weak, q, dom, variables=variables) == wp(strong, q, dom, variables=variables), m.value, left, right, q)
    return [asgn.result(), seqc.result(), choice.result(), fence.result()]


def _sb_threads(fenced: bool) -> Tuple[List[Command], Tuple[Variable, ...]]:
    x, y = Variable.shared("x"), Variable.shared("y")
    r1, r2 = Variable.local("P0", "r1"), Variable.local("P1", "r2")
    middle = [FULL_FENCE] if fenced else []
    t0 = chain(MemoryModelId.SC, [Assign(x, Const(1))] + middle + [Assign(r1, Var(y))])
    t1 = chain(MemoryModelId.SC, [Assign(y, Const(1))] + middle + [Assign(r2, Var(x))])
    return [t0, t1], (x, y, r1, r2)


def sb_hoare_triples(domain: int = DOMAIN_SIZE) -> LawCheckResult:
    """{x=y=0} SB {¬(r1=0 ∧ r2=0)}：SC 成立、TSO 不成立、加 mfence 后成立"""
    tally = LawTally("htrip-SB")
    for model, fenced, expected in (
        (MemoryModelId.SC, False, True),
        (MemoryModelId.TSO, False, False),
        (MemoryModelId.TSO, True, True),
    ):
        threads, (x, y, r1, r2) = _sb_threads(fenced)
        program = par(under_model(threads[0], model), under_model(threads[1], model))
        pre = Binary(BinOp.AND, Binary(BinOp.EQ, Var(x), Const(0)), Binary(BinOp.EQ, Var(y), Const(0)))
        post = negate(Binary(BinOp.AND, Binary(BinOp.EQ, Var(r1), Const(0)), Binary(BinOp.EQ, Var(r2), Const(0))))
        tally.record(hoare_check(pre, program, post, domain) == expected, model.value, "mfence" if fenced else "plain")
    return tally.result()


# ---------------------------------------------------------------------------
# 顺序性与顺序一致性
# ---------------------------------------------------------------------------

def sequential_check(
    model: MemoryModelId,
    programs: Sequence[Command],
    domain: int = DOMAIN_SIZE,
    unroll_bound: int = UNROLL_BOUND,
) -> LawCheckResult:
    """单线程程序在 m 下的效果包含于 SC 下的效果"""
    tally = LawTally("sequential", model)
    for c in programs:
        variables = declared_variables([c])
        weak = eff_command(under_model(c, model), domain, unroll_bound, variables)
        strong = eff_command(under_model(c, MemoryModelId.SC), domain, unroll_bound, variables)
        tally.record(weak <= strong, c)
    return tally.result()


def sc_equivalent(
    threads: Sequence[Command],
    model: MemoryModelId,
    observe: Iterable[Variable] = (),
    init: Init = None,
    unroll_bound: int = UNROLL_BOUND,
) -> bool:
    """m 下与 SC 下的最终状态在共享变量（以及 observe 中的变量）上的投影相同"""
    variables = declared_variables(threads)
    observed = [v for v in variables if v.is_shared] + [v for v in observe if not v.is_shared]
    weak = explore(threads, model, Backend.PSEQ, init, unroll_bound)
    strong = explore(threads, MemoryModelId.SC, Backend.PSEQ, init, unroll_bound)
    return {s.project(observed) for s in weak} == {s.project(observed) for s in strong}


def sc_demonstrations() -> LawCheckResult:
    """加屏障的 SB 在 TSO 下顺序一致，不加屏障的不是"""
    tally = LawTally("seq-consistent")
    for fenced in (False, True):
        threads, (_, _, r1, r2) = _sb_threads(fenced)
        tally.record(sc_equivalent(threads, MemoryModelId.TSO, observe=(r1, r2)) == fenced, "SB", "mfence" if fenced else "plain")
    return tally.result()


# ---------------------------------------------------------------------------
# 汇总入口
# ---------------------------------------------------------------------------

def law_universe(model: Optional[MemoryModelId] = None, **overrides) -> Tuple[Action, ...]:
    """2 个共享变量、2 个寄存器、常量 {0,1}、深度 1；按模型加入它支持的屏障和注解"""
    options = dict(
        fences=MODEL_FENCES.get(model, (FenceKind.FULL,)),
        annotations=model in ANNOTATED_MODELS,
    )
    options.update(overrides)
    return enumerate_universe(**options)


def run_law_checks(
    models: Optional[Sequence[MemoryModelId]] = None,
    samples: int = SAMPLES,
    seed: int = SEED,
    universe_overrides: Optional[dict] = None,
    domain: int = DOMAIN_SIZE,
    shape: Optional[ProgramShape] = None,
    progress: bool = False,
) -> CheckSummary:
    models = list(models or MemoryModelId)
    overrides = universe_overrides or {}
    sampler = ProgramSampler(seed, shape)
    results: List[LawCheckResult] = []

    for m in models:
        logger.info(f"检查模型 {m.value} 的定律")
        universe = law_universe(m, **overrides)
        results.extend(two_action_laws(m, universe, progress, sampler, samples))
        results.append(pseqc_assoc(m, sampler, universe, samples))
        results.append(keep_order(m, sampler, universe, samples))
        if m in FENCED_MODELS:
            results.append(fence_to_seqc(m, sampler, universe, samples))
        if m in PIPELINE_MODELS:
            results.append(backend_equivalence(m, sampler, samples, progress))
        if m in SEQUENTIAL_MODELS:
            programs = [sampler.program(m, threads=1)[0] for _ in range(max(1, samples // 10))]
            results.append(sequential_check(m, programs, domain))

    base = law_universe(**overrides)
    results.extend(choice_laws(sampler, base, samples))
    if MemoryModelId.TSO in models:
        results.append(storebuffer_equivalence(sampler, samples, progress))
    fenced = [m for m in FENCED_MODELS if m in models] or list(FENCED_MODELS)
    # wp 检查的状态数随变量个数指数增长，只用无注解的基础全集
    results.extend(hoare_laws(sampler, base, max(1, samples // 10), domain, fenced))
    results.append(sb_hoare_triples(domain))
    results.append(sc_demonstrations())

    summary = CheckSummary(kind="laws", results=results, seed=seed)
    logger.info(f"定律检查完成: {sum(r.checked for r in results)} 个实例, {sum(r.violations for r in results)} 个反例")
    return summary
