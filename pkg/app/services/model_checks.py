"""模型层级与 well-behaved 条件的检查"""
import logging
from typing import List, Optional, Sequence, Tuple

from app.core.config import DOMAIN_SIZE
from app.core.lang import Action, FenceKind, Guard, MemoryModelId, strip_annotation
from app.core.memory_models import (
    WELL_BEHAVED_MODELS,
    EffOracle,
    ModelLike,
    enumerate_universe,
    refinement_violations,
    universe_variables,
    well_behaved_check,
)
from app.models.schema import CheckSummary, LawCheckResult

logger = logging.getLogger(__name__)


def hierarchy_chain(domain: int = DOMAIN_SIZE, universe: Sequence[Action] = ()) -> List[ModelLike]:
    """从弱到强：Eff ⊑ G0 ⊑ G ⊑ RCpc ⊑ RISCV ⊑ RCsc ⊑ ARM ⊑ TSO ⊑ SC"""
    return [
        EffOracle(domain, universe_variables(universe)),
        MemoryModelId.G0,
        MemoryModelId.G,
        MemoryModelId.RCPC,
        MemoryModelId.RISCV,
        MemoryModelId.RCSC,
        MemoryModelId.ARM,
        MemoryModelId.TSO,
        MemoryModelId.SC,
    ]


def _name(m: ModelLike) -> str:
    return m.value if isinstance(m, MemoryModelId) else str(m)


def _pair_universe(weaker: ModelLike, stronger: ModelLike, universe: Sequence[Action]) -> Tuple[Action, ...]:
    # RCsc 允许 store 越过分支而 RISC-V 不允许，这一对只在无 guard 的部分可比
    if (weaker, stronger) == (MemoryModelId.RISCV, MemoryModelId.RCSC):
        return tuple(a for a in universe if not isinstance(strip_annotation(a), Guard))
    return tuple(universe)


def check_hierarchy(
    universe: Optional[Sequence[Action]] = None,
    domain: int = DOMAIN_SIZE,
    limit: int = 5,
) -> CheckSummary:
    """相邻两个模型逐对检查 model_refines"""
    universe = tuple(universe or hierarchy_universe())
    models = hierarchy_chain(domain, universe)
    results = []
    for weaker, stronger in zip(models, models[1:]):
        pair_universe = _pair_universe(weaker, stronger, universe)
        report = refinement_violations(weaker, stronger, pair_universe, limit)
        logger.info(f"{_name(weaker)} ⊑ {_name(stronger)}: {report.checked} 对, {len(report.violations)} 个反例")
        results.append(
            LawCheckResult(
                law=f"{_name(weaker)} ⊑ {_name(stronger)}",
                model=None,
                checked=report.checked,
                violations=len(report.violations),
                counterexamples=[f"{a} / {b} -> {c}" for a, b, c in report.violations],
            )
        )
    return CheckSummary(kind="hierarchy", results=results)


def hierarchy_universe(**overrides) -> Tuple[Action, ...]:
    """共同指令类型：赋值、guard 与 full 屏障"""
    return enumerate_universe(**overrides)


def wellbehaved_universe(**overrides) -> Tuple[Action, ...]:
    options = dict(fences=tuple(FenceKind), annotations=True)
    options.update(overrides)
    return enumerate_universe(**options)


def check_well_behaved(
    universe: Optional[Sequence[Action]] = None,
    models: Sequence[MemoryModelId] = WELL_BEHAVED_MODELS,
    limit: int = 20,
) -> CheckSummary:
    universe = tuple(universe or wellbehaved_universe())
    results = []
    for m in models:
        report = well_behaved_check(m, universe, limit)
        logger.info(f"well-behaved {m.value}: {report.checked} 对, {len(report.violations)} 个反例")
        results.append(
            LawCheckResult(
                law="well-behaved",
                model=m.value,
                checked=report.checked,
                violations=len(report.violations),
                counterexamples=report.violations[:limit],
            )
        )
    return CheckSummary(kind="wellbehaved", results=results)
