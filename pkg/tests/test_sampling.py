import pytest

from app.core.explorer import Backend, explore
from app.core.lang import Annotated, Assign, Const, Fence, FenceKind, Guard, MemoryModelId, actions_of, free_vars
from app.services.sampling import ProgramSampler, ProgramShape


def _guards(threads):
    return [a for t in threads for a in actions_of(t) if isinstance(a, Guard)]


def _reads_shared(guard: Guard) -> bool:
    return any(v.is_shared for v in free_vars(guard.cond))


def _programs_with_shared_guards(sampler: ProgramSampler, model: MemoryModelId, count: int, assembler: bool = False):
    found = []
    while len(found) < count:
        threads = sampler.program(model, assembler=assembler)
        if any(_reads_shared(g) for g in _guards(threads)):
            found.append(threads)
    return found


def test_same_seed_same_programs() -> None:
    first = [ProgramSampler(11).program(MemoryModelId.ARM) for _ in range(5)]
    second = [ProgramSampler(11).program(MemoryModelId.ARM) for _ in range(5)]
    assert first == second


def test_guards_read_shared_variables_and_registers() -> None:
    sampler = ProgramSampler(3)
    guards = [g for _ in range(100) for g in _guards(sampler.program(MemoryModelId.ARM))]
    shared = [g for g in guards if _reads_shared(g)]
    assert shared
    assert len(shared) < len(guards)
    names = {v.name for g in shared for v in free_vars(g.cond)}
    assert names <= set(ProgramShape().shared)


def test_assembler_programs_store_constants_and_use_full_fences() -> None:
    sampler = ProgramSampler(5)
    for _ in range(50):
        for a in (a for t in sampler.program(MemoryModelId.TSO, assembler=True) for a in actions_of(t)):
            assert not isinstance(a, Annotated)
            if isinstance(a, Fence):
                assert a.kind is FenceKind.FULL
            if isinstance(a, Assign) and a.lhs.is_shared:
                assert isinstance(a.rhs, Const)


@pytest.mark.parametrize("model", [MemoryModelId.TSO, MemoryModelId.ARM, MemoryModelId.RISCV])
def test_pipeline_equals_pseq_with_shared_guards(model) -> None:
    sampler = ProgramSampler(9, ProgramShape(max_actions=5))
    for threads in _programs_with_shared_guards(sampler, model, 8):
        assert explore(threads, model, Backend.PSEQ) == explore(threads, model, Backend.PIPELINE), threads


def test_storebuffer_equals_pseq_with_shared_guards() -> None:
    sampler = ProgramSampler(13, ProgramShape(max_actions=5))
    for threads in _programs_with_shared_guards(sampler, MemoryModelId.TSO, 8, assembler=True):
        results = {b: explore(threads, MemoryModelId.TSO, b) for b in Backend}
        assert len(set(results.values())) == 1, threads
