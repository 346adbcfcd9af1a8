import pytest

from app.core.errors import UnsupportedMixedAccess
from app.core.lang import (
    TAU,
    Act,
    Annotated,
    Assign,
    Binary,
    BinOp,
    Choice,
    Const,
    Fence,
    FenceKind,
    Guard,
    MemoryModelId,
    Ordering,
    Var,
)
from app.core.memory_models import (
    WELL_BEHAVED_MODELS,
    EffOracle,
    enumerate_universe,
    forward,
    model_refines,
    refinement_violations,
    reorder_after,
    reorder_over_command,
    reorder_over_trace,
    reorders_base,
    well_behaved_check,
)
from tests.conftest import R1, R2, X, Y, load, store

FULL = Fence(FenceKind.FULL)


def rel(a):
    return Annotated(Ordering.RELEASE, a)


def acq(a):
    return Annotated(Ordering.ACQUIRE, a)


def test_forward_substitutes_stored_value() -> None:
    assert forward(store(X, 1), load(R1, X)) == Assign(R1, Const(1))
    assert forward(store(X, 1), Guard(Var(X))) == Guard(Const(1))
    assert forward(store(X, 1), acq(load(R1, X))) == acq(Assign(R1, Const(1)))
    assert forward(FULL, load(R1, X)) == load(R1, X)


def test_sc_never_and_par_always() -> None:
    assert reorder_after(MemoryModelId.SC, store(X, 1), load(R1, Y)) is None
    # PAR 不做 forwarding
    assert reorder_after(MemoryModelId.PAR, store(X, 1), load(R1, X)) == load(R1, X)


def test_tso_only_loads_pass_stores() -> None:
    m = MemoryModelId.TSO
    assert reorder_after(m, store(X, 1), load(R1, Y)) == load(R1, Y)
    assert reorder_after(m, store(X, 1), store(Y, 1)) is None
    assert reorder_after(m, load(R1, X), load(R2, Y)) is None
    assert reorder_after(m, load(R1, X), store(Y, 1)) is None
    assert reorder_after(m, store(X, 1), FULL) is None
    assert reorder_after(m, store(X, 1), TAU) == TAU


def test_tso_bypass_forwards_own_store() -> None:
    assert reorder_after(MemoryModelId.TSO, store(X, 1), load(R1, X)) == Assign(R1, Const(1))


def test_g0_ignores_shared_reads() -> None:
    assert reorders_base(MemoryModelId.G0, load(R1, X), load(R2, X))
    assert not reorders_base(MemoryModelId.G, load(R1, X), load(R2, X))
    assert not reorders_base(MemoryModelId.G0, store(X, 1), store(X, 2))


def test_g_blocks_on_full_fence_and_dependencies() -> None:
    m = MemoryModelId.G
    assert reorder_after(m, store(X, 1), store(Y, 1)) == store(Y, 1)
    assert reorder_after(m, store(X, 1), FULL) is None
    assert reorder_after(m, FULL, load(R1, X)) is None
    # r1 := x ; y := r1 是数据依赖
    assert reorder_after(m, load(R1, X), Assign(Y, Var(R1))) is None


def test_release_acquire_are_one_way() -> None:
    m = MemoryModelId.RCPC
    assert reorder_after(m, store(X, 1), rel(store(Y, 1))) is None
    assert reorder_after(m, rel(store(X, 1)), load(R1, Y)) == load(R1, Y)
    assert reorder_after(m, acq(load(R1, Y)), load(R2, X)) is None
    assert reorder_after(m, store(X, 1), acq(load(R1, Y))) == acq(load(R1, Y))


def test_rcpc_allows_acquire_over_release_but_rcsc_does_not() -> None:
    alpha, beta = rel(store(X, 1)), acq(load(R1, Y))
    assert reorder_after(MemoryModelId.RCPC, alpha, beta) == beta
    assert reorder_after(MemoryModelId.RCSC, alpha, beta) is None


def test_arm_control_and_store_fences() -> None:
    m = MemoryModelId.ARM
    guard = Guard(Binary(BinOp.EQ, Var(R1), Const(1)))
    assert reorder_after(m, guard, store(Y, 1)) is None
    assert reorder_after(m, guard, load(R2, X)) == load(R2, X)
    assert reorder_after(m, guard, Fence(FenceKind.CONTROL)) is None
    assert reorder_after(m, Fence(FenceKind.CONTROL), load(R2, X)) is None
    assert reorder_after(m, store(X, 1), Fence(FenceKind.STORE_STORE)) is None
    assert reorder_after(m, Fence(FenceKind.STORE_STORE), store(Y, 1)) is None
    assert reorder_after(m, Fence(FenceKind.STORE_STORE), load(R1, Y)) == load(R1, Y)


def test_arm_rejects_mixed_access() -> None:
    with pytest.raises(UnsupportedMixedAccess):
        reorder_after(MemoryModelId.ARM, Assign(X, Var(Y)), load(R1, X))


@pytest.mark.parametrize("m", [MemoryModelId.ARM, MemoryModelId.RISCV])
def test_forwarded_mixed_access_is_blocked(m) -> None:
    # r1 := x ; y := r1 前递后得到 y := x，不报错但不能重排
    assert reorder_after(m, load(R1, X), Assign(Y, Var(R1))) is None


def test_riscv_directional_fences() -> None:
    m = MemoryModelId.RISCV
    r_rw, rw_w = Fence(FenceKind.R_RW), Fence(FenceKind.RW_W)
    # fence r,rw 只让前面的 store 越过
    assert reorder_after(m, store(X, 1), r_rw) == r_rw
    assert reorder_after(m, load(R1, X), r_rw) is None
    assert reorder_after(m, r_rw, load(R1, X)) is None
    # fence rw,w 之后的 load 可以提前
    assert reorder_after(m, rw_w, load(R1, X)) == load(R1, X)
    assert reorder_after(m, rw_w, store(Y, 1)) is None
    assert reorder_after(m, rw_w, TAU) == TAU
    assert reorder_after(m, store(X, 1), rw_w) is None


def test_riscv_store_and_load_fences() -> None:
    m = MemoryModelId.RISCV
    ss, ll = Fence(FenceKind.STORE_STORE), Fence(FenceKind.LOAD_LOAD)
    assert reorder_after(m, store(X, 1), ss) is None
    assert reorder_after(m, ss, store(Y, 1)) is None
    assert reorder_after(m, ss, load(R1, Y)) == load(R1, Y)
    assert reorder_after(m, load(R1, X), ll) is None
    assert reorder_after(m, ll, load(R2, Y)) is None
    assert reorder_after(m, ll, store(Y, 1)) == store(Y, 1)


def test_riscv_stores_wait_for_branches() -> None:
    guard = Guard(Binary(BinOp.EQ, Var(R1), Const(1)))
    assert reorder_after(MemoryModelId.RISCV, guard, store(Y, 1)) is None
    assert reorder_after(MemoryModelId.RCSC, guard, store(Y, 1)) == store(Y, 1)


def test_reorder_over_trace_applies_each_forwarding() -> None:
    prior = (store(X, 1), store(Y, 0))
    assert reorder_over_trace(MemoryModelId.TSO, prior, load(R1, X)) == Assign(R1, Const(1))
    assert reorder_over_trace(MemoryModelId.TSO, (store(X, 1), FULL), load(R1, Y)) is None


def test_reorder_over_choice_requires_same_result() -> None:
    m = MemoryModelId.TSO
    branches = Choice(Act(store(X, 1)), Act(store(X, 2)))
    assert reorder_over_command(m, branches, load(R1, Y)) == load(R1, Y)
    # 两个分支 forwarding 出不同的值
    assert reorder_over_command(m, branches, load(R1, X)) is None


def test_eff_oracle_uses_effects() -> None:
    oracle = EffOracle(2)
    assert oracle.reorders(store(X, 1), store(Y, 1))
    assert not oracle.reorders(store(X, 1), store(X, 0))
    assert str(oracle) == "eff"


def test_refinement_between_models(small_universe) -> None:
    assert model_refines(MemoryModelId.G, MemoryModelId.TSO, small_universe)
    assert model_refines(MemoryModelId.TSO, MemoryModelId.SC, small_universe)
    universe = enumerate_universe(shared=("x", "y"), local_names=("r1",), constants=(1,), depth=0, guards=False)
    report = refinement_violations(MemoryModelId.TSO, MemoryModelId.G, universe)
    assert not report.holds
    alpha, beta, produced = report.violations[0]
    assert reorder_after(MemoryModelId.G, alpha, beta) == produced


@pytest.mark.parametrize("model", WELL_BEHAVED_MODELS)
def test_well_behaved_on_small_universe(model) -> None:
    universe = enumerate_universe(
        shared=("x", "y"),
        local_names=("r1",),
        constants=(1,),
        depth=0,
        fences=tuple(FenceKind),
        annotations=True,
    )
    report = well_behaved_check(model, universe)
    assert report.holds, report.violations


def test_well_behaved_rejects_par(small_universe) -> None:
    with pytest.raises(ValueError):
        well_behaved_check(MemoryModelId.PAR, small_universe)


def test_enumerate_universe_has_no_mixed_actions() -> None:
    universe = enumerate_universe()
    assert Assign(X, Var(Y)) not in universe
    assert store(X, 1) in universe
    assert load(R1, X) in universe
    assert FULL in universe
