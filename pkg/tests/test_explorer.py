import pytest

from app.core.errors import IncompatibleBackend, NonTerminatingExploration, OwnershipViolation, UnsupportedInstruction
from app.core.explorer import (
    Backend,
    Domain,
    State,
    all_states,
    apply_action,
    as_domain,
    declared_variables,
    eff_command,
    eff_trace,
    explore,
    hoare_check,
    initial_states,
    run_exploration,
    wp,
)
from app.core.lang import (
    Act,
    Annotated,
    Assign,
    Binary,
    BinOp,
    Const,
    Fence,
    FenceKind,
    Guard,
    MemoryModelId,
    Ordering,
    Var,
    Variable,
    chain,
    par,
    seq,
    while_loop,
)
from tests.conftest import R1, X, Y, load, store

P1_R2 = Variable.local("P1", "r2")


def sb_threads(fenced: bool = False):
    middle = [Fence(FenceKind.FULL)] if fenced else []
    return [
        chain(MemoryModelId.SC, [store(X, 1)] + middle + [load(R1, Y)]),
        chain(MemoryModelId.SC, [store(Y, 1)] + middle + [load(P1_R2, X)]),
    ]


def has_both_zero(finals) -> bool:
    return any(s[R1] == 0 and s[P1_R2] == 0 for s in finals)


def test_state_is_immutable_mapping() -> None:
    s = State({X: 0, Y: 1})
    t = s.set(X, 1)
    assert s[X] == 0 and t[X] == 1
    assert State({Y: 1, X: 0}) == s
    assert hash(State({Y: 1, X: 0})) == hash(s)
    assert s.project([Y]) == State({Y: 1})
    assert s.as_dict() == {"x": 0, "y": 1}


def test_as_domain() -> None:
    assert as_domain(3) == Domain(3)
    assert as_domain([0, 1, 2]) == Domain(3)
    assert as_domain(Domain(2)).modulus == 2
    with pytest.raises(ValueError):
        as_domain([1, 2])


def test_all_states_and_initial_states() -> None:
    assert len(list(all_states([X, Y], Domain(2)))) == 4
    assert initial_states({X: 1}, [X, Y]) == [State({X: 1, Y: 0})]
    assert initial_states(None, [X]) == [State({X: 0})]
    only_x_one = Binary(BinOp.EQ, Var(X), Const(1))
    assert initial_states(only_x_one, [X, Y], Domain(2)) == [State({X: 1, Y: 0}), State({X: 1, Y: 1})]


def test_apply_action() -> None:
    s = State({X: 0, R1: 0})
    assert apply_action(store(X, 1), s) == State({X: 1, R1: 0})
    assert apply_action(Guard(Var(X)), s) is None
    assert apply_action(Fence(FenceKind.FULL), s) == s
    assert apply_action(Annotated(Ordering.RELEASE, store(X, 1)), s) == State({X: 1, R1: 0})
    assert apply_action(Assign(X, Binary(BinOp.ADD, Var(X), Const(3))), s, modulus=2) == State({X: 1, R1: 0})


def test_declared_variables_are_sorted() -> None:
    assert declared_variables(sb_threads()) == (X, Y, R1, P1_R2)


def test_store_buffering_outcomes() -> None:
    assert not has_both_zero(explore(sb_threads(), MemoryModelId.SC))
    assert has_both_zero(explore(sb_threads(), MemoryModelId.TSO))
    assert not has_both_zero(explore(sb_threads(fenced=True), MemoryModelId.TSO))


@pytest.mark.parametrize("backend", list(Backend))
def test_tso_backends_agree_on_sb(backend) -> None:
    expected = explore(sb_threads(), MemoryModelId.TSO)
    assert explore(sb_threads(), MemoryModelId.TSO, backend) == expected


def test_model_none_keeps_thread_parameters() -> None:
    threads = [chain(MemoryModelId.TSO, [store(X, 1), load(R1, Y)]), chain(MemoryModelId.SC, [store(Y, 1), load(P1_R2, X)])]
    assert has_both_zero(explore(threads))
    assert not has_both_zero(explore(threads, MemoryModelId.SC))


def test_parallel_term_is_split_into_threads() -> None:
    t0, t1 = sb_threads()
    assert explore([par(t0, t1)], MemoryModelId.TSO) == explore([t0, t1], MemoryModelId.TSO)


def test_backend_compatibility() -> None:
    with pytest.raises(IncompatibleBackend):
        explore(sb_threads(), MemoryModelId.SC, Backend.STOREBUFFER)
    with pytest.raises(IncompatibleBackend):
        explore(sb_threads(), None, Backend.PIPELINE)
    with pytest.raises(IncompatibleBackend):
        explore(sb_threads(), MemoryModelId.PAR, Backend.PIPELINE)
    annotated = [Act(Annotated(Ordering.RELEASE, store(X, 1)))]
    with pytest.raises(UnsupportedInstruction):
        explore(annotated, MemoryModelId.TSO, Backend.STOREBUFFER)


def test_ownership_violation() -> None:
    with pytest.raises(OwnershipViolation):
        explore([Act(Assign(R1, Const(1))), Act(Assign(R1, Const(2)))], MemoryModelId.SC)


def test_cap_is_enforced() -> None:
    with pytest.raises(NonTerminatingExploration) as info:
        explore(sb_threads(), MemoryModelId.TSO, cap=3)
    assert info.value.cap == 3


def test_visited_count_is_reported() -> None:
    starts = initial_states(None, declared_variables(sb_threads()))
    result = run_exploration(sb_threads(), MemoryModelId.SC, Backend.PSEQ, starts)
    assert result.visited > len(result.final_states) > 0


def test_modular_arithmetic_with_domain() -> None:
    incr = [Act(Assign(X, Binary(BinOp.ADD, Var(X), Const(1))))]
    assert explore(incr, MemoryModelId.SC, init={X: 1}) == {State({X: 2})}
    assert explore(incr, MemoryModelId.SC, init={X: 1}, domain=2) == {State({X: 0})}


def test_unroll_bound_limits_loops() -> None:
    # while (x < 5) { x := x + 1 } 在展开上限 2 下无法终止到 x = 5
    loop = while_loop(
        MemoryModelId.SC,
        Binary(BinOp.LT, Var(X), Const(5)),
        Assign(X, Binary(BinOp.ADD, Var(X), Const(1))),
    )
    assert explore([loop], MemoryModelId.SC, unroll_bound=2) == frozenset()
    assert explore([loop], MemoryModelId.SC, unroll_bound=5) == {State({X: 5})}


def test_eff_of_trace_and_command() -> None:
    rel = eff_trace([store(X, 1), Assign(Y, Var(X))], 2, [X, Y])
    assert {t for _, t in rel} == {State({X: 1, Y: 1})}
    assert len(rel) == 4
    assert eff_command(seq(store(X, 1), Assign(Y, Var(X))), 2, variables=[X, Y]) == rel


def test_wp_and_hoare() -> None:
    x_is_one = Binary(BinOp.EQ, Var(X), Const(1))
    assert wp(Act(store(X, 1)), x_is_one, 2) == frozenset(all_states([X], Domain(2)))
    assert wp(Act(Guard(x_is_one)), Const(0), 2) == {State({X: 0})}
    assert hoare_check(Const(1), Act(store(X, 1)), x_is_one, 2)
    assert not hoare_check(Const(1), Act(store(X, 0)), x_is_one, 2)
