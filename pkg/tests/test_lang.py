import pytest

from app.core.errors import UnsupportedMixedAccess
from app.core.lang import (
    TAU,
    TERMINATED,
    AccessKind,
    Act,
    ActionClass,
    Annotated,
    Assign,
    Binary,
    BinOp,
    Choice,
    Const,
    Fence,
    FenceKind,
    Guard,
    Iterate,
    MemoryModelId,
    Ordering,
    PSeq,
    Unary,
    UnOp,
    Var,
    Variable,
    chain,
    classify_kind,
    classify_visibility,
    command_vars,
    eval_expr,
    finite_iter,
    format_expr,
    if_then_else,
    subst,
    var_analysis,
    while_loop,
)
from tests.conftest import R1, X, Y, load, store


def test_local_variable_needs_owner() -> None:
    with pytest.raises(ValueError):
        Variable("r1", owner="P0")
    assert str(Variable.local("P0", "r1")) == "P0:r1"
    assert Variable.shared("x").is_shared


def test_eval_expr_modulus() -> None:
    two = Binary(BinOp.ADD, Const(1), Const(1))
    assert eval_expr(two, {}) == 2
    assert eval_expr(two, {}, modulus=2) == 0
    assert eval_expr(Unary(UnOp.NEG, Const(1)), {}, modulus=3) == 2
    assert eval_expr(Unary(UnOp.NOT, Var(X)), {X: 0}) == 1
    assert eval_expr(Binary(BinOp.LE, Var(X), Var(Y)), {X: 1, Y: 1}) == 1


def test_subst_and_format() -> None:
    e = Binary(BinOp.ADD, Var(X), Binary(BinOp.MUL, Var(X), Const(2)))
    assert subst(e, X, Const(3)) == Binary(BinOp.ADD, Const(3), Binary(BinOp.MUL, Const(3), Const(2)))
    assert format_expr(e) == "x + (x * 2)"
    assert format_expr(Var(R1)) == "P0:r1"
    assert format_expr(Var(R1), qualify=False) == "r1"


def test_var_analysis_of_load() -> None:
    vs = var_analysis(load(R1, X))
    assert vs.rv == frozenset({X})
    assert vs.wv == frozenset({R1})
    assert vs.rsv == frozenset({X})
    assert vs.wsv == frozenset()


def test_classify_kind() -> None:
    assert classify_kind(store(X, 1)) is AccessKind.STORE
    assert classify_kind(load(R1, X)) is AccessKind.LOAD
    assert classify_kind(Assign(R1, Const(1))) is AccessKind.REG_OP
    assert classify_kind(Guard(Var(R1))) is AccessKind.REG_OP
    assert classify_kind(Guard(Var(X))) is AccessKind.LOAD
    assert classify_kind(TAU) is AccessKind.GUARD
    assert classify_kind(Fence(FenceKind.FULL)) is AccessKind.FENCE
    assert classify_kind(Annotated(Ordering.RELEASE, store(X, 1))) is AccessKind.STORE
    with pytest.raises(UnsupportedMixedAccess):
        classify_kind(Assign(X, Var(Y)))


def test_classify_visibility() -> None:
    assert classify_visibility(TAU) is ActionClass.SILENT
    assert classify_visibility(Guard(Const(0))) is ActionClass.INFEASIBLE
    assert classify_visibility(Guard(Var(R1))) is ActionClass.VISIBLE
    assert classify_visibility(Fence(FenceKind.FULL)) is ActionClass.VISIBLE


def test_annotation_only_on_assign_or_guard() -> None:
    with pytest.raises(ValueError):
        Annotated(Ordering.ACQUIRE, Fence(FenceKind.FULL))


def test_chain_is_right_associative() -> None:
    a, b, c = store(X, 1), store(Y, 1), load(R1, X)
    assert chain(MemoryModelId.TSO, []) == TERMINATED
    assert chain(MemoryModelId.TSO, [a]) == Act(a)
    assert chain(MemoryModelId.TSO, [a, b, c]) == PSeq(
        MemoryModelId.TSO, Act(a), PSeq(MemoryModelId.TSO, Act(b), Act(c))
    )


def test_derived_commands() -> None:
    b = Binary(BinOp.EQ, Var(R1), Const(1))
    ite = if_then_else(MemoryModelId.SC, b, store(X, 1))
    assert isinstance(ite, Choice)
    assert ite.left.left == Act(Guard(b))
    assert ite.right.left == Act(Guard(Unary(UnOp.NOT, b)))
    assert ite.right.right == TERMINATED

    loop = while_loop(MemoryModelId.ARM, b, store(X, 1))
    assert isinstance(loop.left, Iterate)
    assert loop.right == Act(Guard(Unary(UnOp.NOT, b)))


def test_finite_iter() -> None:
    body = Act(store(X, 1))
    assert finite_iter(MemoryModelId.SC, body, 0) == TERMINATED
    assert finite_iter(MemoryModelId.SC, body, 2) == PSeq(
        MemoryModelId.SC, body, PSeq(MemoryModelId.SC, body, TERMINATED)
    )
    with pytest.raises(ValueError):
        finite_iter(MemoryModelId.SC, body, -1)


def test_command_vars() -> None:
    c = chain(MemoryModelId.SC, [store(X, 1), load(R1, Y)])
    assert command_vars(c) == frozenset({X, Y, R1})
