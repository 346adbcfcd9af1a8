import os
import tempfile

# 报告目录在导入 app 之前指向临时目录
os.environ.setdefault("REPORTS_DIR", tempfile.mkdtemp(prefix="pseq-reports-"))

import pytest

from app.core.config import CORPUS_DIR
from app.core.lang import Assign, Const, Var, Variable
from app.core.memory_models import enumerate_universe
from app.utils.litmus_parser import parse_litmus

SB_SOURCE = """\
# store buffer
name SB
model tso
shared x y
local P0 r1
local P1 r2
init x=0 y=0
thread P0 { x := 1; r1 := y }
thread P1 { y := 1; r2 := x }
exists (P0:r1 = 0 && P1:r2 = 0)
expect allowed
"""

X = Variable.shared("x")
Y = Variable.shared("y")
R1 = Variable.local("P0", "r1")
R2 = Variable.local("P0", "r2")


def store(var: Variable, value: int) -> Assign:
    return Assign(var, Const(value))


def load(reg: Variable, var: Variable) -> Assign:
    return Assign(reg, Var(var))


@pytest.fixture
def corpus_dir() -> str:
    return CORPUS_DIR


@pytest.fixture
def sb_source() -> str:
    return SB_SOURCE


@pytest.fixture
def sb_test():
    return parse_litmus(SB_SOURCE, source="SB.litmus")


@pytest.fixture
def small_universe():
    """1 个共享变量、1 个寄存器、常量 {1}，不含 guard"""
    return enumerate_universe(shared=("x",), local_names=("r1",), constants=(1,), depth=0, guards=False)


@pytest.fixture
def litmus_file(tmp_path):
    """把 litmus 文本写入临时目录并返回路径"""

    def write(text: str, name: str = "t.litmus") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
