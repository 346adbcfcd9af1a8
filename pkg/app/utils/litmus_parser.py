"""litmus 文本格式的词法分析、语法分析与打印"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from app.core.errors import NestedAnnotation, ParseError, UndeclaredVariable
from app.core.lang import (
    TAU,
    TERMINATED,
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
    Iterate,
    MemoryModelId,
    Ordering,
    PSeq,
    Terminated,
    Unary,
    UnOp,
    Var,
    Variable,
    chain,
    format_expr,
    if_then_else,
    while_loop,
)
from app.models.litmus import LitmusTest, Quantifier, Verdict

# 各模型的原生屏障助记符
FENCE_MNEMONICS: Dict[MemoryModelId, Dict[FenceKind, str]] = {
    MemoryModelId.TSO: {FenceKind.FULL: "mfence"},
    MemoryModelId.ARM: {
        FenceKind.FULL: "dsb",
        FenceKind.STORE_STORE: "dsb.st",
        FenceKind.CONTROL: "isb",
    },
    MemoryModelId.RISCV: {
        FenceKind.FULL: "fence rw,rw",
        FenceKind.STORE_STORE: "fence w,w",
        FenceKind.LOAD_LOAD: "fence r,r",
        FenceKind.RW_W: "fence rw,w",
        FenceKind.R_RW: "fence r,rw",
    },
}

FENCE_ALIASES: Dict[str, FenceKind] = {
    "mfence": FenceKind.FULL,
    "dmb": FenceKind.FULL,
    "dsb": FenceKind.FULL,
    "dmb.st": FenceKind.STORE_STORE,
    "dsb.st": FenceKind.STORE_STORE,
    "isb": FenceKind.CONTROL,
}

RISCV_FENCE_SETS: Dict[Tuple[str, str], FenceKind] = {
    ("rw", "rw"): FenceKind.FULL,
    ("w", "w"): FenceKind.STORE_STORE,
    ("r", "r"): FenceKind.LOAD_LOAD,
    ("rw", "w"): FenceKind.RW_W,
    ("r", "rw"): FenceKind.R_RW,
}

# 这些指令的剩余部分是自由文本，不分词
FREE_TEXT_DIRECTIVES = frozenset({"name", "note"})

_COMPARE_OPS = {"=": BinOp.EQ, "==": BinOp.EQ, "!=": BinOp.NE, "<": BinOp.LT, "<=": BinOp.LE}

_TOKEN_RE = re.compile(
    r"""
    (?P<COMMENT>\#[^\n]*)
  | (?P<NEWLINE>\n)
  | (?P<SKIP>[ \t\r]+)
  | (?P<NUMBER>\d+)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<OP>:=|==|!=|<=|&&|\|\||[=<!+\-*(){};,:])
  | (?P<MISMATCH>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, source: Optional[str] = None) -> List[Token]:
    """括号内的换行会被忽略，顶层换行作为指令分隔符；name / note 行的剩余部分整体作为一个 TEXT"""
    tokens: List[Token] = []
    line, line_start, depth, pos = 1, 0, 0, 0
    line_empty = True
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        kind, value = match.lastgroup, match.group()
        col = match.start() - line_start + 1
        pos = match.end()
        if kind == "NEWLINE":
            if depth == 0:
                tokens.append(Token("NEWLINE", "\n", line, col))
                line_empty = True
            line += 1
            line_start = pos
            continue
        if kind in ("SKIP", "COMMENT"):
            continue
        if kind == "MISMATCH":
            raise ParseError(f"无法识别的字符 {value!r}", line, col, source)
        if kind == "IDENT" and depth == 0 and line_empty and value in FREE_TEXT_DIRECTIVES:
            tokens.append(Token(kind, value, line, col))
            end = text.find("\n", pos)
            end = len(text) if end < 0 else end
            tokens.append(Token("TEXT", text[pos:end].strip(), line, pos - line_start + 1))
            pos = end
            line_empty = False
            continue
        line_empty = False
        if value in ("(", "{"):
            depth += 1
        elif value in (")", "}"):
            depth = max(0, depth - 1)
        tokens.append(Token(kind, value, line, col))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1))
    return tokens


class LitmusParser:
    """递归下降解析器"""

    def __init__(self, text: str, source: Optional[str] = None):
        self.source = source
        self.tokens = tokenize(text, source)
        self.pos = 0

        self.name: Optional[str] = None
        self.model: Optional[MemoryModelId] = None
        self.shared: Dict[str, Variable] = {}
        self.locals: Dict[str, Dict[str, Variable]] = {}
        self.init: List[Tuple[Variable, int]] = []
        self.threads: List[Tuple[str, Command]] = []
        self.quantifier: Optional[Quantifier] = None
        self.condition: Optional[Expression] = None
        self.expect: Optional[Verdict] = None
        self.notes: List[str] = []

    # ---- 基础工具 ----

    def error(self, message: str, token: Optional[Token] = None, cls=ParseError) -> ParseError:
        token = token or self.peek()
        return cls(message, token.line, token.col, self.source)

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.peek()
        self.pos += 1
        return token

    def at(self, text: str) -> bool:
        token = self.peek()
        return token.kind in ("OP", "IDENT") and token.text == text

    def expect_text(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"期望 {text!r}，实际为 {self.peek().text or 'EOF'!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        token = self.peek()
        if token.kind != kind:
            raise self.error(f"期望{what}，实际为 {token.text or 'EOF'!r}")
        return self.advance()

    def end_of_directive(self) -> None:
        token = self.peek()
        if token.kind == "NEWLINE":
            self.advance()
        elif token.kind != "EOF":
            raise self.error(f"多余的内容 {token.text!r}")

    # ---- 顶层 ----

    def parse(self) -> LitmusTest:
        while self.peek().kind != "EOF":
            token = self.peek()
            if token.kind == "NEWLINE":
                self.advance()
                continue
            if token.kind != "IDENT":
                raise self.error(f"期望指令关键字，实际为 {token.text!r}")
            handler = self._directives().get(token.text)
            if handler is None:
                raise self.error(f"未知指令 {token.text!r}")
            self.advance()
            handler(token)
        return self._build()

    def _directives(self) -> Dict[str, Callable[[Token], None]]:
        return {
            "name": self._parse_name,
            "note": self._parse_note,
            "model": self._parse_model,
            "shared": self._parse_shared,
            "local": self._parse_local,
            "init": self._parse_init,
            "thread": self._parse_thread,
            "exists": self._parse_condition,
            "forbidden": self._parse_condition,
            "expect": self._parse_expect,
        }

    def _build(self) -> LitmusTest:
        eof = self.peek()
        for value, what in ((self.name, "name"), (self.model, "model"), (self.condition, "exists/forbidden"), (self.expect, "expect")):
            if value is None:
                raise self.error(f"缺少 {what} 指令", eof)
        if not self.threads:
            raise self.error("至少需要一个 thread", eof)
        return LitmusTest(
            name=self.name,
            model=self.model,
            shared=tuple(self.shared.values()),
            locals=tuple((t, tuple(vs.values())) for t, vs in self.locals.items()),
            init=tuple(self.init),
            thread_names=tuple(name for name, _ in self.threads),
            threads=tuple(cmd for _, cmd in self.threads),
            quantifier=self.quantifier,
            condition=self.condition,
            expect=self.expect,
            notes=tuple(self.notes),
        )

    # ---- 指令 ----

    def _parse_name(self, keyword: Token) -> None:
        # 名字取行内原文，去掉行尾注释
        name = self.expect_kind("TEXT", "测试名").text.split("#", 1)[0].strip()
        if not name:
            raise self.error("name 不能为空", keyword)
        self.name = name
        self.end_of_directive()

    def _parse_note(self, keyword: Token) -> None:
        self.notes.append(self.expect_kind("TEXT", "说明文字").text)
        self.end_of_directive()

    def _parse_model(self, keyword: Token) -> None:
        token = self.expect_kind("IDENT", "模型名")
        try:
            self.model = MemoryModelId(token.text.lower())
        except ValueError:
            raise self.error(f"未知模型 {token.text!r}", token)
        self.end_of_directive()

    def _parse_shared(self, keyword: Token) -> None:
        while self.peek().kind == "IDENT":
            name = self.advance().text
            self.shared[name] = Variable.shared(name)
        self.end_of_directive()

    def _parse_local(self, keyword: Token) -> None:
        thread = self.expect_kind("IDENT", "线程名").text
        scope = self.locals.setdefault(thread, {})
        while self.peek().kind == "IDENT":
            name = self.advance().text
            scope[name] = Variable.local(thread, name)
        self.end_of_directive()

    def _parse_init(self, keyword: Token) -> None:
        while self.peek().kind == "IDENT":
            var = self._global_ref()
            self.expect_text("=")
            self.init.append((var, self._signed_number()))
        self.end_of_directive()

    def _parse_thread(self, keyword: Token) -> None:
        if self.model is None:
            raise self.error("model 指令必须出现在 thread 之前", keyword)
        name_token = self.expect_kind("IDENT", "线程名")
        if any(name == name_token.text for name, _ in self.threads):
            raise self.error(f"线程 {name_token.text} 重复定义", name_token)
        body = self._block(name_token.text)
        self.threads.append((name_token.text, body))
        self.end_of_directive()

    def _parse_condition(self, keyword: Token) -> None:
        self.quantifier = Quantifier(keyword.text)
        self.expect_text("(")
        self.condition = self._expr(self._global_ref)
        self.expect_text(")")
        self.end_of_directive()

    def _parse_expect(self, keyword: Token) -> None:
        token = self.expect_kind("IDENT", "allowed 或 forbidden")
        try:
            self.expect = Verdict(token.text.lower())
        except ValueError:
            raise self.error(f"expect 只能是 allowed 或 forbidden: {token.text!r}", token)
        self.end_of_directive()

    # ---- 变量解析 ----

    def _signed_number(self) -> int:
        negative = False
        if self.at("-"):
            self.advance()
            negative = True
        value = int(self.expect_kind("NUMBER", "数字").text)
        return -value if negative else value

    def _qualified(self, thread_token: Token) -> Variable:
        self.expect_text(":")
        name_token = self.expect_kind("IDENT", "局部变量名")
        var = self.locals.get(thread_token.text, {}).get(name_token.text)
        if var is None:
            raise self.error(f"未声明的局部变量 {thread_token.text}:{name_token.text}", name_token, UndeclaredVariable)
        return var

    def _global_ref(self) -> Variable:
        token = self.expect_kind("IDENT", "变量名")
        if self.at(":"):
            return self._qualified(token)
        var = self.shared.get(token.text)
        if var is None:
            raise self.error(f"未声明的共享变量 {token.text}", token, UndeclaredVariable)
        return var

    def _thread_ref(self, thread: str) -> Callable[[], Variable]:
        def resolve() -> Variable:
            token = self.expect_kind("IDENT", "变量名")
            if self.at(":"):
                if token.text != thread:
                    raise self.error(f"线程 {thread} 不能访问 {token.text} 的局部变量", token, UndeclaredVariable)
                return self._qualified(token)
            var = self.locals.get(thread, {}).get(token.text) or self.shared.get(token.text)
            if var is None:
                raise self.error(f"未声明的变量 {token.text}", token, UndeclaredVariable)
            return var
        return resolve

    # ---- 表达式 ----

    def _expr(self, ref: Callable[[], Variable]) -> Expression:
        return self._or(ref)

    def _or(self, ref) -> Expression:
        left = self._and(ref)
        while self.at("||"):
            self.advance()
            left = Binary(BinOp.OR, left, self._and(ref))
        return left

    def _and(self, ref) -> Expression:
        left = self._compare(ref)
        while self.at("&&"):
            self.advance()
            left = Binary(BinOp.AND, left, self._compare(ref))
        return left

    def _compare(self, ref) -> Expression:
        left = self._additive(ref)
        while self.peek().kind == "OP" and self.peek().text in _COMPARE_OPS:
            op = _COMPARE_OPS[self.advance().text]
            left = Binary(op, left, self._additive(ref))
        return left

    def _additive(self, ref) -> Expression:
        left = self._multiplicative(ref)
        while self.at("+") or self.at("-"):
            op = BinOp.ADD if self.advance().text == "+" else BinOp.SUB
            left = Binary(op, left, self._multiplicative(ref))
        return left

    def _multiplicative(self, ref) -> Expression:
        left = self._unary(ref)
        while self.at("*"):
            self.advance()
            left = Binary(BinOp.MUL, left, self._unary(ref))
        return left

    def _unary(self, ref) -> Expression:
        if self.at("-"):
            self.advance()
            if self.peek().kind == "NUMBER":
                return Const(-int(self.advance().text))
            return Unary(UnOp.NEG, self._unary(ref))
        if self.at("!"):
            self.advance()
            return Unary(UnOp.NOT, self._unary(ref))
        return self._primary(ref)

    def _primary(self, ref) -> Expression:
        token = self.peek()
        if token.kind == "NUMBER":
            self.advance()
            return Const(int(token.text))
        if self.at("("):
            self.advance()
            inner = self._expr(ref)
            self.expect_text(")")
            return inner
        if token.kind == "IDENT":
            return Var(ref())
        raise self.error(f"期望表达式，实际为 {token.text or 'EOF'!r}")

    # ---- 语句 ----

    def _block(self, thread: str) -> Command:
        self.expect_text("{")
        parts: List[Command] = []
        while not self.at("}"):
            if self.peek().kind == "EOF":
                raise self.error("代码块没有闭合")
            ended_with_block = self.at("if") or self.at("while")
            parts.extend(self._statement(thread))
            if self.at(";"):
                self.advance()
            elif not self.at("}") and not ended_with_block:
                raise self.error(f"期望 ';'，实际为 {self.peek().text or 'EOF'!r}")
        self.expect_text("}")
        return chain(self.model, parts)

    def _statement(self, thread: str) -> List[Command]:
        token = self.peek()
        ref = self._thread_ref(thread)
        if token.kind != "IDENT":
            raise self.error(f"期望语句，实际为 {token.text!r}")
        word = token.text
        if word == "skip":
            self.advance()
            return [TERMINATED]
        if word == "fence":
            self.advance()
            return [Act(Fence(self._fence_spec()))]
        if word in FENCE_ALIASES:
            self.advance()
            return [Act(Fence(FENCE_ALIASES[word]))]
        if word == "fence.tso":
            self.advance()
            return [Act(Fence(FenceKind.R_RW)), Act(Fence(FenceKind.RW_W))]
        if word == "fence.i":
            self.advance()
            return [Act(TAU)]
        if word in ("rel", "acq"):
            self.advance()
            ordering = Ordering.RELEASE if word == "rel" else Ordering.ACQUIRE
            inner_token = self.peek()
            if inner_token.text in ("rel", "acq"):
                raise self.error("不允许嵌套注解", inner_token, NestedAnnotation)
            if inner_token.text.startswith("fence") or inner_token.text in FENCE_ALIASES:
                raise self.error("屏障不能带注解", inner_token)
            inner = self._simple_action(ref)
            return [Act(Annotated(ordering, inner))]
        if word == "if":
            self.advance()
            self.expect_text("(")
            cond = self._expr(ref)
            self.expect_text(")")
            then_branch = self._block(thread)
            else_branch: Command = TERMINATED
            if self.at("else"):
                self.advance()
                else_branch = self._block(thread)
            return [if_then_else(self.model, cond, then_branch, else_branch)]
        if word == "while":
            self.advance()
            self.expect_text("(")
            cond = self._expr(ref)
            self.expect_text(")")
            return [while_loop(self.model, cond, self._block(thread))]
        return [Act(self._simple_action(ref))]

    def _simple_action(self, ref: Callable[[], Variable]) -> Action:
        """赋值或 assume"""
        if self.at("assume"):
            self.advance()
            self.expect_text("(")
            cond = self._expr(ref)
            self.expect_text(")")
            return Guard(cond)
        lhs = ref()
        self.expect_text(":=")
        return Assign(lhs, self._expr(ref))

    def _fence_spec(self) -> FenceKind:
        token = self.expect_kind("IDENT", "屏障类型")
        if self.at(","):
            self.advance()
            second = self.expect_kind("IDENT", "屏障访问集合")
            kind = RISCV_FENCE_SETS.get((token.text, second.text))
            if kind is None:
                raise self.error(f"不支持的屏障 fence {token.text},{second.text}", token)
            return kind
        try:
            return FenceKind(token.text)
        except ValueError:
            raise self.error(f"未知屏障类型 {token.text!r}", token)


def parse_litmus(text: str, source: Optional[str] = None) -> LitmusTest:
    return LitmusParser(text, source).parse()


# ---------------------------------------------------------------------------
# 打印
# ---------------------------------------------------------------------------

def fence_mnemonic(kind: FenceKind, model: Optional[MemoryModelId] = None) -> str:
    native = FENCE_MNEMONICS.get(model, {}) if model else {}
    return native.get(kind, f"fence {kind.value}")


def describe_action(a: Action, model: Optional[MemoryModelId] = None) -> str:
    """带原生屏障助记符的指令文本"""
    if isinstance(a, Fence):
        return fence_mnemonic(a.kind, model)
    return str(a)


def _format_action(a: Action, model: MemoryModelId, native: bool) -> str:
    if isinstance(a, Annotated):
        return f"{a.ordering.value} {_format_action(a.inner, model, native)}"
    if isinstance(a, Assign):
        return f"{a.lhs.name} := {format_expr(a.rhs, qualify=False)}"
    if isinstance(a, Guard):
        return f"assume ({format_expr(a.cond, qualify=False)})"
    return fence_mnemonic(a.kind, model if native else None)


def _if_parts(c: Command) -> Optional[Tuple[Expression, Command, Command]]:
    if not isinstance(c, Choice):
        return None
    left, right = c.left, c.right
    if not (isinstance(left, PSeq) and isinstance(right, PSeq)):
        return None
    if not (isinstance(left.left, Act) and isinstance(right.left, Act)):
        return None
    g1, g2 = left.left.action, right.left.action
    if not (isinstance(g1, Guard) and isinstance(g2, Guard)):
        return None
    if g2.cond != Unary(UnOp.NOT, g1.cond):
        return None
    return g1.cond, left.right, right.right


def _while_parts(c: Command) -> Optional[Tuple[Expression, Command]]:
    if not (isinstance(c, PSeq) and isinstance(c.left, Iterate) and isinstance(c.right, Act)):
        return None
    body = c.left.body
    if not (isinstance(body, PSeq) and isinstance(body.left, Act) and isinstance(body.left.action, Guard)):
        return None
    cond = body.left.action.cond
    if c.right.action != Guard(Unary(UnOp.NOT, cond)):
        return None
    return cond, body.right


def _statements(c: Command, top: bool = True) -> List[Command]:
    if isinstance(c, Terminated):
        return [] if top else [c]
    if _while_parts(c) is not None:
        return [c]
    if isinstance(c, PSeq):
        return [c.left] + _statements(c.right, top=False)
    return [c]


def _format_block(c: Command, model: MemoryModelId, native: bool, indent: str) -> str:
    statements = _statements(c)
    if not statements:
        return "{ }"
    inner = indent + "  "
    lines = [inner + _format_statement(s, model, native, inner) for s in statements]
    return "{\n" + ";\n".join(lines) + "\n" + indent + "}"


def _format_statement(c: Command, model: MemoryModelId, native: bool, indent: str) -> str:
    if isinstance(c, Terminated):
        return "skip"
    if isinstance(c, Act):
        return _format_action(c.action, model, native)
    parts = _if_parts(c)
    if parts is not None:
        cond, then_branch, else_branch = parts
        text = f"if ({format_expr(cond, qualify=False)}) {_format_block(then_branch, model, native, indent)}"
        if not isinstance(else_branch, Terminated):
            text += f" else {_format_block(else_branch, model, native, indent)}"
        return text
    loop = _while_parts(c)
    if loop is not None:
        cond, body = loop
        return f"while ({format_expr(cond, qualify=False)}) {_format_block(body, model, native, indent)}"
    if isinstance(c, PSeq):
        # 非右结合的顺序组合，只能按块展开
        return "; ".join(_format_statement(s, model, native, indent) for s in (c.left, c.right))
    raise ValueError(f"无法以 litmus 语法打印的命令: {c}")


def format_litmus(test: LitmusTest, native: bool = False) -> str:
    """打印为 litmus 文本，parse_litmus(format_litmus(t)) == t"""
    lines = [f"name {test.name}"]
    lines.extend(f"note {note}" for note in test.notes)
    lines.append(f"model {test.model.value}")
    lines.append("shared " + " ".join(v.name for v in test.shared))
    for thread, names in test.locals:
        lines.append(" ".join(["local", thread] + [v.name for v in names]))
    if test.init:
        lines.append("init " + " ".join(f"{v}={value}" for v, value in test.init))
    for name, body in zip(test.thread_names, test.threads):
        lines.append(f"thread {name} {_format_block(body, test.model, native, '')}")
    lines.append(f"{test.quantifier.value} ({format_expr(test.condition)})")
    lines.append(f"expect {test.expect.value}")
    return "\n".join(lines) + "\n"
