"""检查器异常定义"""
from typing import Optional


class CheckerError(Exception):
    """所有检查器错误的基类"""


class UnsupportedMixedAccess(CheckerError):
    """同一条指令既读又写共享变量（ARM / RISC-V 模型无法分类）"""

    def __init__(self, action: object):
        self.action = action
        super().__init__(f"指令同时读写共享变量，无法判定为 load 或 store: {action}")


class UnsupportedInstruction(CheckerError):
    """后端不支持的指令（例如存储缓冲后端中的注解或非 full 屏障）"""


class IncompatibleBackend(CheckerError):
    """后端与内存模型不匹配"""


class OwnershipViolation(CheckerError):
    """线程写入了不属于自己的局部变量"""


class NonTerminatingExploration(CheckerError):
    """配置数量超过上限"""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"探索的配置数量超过上限 {cap}")


class LitmusError(CheckerError):
    """litmus 文件相关错误"""


class ParseError(LitmusError):
    """带行列号的解析错误"""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: Optional[str] = None):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {message}")


class UndeclaredVariable(ParseError):
    """使用了未声明的变量"""


class NestedAnnotation(ParseError):
    """rel/acq 注解嵌套"""
