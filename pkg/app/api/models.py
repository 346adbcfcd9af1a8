from pydantic import BaseModel, Field
from typing import Optional

from app.core.config import UNROLL_BOUND


class RunLitmusRequest(BaseModel):
    """运行单个 litmus 测试的请求"""
    source: str = Field(..., description="litmus 源文本")
    backend: str = Field("pseq", description="探索后端：pseq / pipeline / storebuffer")
    model: Optional[str] = Field(None, description="覆盖测试声明的内存模型")
    unroll: int = Field(UNROLL_BOUND, ge=0, description="循环展开上限")


class CorpusStreamRequest(BaseModel):
    """流式运行语料目录的请求"""
    path: Optional[str] = Field(None, description="语料目录，相对于语料根目录；不指定则使用语料根目录")
    backend: str = Field("pseq", description="探索后端，all 表示所有合法后端")
    model: Optional[str] = Field(None, description="覆盖每个测试声明的内存模型")
    jobs: int = Field(1, ge=1, description="并发运行的测试数")
