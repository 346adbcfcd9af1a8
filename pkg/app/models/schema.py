from pydantic import BaseModel, Field
from typing import Dict, List, Optional


# 单个 litmus 测试的运行报告；字段顺序即 JSON 输出顺序
class Report(BaseModel):
    """litmus 测试运行报告"""
    name: str = Field(..., description="测试名称")
    model: str = Field(..., description="内存模型")
    backend: str = Field(..., description="探索后端")
    verdict: Optional[str] = Field(None, description="判定结果 allowed / forbidden，出错时为空")
    expect: str = Field(..., description="期望结果")
    match: bool = Field(..., description="判定结果是否与期望一致")
    witness: Optional[Dict[str, int]] = Field(None, description="满足 exists 条件的最小最终状态")
    states: int = Field(0, description="访问过的配置数量")
    millis: float = Field(0.0, description="运行耗时（毫秒）")
    error: Optional[str] = Field(None, description="错误信息")


class CorpusSummary(BaseModel):
    """测试集运行汇总"""
    total: int = Field(..., description="测试总数")
    passed: int = Field(..., description="判定与期望一致的数量")
    failed: int = Field(..., description="不一致的数量")
    errors: List[str] = Field(default_factory=list, description="解析失败的文件及原因")
    cap_exceeded: bool = Field(False, description="是否有测试超过探索上限")
    exit_code: int = Field(0, description="命令行退出码")
    reports: List[Report] = Field(default_factory=list, description="按测试名排序的报告")


class LawCheckResult(BaseModel):
    """一条定律或等价性的检查结果"""
    law: str = Field(..., description="定律名称")
    model: Optional[str] = Field(None, description="内存模型，与模型无关时为空")
    checked: int = Field(..., description="检查过的实例数量")
    violations: int = Field(..., description="反例数量")
    counterexamples: List[str] = Field(default_factory=list, description="前几个反例")

    @property
    def holds(self) -> bool:
        return self.violations == 0


class CheckSummary(BaseModel):
    """一组检查的汇总"""
    kind: str = Field(..., description="检查类型：laws / hierarchy / wellbehaved")
    results: List[LawCheckResult] = Field(default_factory=list, description="各项结果")
    seed: Optional[int] = Field(None, description="随机采样种子")

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.results)
