from fastapi import APIRouter

from app.api.models import CorpusStreamRequest, RunLitmusRequest
from app.services.litmus_service import (
    get_report_service,
    run_check_service,
    run_litmus_service,
    stream_corpus_service,
)

# 创建路由
router = APIRouter()

# 运行单个测试
@router.post("/run")
async def run_litmus(request: RunLitmusRequest):
    """解析并运行一个 litmus 测试，返回报告"""
    return await run_litmus_service(request)

# 流式运行语料
@router.post("/stream/corpus")
async def stream_corpus(request: CorpusStreamRequest):
    """流式运行语料目录（SSE）"""
    return await stream_corpus_service(request)

# 查询保存的报告
@router.get("/reports/{run_id}")
async def get_report(run_id: str):
    """读取一次语料运行保存的报告"""
    return await get_report_service(run_id)

# 模型检查
@router.get("/checks/{kind}")
async def run_check(kind: str):
    """运行 hierarchy 或 wellbehaved 检查"""
    return await run_check_service(kind)
