import asyncio
import logging
from typing import Optional

from fastapi import status
from fastapi.responses import JSONResponse, StreamingResponse

from app.api.models import CorpusStreamRequest, RunLitmusRequest
from app.core.config import CORPUS_ROOT
from app.core.errors import LitmusError
from app.core.explorer import Backend
from app.core.lang import MemoryModelId
from app.models.schema import Report
from app.services.litmus_runner import RunOptions, run_corpus_async, run_test
from app.services.model_checks import check_hierarchy, check_well_behaved
from app.services.task_queue import active_runs, format_sse_event
from app.utils.litmus_parser import parse_litmus
from app.utils.storage import load_report_bundle, new_run_id, resolve_under_root, save_report_bundle

logger = logging.getLogger(__name__)

CHECKS = {
    "hierarchy": check_hierarchy,
    "wellbehaved": check_well_behaved,
}


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=status.HTTP_400_BAD_REQUEST, content={"detail": message})


def _parse_model(value: Optional[str]) -> Optional[MemoryModelId]:
    return MemoryModelId(value.lower()) if value else None


async def run_litmus_service(request: RunLitmusRequest) -> JSONResponse:
    """解析并运行单个 litmus 测试"""
    try:
        test = parse_litmus(request.source, source="request")
    except LitmusError as e:
        return _bad_request(str(e))
    try:
        backend = Backend(request.backend.lower())
        model = _parse_model(request.model)
    except ValueError as e:
        return _bad_request(f"参数错误: {e}")

    options = RunOptions(model=model, unroll_bound=request.unroll)
    report = await asyncio.to_thread(run_test, test, backend, options)
    code = status.HTTP_422_UNPROCESSABLE_ENTITY if report.error else status.HTTP_200_OK
    return JSONResponse(status_code=code, content=report.model_dump(mode="json"))


async def stream_corpus_service(request: CorpusStreamRequest) -> StreamingResponse:
    """流式运行整个语料目录，每个测试完成后推送一个 report 事件"""
    try:
        backend = None if request.backend.lower() == "all" else Backend(request.backend.lower())
        model = _parse_model(request.model)
    except ValueError as e:
        return _bad_request(f"参数错误: {e}")

    path = resolve_under_root(request.path, CORPUS_ROOT)
    if path is None:
        logger.warning(f"拒绝语料目录 {request.path}：不在 {CORPUS_ROOT} 之下")
        return JSONResponse(
            status_code=status.HTTP_403_FORBIDDEN,
            content={"detail": f"语料目录必须位于 {CORPUS_ROOT} 之下"},
        )

    run_id = new_run_id()
    options = RunOptions(model=model)

    async def event_generator():
        events: asyncio.Queue = asyncio.Queue()
        active_runs[run_id] = {"status": "RUNNING", "path": path}

        async def on_report(report: Report) -> None:
            await events.put(format_sse_event("report", report.model_dump(mode="json")))

        async def produce() -> None:
            try:
                summary = await run_corpus_async(path, backend, options, request.jobs, on_report)
                bundle = summary.model_dump(mode="json")
                await save_report_bundle(run_id, bundle)
                active_runs[run_id]["status"] = "COMPLETED"
                await events.put(format_sse_event("summary", {"run_id": run_id, **bundle}))
            except Exception as e:
                logger.error(f"语料运行 {run_id} 失败: {e}")
                active_runs[run_id]["status"] = "FAILED"
                await events.put(format_sse_event("error", {"run_id": run_id, "message": str(e)}))
            finally:
                await events.put(None)

        # 发送开始事件
        yield format_sse_event("status", {"run_id": run_id, "message": f"正在运行语料 {path}"})
        producer = asyncio.create_task(produce())
        try:
            while True:
                event = await events.get()
                if event is None:
                    break
                yield event
        finally:
            if not producer.done():
                producer.cancel()
            active_runs.pop(run_id, None)

    # 返回流式响应
    return StreamingResponse(
        event_generator(),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "Connection": "keep-alive",
            "X-Accel-Buffering": "no",  # 禁用Nginx缓冲
        },
    )


async def get_report_service(run_id: str) -> JSONResponse:
    bundle = await load_report_bundle(run_id)
    if bundle is None:
        return JSONResponse(
            status_code=status.HTTP_404_NOT_FOUND,
            content={"detail": f"未找到运行 {run_id} 的报告"},
        )
    return JSONResponse(content=bundle)


async def run_check_service(kind: str) -> JSONResponse:
    """在默认全集上运行层级或 well-behaved 检查"""
    check = CHECKS.get(kind)
    if check is None:
        return JSONResponse(
            status_code=status.HTTP_404_NOT_FOUND,
            content={"detail": f"未知检查类型 {kind}，可选: {', '.join(CHECKS)}"},
        )
    summary = await asyncio.to_thread(check)
    return JSONResponse(content={**summary.model_dump(mode="json"), "holds": summary.holds})
