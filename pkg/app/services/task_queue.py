import asyncio
import json
import logging
from typing import Any, Awaitable, Callable, List, Optional, Sequence, TypeVar

from app.core.config import JOBS

logger = logging.getLogger(__name__)

T = TypeVar("T")

# 全局正在运行的语料任务 {run_id: 状态}
active_runs = {}


def format_sse_event(event_type: str, data: Any) -> str:
    """格式化SSE事件"""
    json_data = json.dumps(data, ensure_ascii=False)
    return f"event: {event_type}\ndata: {json_data}\n\n"


async def run_jobs(
    jobs: Sequence[Callable[[], T]],
    workers: int = JOBS,
    on_result: Optional[Callable[[int, T], Awaitable[None]]] = None,
) -> List[T]:
    """用 N 个工作协程并发执行同步任务，结果按提交顺序返回

    每个任务在线程中执行（asyncio.to_thread），不会阻塞事件循环。
    """
    if not jobs:
        return []
    workers = max(1, min(workers, len(jobs)))
    queue: asyncio.Queue = asyncio.Queue()
    for index, job in enumerate(jobs):
        queue.put_nowait((index, job))

    results: List[Optional[T]] = [None] * len(jobs)

    async def worker_process(worker_id: int) -> None:
        """工作协程处理函数，负责处理队列中的任务"""
        while True:
            try:
                index, job = queue.get_nowait()
            except asyncio.QueueEmpty:
                return
            try:
                logger.debug(f"工作协程 #{worker_id + 1} 开始处理任务 {index}")
                results[index] = await asyncio.to_thread(job)
                if on_result is not None:
                    await on_result(index, results[index])
            finally:
                queue.task_done()

    # 创建多个工作协程，实现并发处理
    tasks = [asyncio.create_task(worker_process(i)) for i in range(workers)]
    try:
        await asyncio.gather(*tasks)
    except BaseException:
        for task in tasks:
            task.cancel()
        raise
    return results
