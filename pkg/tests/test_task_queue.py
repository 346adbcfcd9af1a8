import asyncio
import json
import time

import pytest

from app.services.task_queue import format_sse_event, run_jobs


def test_format_sse_event() -> None:
    event = format_sse_event("report", {"name": "SB", "match": True})
    assert event.startswith("event: report\ndata: ")
    assert event.endswith("\n\n")
    assert json.loads(event.split("data: ", 1)[1]) == {"name": "SB", "match": True}


def test_results_keep_submission_order() -> None:
    def job(i: int):
        def run() -> int:
            time.sleep(0.01 * (5 - i))
            return i * i

        return run

    finished = []

    async def on_result(index: int, value: int) -> None:
        finished.append(index)

    results = asyncio.run(run_jobs([job(i) for i in range(5)], workers=3, on_result=on_result))
    assert results == [0, 1, 4, 9, 16]
    assert sorted(finished) == [0, 1, 2, 3, 4]


def test_no_jobs() -> None:
    assert asyncio.run(run_jobs([], workers=4)) == []


def test_job_failure_propagates() -> None:
    def boom() -> int:
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        asyncio.run(run_jobs([lambda: 1, boom], workers=2))
