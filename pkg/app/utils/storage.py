import json
import logging
import os
import uuid
from datetime import datetime
from typing import Any, Dict, Optional

import aiofiles

from app.core.config import REPORTS_DIR

logger = logging.getLogger(__name__)


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def resolve_under_root(path: Optional[str], root: str) -> Optional[str]:
    """相对路径按 root 解析；结果不在 root 之下时返回 None"""
    root = os.path.realpath(root)
    target = os.path.realpath(os.path.join(root, path)) if path else root
    return target if os.path.commonpath([root, target]) == root else None


def report_path(run_id: str, reports_dir: str = REPORTS_DIR) -> str:
    return os.path.join(reports_dir, f"{run_id}.json")


async def save_report_bundle(run_id: str, bundle: Dict[str, Any], reports_dir: str = REPORTS_DIR) -> str:
    """把一次语料运行的汇总保存为 JSON 文件"""
    os.makedirs(reports_dir, exist_ok=True)
    path = report_path(run_id, reports_dir)
    payload = {"run_id": run_id, "saved_at": datetime.now().isoformat(), **bundle}
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(json.dumps(payload, ensure_ascii=False, indent=2))
    logger.info(f"已保存运行报告: {path}")
    return path


async def load_report_bundle(run_id: str, reports_dir: str = REPORTS_DIR) -> Optional[Dict[str, Any]]:
    """读取保存的报告；不存在时返回 None"""
    # run_id 只允许十六进制字符，避免路径穿越
    if not run_id or any(c not in "0123456789abcdef" for c in run_id):
        return None
    path = report_path(run_id, reports_dir)
    if not os.path.exists(path):
        return None
    async with aiofiles.open(path, "r", encoding="utf-8") as f:
        return json.loads(await f.read())
