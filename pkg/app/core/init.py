import logging
import os
from typing import Optional

from app.core.config import LOG_LEVEL, REPORTS_DIR


def configure_logging(level: Optional[str] = None, force: bool = False) -> None:
    """安装一个输出到 stderr 的日志处理器；已配置过时只有 force 才会替换"""
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=force,
    )


def create_storage_directories():
    """创建应用所需的存储目录"""
    os.makedirs(REPORTS_DIR, exist_ok=True)  # 语料运行报告
    logging.getLogger(__name__).info("已创建存储目录")
