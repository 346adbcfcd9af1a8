from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.stream_router import router as stream_router
from app.core.config import APP_HOST, APP_PORT, DEBUG
from app.core.init import configure_logging, create_storage_directories

configure_logging()

# 创建存储目录
create_storage_directories()

# 创建FastAPI应用
app = FastAPI(
    title="弱内存模型检查器 API",
    description="基于并行化顺序组合的 litmus 测试运行、定律检查与模型层级检查服务",
    version="1.0.0",
)

# 添加CORS中间件
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # 本地工具，允许所有源
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["Content-Type", "Accept", "Origin"],
    max_age=600,
)

# 挂载API路由
app.include_router(stream_router, prefix="/api")


def serve(host: str = APP_HOST, port: int = APP_PORT, reload: bool = DEBUG) -> None:
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port, reload=reload)


# 直接运行时的入口点
if __name__ == "__main__":
    serve()
