import os
from dotenv import load_dotenv

# 加载环境变量
load_dotenv()

# 基础目录
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# 应用设置
APP_HOST = os.getenv("APP_HOST", "127.0.0.1")
APP_PORT = int(os.getenv("APP_PORT", "8000"))
DEBUG = os.getenv("DEBUG", "false").lower() == "true"
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# 探索设置
UNROLL_BOUND = int(os.getenv("PSEQ_UNROLL_BOUND", "2"))  # 循环展开上限
STATE_CAP = int(os.getenv("PSEQ_STATE_CAP", "1000000"))  # 单次探索的配置数上限
DOMAIN_SIZE = int(os.getenv("PSEQ_DOMAIN_SIZE", "2"))  # wp / Eff 的取值域 {0..V-1}
JOBS = int(os.getenv("PSEQ_JOBS", "1"))  # 并发运行的测试数

# 随机抽样
SEED = int(os.getenv("PSEQ_SEED", "0"))
SAMPLES = int(os.getenv("PSEQ_SAMPLES", "200"))

# 路径设置
CORPUS_DIR = os.getenv("PSEQ_CORPUS_DIR", os.path.join(BASE_DIR, "app/corpus"))
# HTTP 接口只能运行这个目录之下的语料
CORPUS_ROOT = os.getenv("PSEQ_CORPUS_ROOT", CORPUS_DIR)
STORAGE_DIR = os.path.join(BASE_DIR, "app/storage")
REPORTS_DIR = os.getenv("REPORTS_DIR", os.path.join(STORAGE_DIR, "reports"))
