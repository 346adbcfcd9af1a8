"""API模块，包含所有API路由定义"""

# API模块初始化文件 