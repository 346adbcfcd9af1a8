# core模块初始化文件 