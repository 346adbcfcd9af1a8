# utils模块初始化文件 