"""服务模块，包含业务逻辑的实现""" 