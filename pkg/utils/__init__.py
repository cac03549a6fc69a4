"""
辅助工具模块包
"""

__version__ = "0.1.0"
