"""
计算模块包
包含级数内核、形式正规形、扇形几何、Fatou 坐标、扰动 Koenigs 图、
平面向量场单值映射以及命令行子命令的实现
"""

__version__ = "0.1.0"
__author__ = "stokes-limits"
