"""
性能与并发工具模块

提供计算阶段的性能监控、阶段记录（残差、迭代次数、精度模式）、
内存管理以及按 ε 行并行的批量处理器。
"""

import asyncio
import gc
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from contextlib import contextmanager
from functools import wraps
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import psutil

from config import MAX_CONCURRENT_TASKS, THREADS_ENV_VAR

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """性能监控器"""

    def __init__(self):
        self._lock = threading.Lock()
        self.metrics = {
            "total_operations": 0,
            "total_processing_time": 0.0,
            "memory_usage": [],
            "errors": 0,
        }
        self.stages: List[Dict[str, Any]] = []

    def record_operation(self, operation_name: str, processing_time: float,
                         memory_used: float, error: bool = False):
        """记录操作指标"""
        with self._lock:
            self.metrics["total_operations"] += 1
            self.metrics["total_processing_time"] += processing_time
            self.metrics["memory_usage"].append(memory_used)
            if error:
                self.metrics["errors"] += 1
        logger.debug("%s 用时 %.3fs，内存变化 %.1fMB", operation_name, processing_time, memory_used)

    def record_stage(self, name: str, residual: Optional[float] = None,
                     iterations: Optional[int] = None, precision: Optional[str] = None,
                     **extra: Any):
        """记录计算阶段；写入清单，不含耗时"""
        entry = {"stage": name, "residual": residual, "iterations": iterations,
                 "precision": precision}
        entry.update(extra)
        with self._lock:
            self.stages.append(entry)

    def stage_records(self) -> List[Dict[str, Any]]:
        with self._lock:
            return [dict(s) for s in self.stages]

    def precision_modes(self) -> List[str]:
        return sorted({s["precision"] for s in self.stage_records() if s.get("precision")})


class ResourceManager:
    """资源管理器"""

    def get_memory_usage(self) -> Dict[str, float]:
        """获取内存使用情况"""
        process = psutil.Process()
        memory_info = process.memory_info()
        return {
            "rss_mb": memory_info.rss / (1024 * 1024),
            "vms_mb": memory_info.vms / (1024 * 1024),
            "percent": process.memory_percent(),
        }

    def cleanup_memory(self):
        """清理内存"""
        gc.collect()


# 全局实例
performance_monitor = PerformanceMonitor()
resource_manager = ResourceManager()


@contextmanager
def _tracked(operation_name: str) -> Iterator[None]:
    start_time = time.perf_counter()
    start_memory = resource_manager.get_memory_usage()["rss_mb"]
    error = False
    try:
        yield
    except Exception:
        error = True
        raise
    finally:
        performance_monitor.record_operation(
            operation_name, time.perf_counter() - start_time,
            resource_manager.get_memory_usage()["rss_mb"] - start_memory, error,
        )


def performance_tracking(operation_name: str):
    """性能跟踪装饰器，同时支持同步与异步函数；耗时只进日志与统计"""
    def decorator(func: Callable):
        if asyncio.iscoroutinefunction(func):
            @wraps(func)
            async def async_wrapper(*args, **kwargs):
                with _tracked(operation_name):
                    return await func(*args, **kwargs)
            return async_wrapper

        @wraps(func)
        def sync_wrapper(*args, **kwargs):
            with _tracked(operation_name):
                return func(*args, **kwargs)
        return sync_wrapper
    return decorator


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """工作线程数：min(MAX_CONCURRENT_TASKS, 请求值或环境变量)"""
    if requested is None:
        raw = os.environ.get(THREADS_ENV_VAR)
        try:
            requested = int(raw) if raw else MAX_CONCURRENT_TASKS
        except ValueError:
            logger.warning("环境变量 %s=%r 不是整数，忽略", THREADS_ENV_VAR, raw)
            requested = MAX_CONCURRENT_TASKS
    return max(1, min(MAX_CONCURRENT_TASKS, int(requested)))


class BatchProcessor:
    """批量处理器；结果按提交顺序返回，与线程数无关"""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = resolve_worker_count(max_workers)
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)

    def run(self, tasks: List[Callable[[], Any]]) -> List[Tuple[int, Any, Optional[BaseException]]]:
        """同步执行；每项为 (序号, 结果, 异常)"""
        results = []
        future_to_index = {self.executor.submit(task): i for i, task in enumerate(tasks)}
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            try:
                results.append((index, future.result(), None))
            except Exception as e:
                logger.warning("批量任务 %d 失败: %s", index, e)
                results.append((index, None, e))
        results.sort(key=lambda x: x[0])
        return results

    def shutdown(self):
        """关闭处理器"""
        self.executor.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
        return False


def reset_performance_stats():
    """重置性能统计"""
    global performance_monitor
    performance_monitor = PerformanceMonitor()
    resource_manager.cleanup_memory()


def get_monitor() -> PerformanceMonitor:
    """当前的全局监控器（reset 后会替换）"""
    return performance_monitor


__all__ = [
    "PerformanceMonitor",
    "ResourceManager",
    "BatchProcessor",
    "performance_tracking",
    "resolve_worker_count",
    "reset_performance_stats",
    "get_monitor",
    "performance_monitor",
    "resource_manager",
]
