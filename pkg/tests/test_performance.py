"""
性能工具与产物输出测试
"""

import asyncio
import json
import math
import os
import tempfile
import time
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

from config import MANIFEST_NAME, MAX_CONCURRENT_TASKS, THREADS_ENV_VAR
from utils.artifact_io import (
    atomic_write_text,
    build_manifest,
    dumps_canonical,
    normalize,
    rows_to_csv,
    write_manifest,
)
from utils.performance import (
    BatchProcessor,
    PerformanceMonitor,
    get_monitor,
    performance_tracking,
    reset_performance_stats,
    resolve_worker_count,
)


class TestWorkerCount(unittest.TestCase):
    """测试线程数策略"""

    def test_requested_is_capped(self):
        """测试请求值不超过上限且至少为 1"""
        self.assertEqual(resolve_worker_count(1), 1)
        self.assertEqual(resolve_worker_count(10 * MAX_CONCURRENT_TASKS), MAX_CONCURRENT_TASKS)
        self.assertEqual(resolve_worker_count(0), 1)

    def test_environment_variable(self):
        """测试环境变量限制并行度"""
        with mock.patch.dict(os.environ, {THREADS_ENV_VAR: "1"}):
            self.assertEqual(resolve_worker_count(), 1)
        with mock.patch.dict(os.environ, {THREADS_ENV_VAR: "many"}):
            self.assertEqual(resolve_worker_count(), MAX_CONCURRENT_TASKS)


class TestBatchProcessor(unittest.TestCase):
    """测试批量处理器"""

    def test_results_follow_submission_order(self):
        """测试结果顺序与完成顺序无关"""
        def make(i):
            def task():
                time.sleep(0.01 * (3 - i))
                return i * i
            return task

        with BatchProcessor(max_workers=3) as processor:
            results = processor.run([make(i) for i in range(4)])
        self.assertEqual([r[0] for r in results], [0, 1, 2, 3])
        self.assertEqual([r[1] for r in results], [0, 1, 4, 9])

    def test_failures_are_collected(self):
        """测试单个任务失败不影响其他任务"""
        def boom():
            raise RuntimeError("失败")

        with BatchProcessor(max_workers=2) as processor:
            results = processor.run([lambda: 1, boom])
        self.assertEqual(results[0][1], 1)
        self.assertIsInstance(results[1][2], RuntimeError)


class TestMonitor(unittest.TestCase):
    """测试性能监控与阶段记录"""

    def test_record_stage(self):
        """测试阶段记录与精度模式"""
        monitor = PerformanceMonitor()
        monitor.record_stage("fatou", residual=1e-12, iterations=40, precision="double")
        monitor.record_stage("koenigs", precision="double-double", eps=[1e-3, 0.0])
        records = monitor.stage_records()
        self.assertEqual(records[0]["stage"], "fatou")
        self.assertEqual(records[1]["eps"], [1e-3, 0.0])
        self.assertEqual(monitor.precision_modes(), ["double", "double-double"])
        self.assertEqual(len(monitor.stage_records()), 2)

    def test_tracking_decorator(self):
        """测试装饰器记录同步与异步调用"""
        reset_performance_stats()

        @performance_tracking("sync")
        def double(x):
            return 2 * x

        @performance_tracking("async")
        async def triple(x):
            return 3 * x

        self.assertEqual(double(2), 4)
        self.assertEqual(asyncio.run(triple(2)), 6)
        self.assertEqual(get_monitor().metrics["total_operations"], 2)
        self.assertEqual(get_monitor().metrics["errors"], 0)


class TestArtifactIO(unittest.TestCase):
    """测试规范 JSON、CSV 与原子写入"""

    def test_normalize(self):
        """测试复数、数组与非有限值的转换"""
        data = normalize({"z": 1 + 2j, "a": np.array([1.5, np.nan]), "b": np.bool_(True),
                          "n": np.int64(3)})
        self.assertEqual(data, {"z": [1.0, 2.0], "a": [1.5, None], "b": True, "n": 3})

    def test_canonical_json(self):
        """测试键排序且相同输入逐字节相同"""
        text = dumps_canonical({"b": 1, "a": math.inf})
        self.assertEqual(list(json.loads(text)), ["a", "b"])
        self.assertIsNone(json.loads(text)["a"])
        self.assertEqual(text, dumps_canonical({"a": math.inf, "b": 1}))

    def test_csv(self):
        """测试表头、空值与复数单元格"""
        text = rows_to_csv([{"x": 0.5, "y": None, "z": 1j}], ("x", "y", "z"))
        self.assertEqual(text.splitlines(), ["x,y,z", '0.5,,"[0.0, 1.0]"'])

    def test_atomic_write(self):
        """测试写入后不残留临时文件"""
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "sub" / "out.json"
            atomic_write_text(target, "{}\n")
            atomic_write_text(target, "[]\n")
            self.assertEqual(target.read_text(encoding="utf-8"), "[]\n")
            self.assertEqual(sorted(p.name for p in target.parent.iterdir()), ["out.json"])

    def test_manifest(self):
        """测试清单的阶段排序与产物列表"""
        stages = [{"stage": "b", "residual": None}, {"stage": "a", "residual": 1e-9}]
        manifest = build_manifest("sweep", "0" * 64, {"tol": 1e-10}, stages,
                                  ["double", "double"], ["sweep.json"])
        self.assertEqual([s["stage"] for s in manifest["stages"]], ["a", "b"])
        self.assertEqual(manifest["precision_modes"], ["double"])
        self.assertIn("numpy", manifest["packages"])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_manifest(tmp, manifest)
            self.assertEqual(path.name, MANIFEST_NAME)
            self.assertEqual(json.loads(path.read_text(encoding="utf-8"))["command"], "sweep")


if __name__ == "__main__":
    unittest.main()
