"""
stokes-limits 测试包

可直接运行本文件发现并执行全部测试，也可用 pytest。
"""

import os
import sys
import unittest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(TESTS_DIR))


def run_all(pattern: str = "test_*.py", verbosity: int = 2) -> bool:
    """发现并运行测试，返回是否全部通过"""
    suite = unittest.TestLoader().discover(TESTS_DIR, pattern=pattern, top_level_dir=os.path.dirname(TESTS_DIR))
    return unittest.TextTestRunner(verbosity=verbosity).run(suite).wasSuccessful()


if __name__ == "__main__":
    pattern = sys.argv[1] if len(sys.argv) > 1 else "test_*.py"
    sys.exit(0 if run_all(pattern) else 1)
