"""
命令行入口、实验配置与退出码测试
"""

import contextlib
import io
import json
import math
import tempfile
import unittest
from pathlib import Path

from main import artifact_path, parse_complex, run
from utils.experiment_config import (
    ExperimentConfig,
    apply_overrides,
    config_hash,
    load_config,
    parse_config,
)
from utils.validation import ValidationError

MOEBIUS_TOML = """
[family]
preset = "moebius"

[eps]
values = [[-1e-2, 0.0], [-1e-3, 0.0]]
"""

REAL_QUADRATIC_TOML = """
[family]
preset = "quadratic"

[eps]
values = [[1e-2, 0.0], [1e-3, 0.0]]
"""


def write_config(directory, text, name="experiment.toml"):
    path = Path(directory) / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def run_quiet(argv):
    """运行子命令，返回 (退出码, stdout 文本)"""
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        code = run(argv)
    return code, buffer.getvalue()


class TestExitCodes(unittest.TestCase):
    """测试退出码"""

    def test_rays_prints_angles(self):
        """测试 rays 子命令把辐角写到 stdout"""
        code, out = run_quiet(["rays", "--k", "2"])
        self.assertEqual(code, 0)
        angles = json.loads(out)
        self.assertEqual(len(angles), 4)
        self.assertAlmostEqual(angles[0], math.pi / 4)

    def test_missing_config(self):
        """测试配置文件不存在时退出码为 1"""
        with tempfile.TemporaryDirectory() as tmp:
            code, _ = run_quiet(["invariant", "--config", str(Path(tmp) / "absent.toml")])
        self.assertEqual(code, 1)

    def test_unknown_field(self):
        """测试未知字段退出码为 1"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, MOEBIUS_TOML + "\n[numerics]\nfoo = 1\n")
            code, _ = run_quiet(["invariant", "--config", path, "--out", tmp])
        self.assertEqual(code, 1)

    def test_bad_argument(self):
        """测试无法解析的参数退出码为 1"""
        code, _ = run_quiet(["rays", "--k", "two"])
        self.assertEqual(code, 1)

    def test_real_roots_are_degenerate(self):
        """测试实 ε 的扫描退出码为 2"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, REAL_QUADRATIC_TOML)
            code, _ = run_quiet(["sweep", "--config", path, "--out", tmp])
            self.assertEqual(code, 2)
            self.assertFalse((Path(tmp) / "sweep.json").exists())

    def test_command_requires_eps(self):
        """测试缺少 ε 样本时按参数错误处理"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, '[family]\npreset = "moebius"\n')
            code, _ = run_quiet(["koenigs", "--config", path, "--out", tmp])
        self.assertEqual(code, 1)


class TestArtifacts(unittest.TestCase):
    """测试产物与清单"""

    def test_invariant_is_deterministic(self):
        """测试同一配置两次运行的产物逐字节相同"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, MOEBIUS_TOML)
            outputs = []
            for name in ("a", "b"):
                out_dir = Path(tmp) / name
                code, _ = run_quiet(["invariant", "--config", path, "--out", str(out_dir)])
                self.assertEqual(code, 0)
                outputs.append(out_dir)
            first = (outputs[0] / "invariant.json").read_bytes()
            self.assertEqual(first, (outputs[1] / "invariant.json").read_bytes())
            data = json.loads(first)
            self.assertEqual(data["command"], "invariant")
            lam = complex(*data["data"]["lambda"])
            self.assertLess(abs(lam), 1e-12)
            self.assertIn("nondegenerate", data["data"])
            manifest = json.loads((outputs[0] / "manifest.json").read_text(encoding="utf-8"))
            self.assertEqual(manifest["command"], "invariant")
            self.assertEqual(manifest["artifacts"], ["invariant.json"])
            self.assertEqual(len(manifest["config_sha256"]), 64)

    def test_csv_output(self):
        """测试 --out 以 .csv 结尾时写出 CSV"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, MOEBIUS_TOML)
            target = Path(tmp) / "table.csv"
            code, _ = run_quiet(["invariant", "--config", path, "--out", str(target)])
            self.assertEqual(code, 0)
            lines = target.read_text(encoding="utf-8").splitlines()
            self.assertEqual(lines[0], "k,lam_re,lam_im,residual")
            self.assertEqual(len(lines), 2)
            self.assertTrue((Path(tmp) / "manifest.json").exists())

    def test_artifact_path(self):
        """测试 --out 的后缀语义"""
        self.assertEqual(artifact_path("res/x.csv", "sweep", "json"), (Path("res/x.csv"), "csv"))
        self.assertEqual(artifact_path("res", "central-manifold", "json"),
                         (Path("res/central_manifold.json"), "json"))

    def test_parse_complex(self):
        """测试复数参数的两种写法"""
        self.assertEqual(parse_complex("1e-4"), 1e-4 + 0j)
        self.assertEqual(parse_complex("1e-4, 2e-5"), complex(1e-4, 2e-5))
        self.assertEqual(parse_complex("1e-4+2e-5j"), complex(1e-4, 2e-5))


class TestExperimentConfig(unittest.TestCase):
    """测试配置校验与覆盖"""

    def test_eps_generator(self):
        """测试对数等距生成器与辐角"""
        cfg = parse_config({"eps": {"start": 1e-2, "stop": 1e-4, "count": 3, "arg": math.pi / 2}})
        values = cfg.eps_values()
        self.assertEqual(len(values), 3)
        for got, radius in zip(values, (1e-2, 1e-3, 1e-4)):
            self.assertAlmostEqual(abs(got) / radius, 1.0, places=12)
            self.assertAlmostEqual(got.real / radius, 0.0, places=12)

    def test_eps_generator_must_decrease(self):
        """测试 start <= stop 时报错"""
        with self.assertRaises(ValidationError):
            parse_config({"eps": {"start": 1e-4, "stop": 1e-2, "count": 3}})

    def test_values_and_generator_conflict(self):
        """测试 values 与生成器同时给出时报错"""
        with self.assertRaises(ValidationError):
            parse_config({"eps": {"values": [[1e-3, 0.0]], "start": 1e-2, "stop": 1e-3,
                                  "count": 2}})

    def test_family_needs_polynomial(self):
        """测试既无 p 也无 roots 时报错，并给出字段路径"""
        with self.assertRaises(ValidationError) as ctx:
            parse_config({"family": {"kind": "map"}})
        self.assertIn("family", str(ctx.exception))

    def test_bad_complex_pair(self):
        """测试复数必须写作 [re, im]"""
        with self.assertRaises(ValidationError):
            parse_config({"family": {"preset": "quadratic", "c": [0.3]}})

    def test_toml_syntax_error(self):
        """测试 TOML 语法错误"""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_config(tmp, "[family\npreset = 1\n")
            with self.assertRaises(ValidationError):
                load_config(path)

    def test_overrides(self):
        """测试命令行覆盖 numerics 与 output"""
        cfg = apply_overrides(ExperimentConfig(), tol=1e-9, grid=128, precision="double-double",
                              eps=1e-3j, out="res", format="csv", threads=None)
        self.assertEqual(cfg.numerics.tol, 1e-9)
        self.assertEqual(cfg.numerics.samples, 128)
        self.assertEqual(cfg.numerics.precision, "double-double")
        self.assertIsNone(cfg.numerics.threads)
        self.assertEqual(cfg.output.path, "res")
        self.assertEqual(cfg.output.format, "csv")
        self.assertEqual(cfg.eps_values(), [1e-3j])

    def test_eps_override_selects_explicit_roots(self):
        """测试 --eps 在显式根配置中选取对应的一行"""
        cfg = parse_config({
            "family": {"roots": [[[0.1, 0.0], [-0.1, 0.0]], [[0.0, 0.01], [0.0, -0.01]]]},
            "eps": {"values": [[0.01, 0.0], [-1e-4, 0.0]]},
        })
        picked = apply_overrides(cfg, eps=-1e-4)
        self.assertEqual(len(picked.family.roots), 1)
        self.assertEqual(picked.family.roots[0][0], [0.0, 0.01])
        with self.assertRaises(ValidationError):
            apply_overrides(cfg, eps=5e-3)

    def test_config_hash_is_stable(self):
        """测试规范哈希只依赖内容"""
        a = parse_config({"numerics": {"tol": 1e-9}})
        b = parse_config({"numerics": {"tol": 1e-9}})
        self.assertEqual(config_hash(a), config_hash(b))
        self.assertNotEqual(config_hash(a), config_hash(ExperimentConfig()))


if __name__ == "__main__":
    unittest.main()
