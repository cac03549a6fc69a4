"""
平面向量场：单值映射与分界线测试
"""

import cmath
import math
import unittest

import numpy as np

from tools.commands import separatrix_targets
from tools.formal_normalform import formal_invariant
from tools.holonomy_2d import (
    LinearPlanarField,
    MonodromyMapFamily,
    PathDriver,
    PlanarFieldFamily,
    circle_grid,
    fit_circle_polynomial,
    integral_from_time,
    monodromy_germ,
    separatrix_slope,
    separatrix_trace,
    snap_parabolic,
)
from utils.precision import to_double
from utils.validation import ValidationError, WrongNormalization

TWO_PI_I = 2j * math.pi


class TestLinearMonodromy(unittest.TestCase):
    """测试线性场的单值乘子"""

    def test_multiplier_matches_exponential(self):
        """测试乘子等于 e^{2πiμ/ν}"""
        for ratio in (0.1 + 0.2j, -0.3 + 0.1j, 0.25j, 0.4 - 0.1j, -0.2 - 0.3j):
            with self.subTest(ratio=ratio):
                fld = LinearPlanarField(nu=1.0 + 0.5j, mu=ratio * (1.0 + 0.5j))
                germ = monodromy_germ(fld)
                expected = cmath.exp(TWO_PI_I * ratio)
                self.assertLess(abs(germ.multiplier - expected), 1e-8)
                self.assertLess(abs(fld.multiplier - expected), 1e-12)


class TestNormalFormMonodromy(unittest.TestCase):
    """测试形式正规形的单值映射"""

    def test_pointwise_against_moebius(self):
        """测试 λ = 0 时单值映射为 t/(1-2πit)"""
        fam = PlanarFieldFamily.normal_form(1)
        grid = circle_grid(0.05, 20)
        germ = monodromy_germ(fam, 0j, t_grid=grid, fit=False)
        expected = grid / (1 - TWO_PI_I * grid)
        self.assertLess(float(np.max(np.abs(germ.values - expected))), 1e-7)
        self.assertEqual(len(germ.rows()), 20)

    def test_fitted_jet(self):
        """测试拟合射流的低阶系数"""
        germ = monodromy_germ(PlanarFieldFamily.normal_form(1), 0j)
        coeffs = to_double(germ.fitted_jet.coeffs)
        self.assertLess(abs(coeffs[1] - 1), 1e-9)
        self.assertLess(abs(coeffs[2] - TWO_PI_I), 1e-6)
        self.assertLess(germ.fit_residual, 1e-6)

    def test_formal_invariant_of_monodromy(self):
        """测试 λ = 0.2 的正规形单值映射给回 λ"""
        germ = monodromy_germ(PlanarFieldFamily.normal_form(1, lam=0.2), 0j)
        result = formal_invariant(germ.normalized_jet(), 1)
        self.assertLess(abs(result.lam - 0.2), 1e-3)

    def test_monodromy_map_family_orientation(self):
        """测试单值映射族的未扰动芽满足 2πi 规范化"""
        family = MonodromyMapFamily(PlanarFieldFamily.normal_form(1))
        germ = family.unperturbed_germ()
        self.assertEqual(germ.coefficients[2], TWO_PI_I)
        self.assertLess(abs(family.unperturbed_lambda()), 1e-6)


class TestSeparatrix(unittest.TestCase):
    """测试分界线追踪"""

    def test_slope(self):
        """测试特征向量斜率 -2√ε/(1-2√ε)"""
        for eps in (1e-3, 1e-4):
            with self.subTest(eps=eps):
                fam = PlanarFieldFamily.quadratic((eps,))
                s = math.sqrt(eps)
                slope = separatrix_slope(fam.at(eps), s)
                self.assertLess(abs(slope - (-2 * s / (1 - 2 * s))), 1e-10)

    def test_certified_samples(self):
        """测试两个奇点的分界线样本全部满足认证不等式"""
        for eps in (1e-3, 1e-4):
            fam = PlanarFieldFamily.quadratic((eps,))
            roots = fam.roots_at(eps).roots
            for i in range(2):
                with self.subTest(eps=eps, i=i):
                    trace = separatrix_trace(fam, eps, i, separatrix_targets(roots, i))
                    self.assertTrue(bool(np.all(trace.certified)))
                    self.assertAlmostEqual(trace.slope_at_alpha,
                                           separatrix_slope(fam.at(eps), roots[i]), places=10)
                    trace.assert_certified()

    def test_index_out_of_range(self):
        """测试奇点序号越界"""
        fam = PlanarFieldFamily.quadratic((1e-3,))
        with self.assertRaises(ValidationError):
            separatrix_trace(fam, 1e-3, 5, [0.05])


class TestHelpers(unittest.TestCase):
    """测试辅助函数"""

    def test_integral_from_time(self):
        """测试 e^{2πiτ}"""
        self.assertAlmostEqual(integral_from_time(0.25), 1j)

    def test_fit_needs_enough_points(self):
        """测试网格点数不足时报错"""
        with self.assertRaises(ValidationError):
            fit_circle_polynomial(circle_grid(0.1, 3), np.zeros(3), 4)

    def test_snap_parabolic(self):
        """测试对齐到 2πi 规范形式与定向检查"""
        snapped = snap_parabolic([1e-9, 1 + 1e-9, TWO_PI_I + 1e-8, 0.5], 1)
        np.testing.assert_array_equal(snapped[:3], [0, 1, TWO_PI_I])
        self.assertEqual(snapped[3], 0.5)
        with self.assertRaises(WrongNormalization):
            snap_parabolic([0, 1, -TWO_PI_I], 1)

    def test_path_driver_coordinate(self):
        """测试驱动坐标必须为 z 或 t"""
        with self.assertRaises(ValidationError):
            PathDriver.segment(0.0, 1.0, coordinate="w")

    def test_family_requires_roots(self):
        """测试缺少 p 与显式根时报错"""
        with self.assertRaises(ValidationError):
            PlanarFieldFamily(k=1, eps_list=(1e-3,))


if __name__ == "__main__":
    unittest.main()
