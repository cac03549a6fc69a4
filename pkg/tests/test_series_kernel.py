"""
截断幂级数内核测试
"""

import cmath
import math
import unittest

import numpy as np

from tools.series_kernel import (
    TruncatedSeries,
    model_field_jet,
    series_compose,
    series_derivative,
    series_divide,
    series_evaluate,
    series_mul,
    series_reciprocal,
    series_reverse,
    series_time1_flow,
    series_truncate,
)
from utils.precision import precision_mode, to_double
from utils.validation import BadOrder, InnerNotGerm, NotInvertible, ValidationError

TWO_PI_I = 2j * math.pi


class TestArithmetic(unittest.TestCase):
    """测试基本运算"""

    def test_coefficient_count_must_match_order(self):
        """测试系数个数与阶数不符时报错"""
        with self.assertRaises(ValidationError):
            TruncatedSeries(np.zeros(3, dtype=complex), 5)

    def test_mismatched_orders_raise(self):
        """测试阶数不一致时抛出 BadOrder"""
        a = TruncatedSeries.identity(4)
        b = TruncatedSeries.identity(5)
        with self.assertRaises(BadOrder):
            series_mul(a, b)
        with self.assertRaises(BadOrder):
            a + b

    def test_truncate_cannot_raise_order(self):
        """测试截断只能降低阶数"""
        a = TruncatedSeries.from_coeffs([0, 1, 2, 3], 3)
        self.assertEqual(series_truncate(a, 2).order, 2)
        with self.assertRaises(BadOrder):
            series_truncate(a, 4)

    def test_reciprocal_geometric(self):
        """测试 1/(1-t) 的几何级数"""
        a = TruncatedSeries.from_coeffs([1, -1], 6)
        r = series_reciprocal(a)
        np.testing.assert_allclose(to_double(r.coeffs), np.ones(7), atol=1e-15)

    def test_reciprocal_requires_constant(self):
        """测试常数项为零时不可求倒数"""
        with self.assertRaises(NotInvertible):
            series_reciprocal(TruncatedSeries.identity(3))

    def test_divide_and_derivative(self):
        """测试除法与求导"""
        a = TruncatedSeries.from_coeffs([0, 1, 1], 4)
        b = TruncatedSeries.from_coeffs([1, 1], 4)
        q = series_divide(a, b)
        np.testing.assert_allclose(to_double(q.coeffs), [0, 1, 0, 0, 0], atol=1e-15)
        d = series_derivative(TruncatedSeries.from_coeffs([1, 2, 3, 4], 3))
        np.testing.assert_allclose(to_double(d.coeffs), [2, 6, 12, 0])

    def test_evaluate_vectorized(self):
        """测试 Horner 求值支持数组"""
        a = TruncatedSeries.from_coeffs([1, 2, 3], 2)
        values = series_evaluate(a, np.array([0.0, 1.0, 2.0]))
        np.testing.assert_allclose(values, [1, 6, 17])


class TestCompositionAndReversion(unittest.TestCase):
    """测试复合与反演"""

    def test_compose_simple(self):
        """测试 (t + t²)∘(2t) = 2t + 4t²"""
        outer = TruncatedSeries.from_coeffs([0, 1, 1], 4)
        inner = TruncatedSeries.from_coeffs([0, 2], 4)
        out = series_compose(outer, inner)
        np.testing.assert_allclose(to_double(out.coeffs), [0, 2, 4, 0, 0])

    def test_compose_requires_germ(self):
        """测试内层常数项非零时抛出 InnerNotGerm"""
        outer = TruncatedSeries.identity(3)
        inner = TruncatedSeries.from_coeffs([1, 1], 3)
        with self.assertRaises(InnerNotGerm):
            series_compose(outer, inner)

    def test_reverse_catalan(self):
        """测试 t + t² 的逆为带交错符号的 Catalan 数"""
        s = TruncatedSeries.from_coeffs([0, 1, 1], 6)
        r = series_reverse(s)
        np.testing.assert_allclose(to_double(r.coeffs), [0, 1, -1, 2, -5, 14, -42], atol=1e-12)
        identity = series_compose(s, r)
        np.testing.assert_allclose(to_double(identity.coeffs), [0, 1, 0, 0, 0, 0, 0], atol=1e-12)

    def test_reverse_needs_linear_term(self):
        """测试一次项为零时不可反演"""
        with self.assertRaises(NotInvertible):
            series_reverse(TruncatedSeries.from_coeffs([0, 0, 1], 4))


class TestTimeOneFlow(unittest.TestCase):
    """测试单位时间流"""

    def test_moebius_flow_exact(self):
        """测试 2πi t² 的单位时间流为 t/(1-2πit)"""
        N = 9
        flow = series_time1_flow(model_field_jet(1, 0, N), N)
        expected = [0] + [TWO_PI_I ** (n - 1) for n in range(1, N + 1)]
        np.testing.assert_allclose(to_double(flow.coeffs), expected, rtol=1e-13, atol=1e-13)

    def test_model_field_jet(self):
        """测试 v_λ 的射流系数"""
        lam = 0.3 + 0.1j
        jet = to_double(model_field_jet(1, lam, 5).coeffs)
        self.assertAlmostEqual(jet[2], TWO_PI_I)
        self.assertAlmostEqual(jet[3], -TWO_PI_I * lam)
        self.assertAlmostEqual(jet[4], TWO_PI_I * lam ** 2)

    def test_flow_rejects_linear_field(self):
        """测试线性向量场被拒绝"""
        with self.assertRaises(BadOrder):
            series_time1_flow(TruncatedSeries.from_coeffs([0, 1], 4), 4)

    def test_flow_rejects_order_mismatch(self):
        """测试 N 与向量场阶数不一致时报错"""
        with self.assertRaises(BadOrder):
            series_time1_flow(model_field_jet(1, 0, 5), 6)


class TestExtendedPrecision(unittest.TestCase):
    """测试 double-double 模式"""

    def test_object_arrays_in_extended_mode(self):
        """测试 double-double 下系数为 mpmath 对象且结果一致"""
        with precision_mode("double-double"):
            s = TruncatedSeries.from_coeffs([0, 1, 1], 6)
            r = series_reverse(s)
            self.assertEqual(r.coeffs.dtype, object)
            values = to_double(r.coeffs)
        np.testing.assert_allclose(values, [0, 1, -1, 2, -5, 14, -42], atol=1e-14)

    def test_json_round_trip(self):
        """测试 JSON 序列化"""
        s = TruncatedSeries.from_coeffs([0, 1, cmath.exp(0.5j)], 3)
        back = TruncatedSeries.from_json(s.to_json())
        self.assertEqual(back.order, 3)
        self.assertLess(back.max_abs_diff(s), 1e-15)


if __name__ == "__main__":
    unittest.main()
