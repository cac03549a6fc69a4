"""
扰动族：规范对数、Koenigs 图、复时间与转移函数测试
"""

import cmath
import math
import unittest

import numpy as np

from tools.holonomy_2d import MonodromyMapFamily, PlanarFieldFamily
from tools.koenigs_perturbed import (
    GermFamily,
    KoenigsChart,
    canonic_log,
    convergence_sweep,
    distance_to_slits,
    fixed_point_data,
    generator_eval,
    generator_flow_check,
    koenigs_chart,
    koenigs_eval,
    koenigs_jet,
    koenigs_residual,
    line_times,
    model_field,
    model_field_check,
    perturbed_time,
    perturbed_times,
    perturbed_transition,
    richardson_limit,
    segments_cross_slits,
    transition_pairs,
)
from utils.maps import FactoredMap
from utils.validation import BranchCut, DegenerateInput, NotConverged, ValidationError

TWO_PI_I = 2j * math.pi
MOEBIUS_EPS = (-1e-2, -1e-3, -1e-4)
GENERIC_EPS = 1e-4 * cmath.exp(0.4j)
# 在这一 ε 处 |μ_0| - 1 约为 2e-5
NEAR_UNIT_EPS = 1e-3 * cmath.exp(0.4j)


def doubling_map():
    """2t/(1+t)，0 处乘子为 2，Koenigs 函数为 t/(1-t)"""
    return FactoredMap([0.0, 1.0], [-1 / TWO_PI_I], [1.0, 1.0])


class TestCanonicLog(unittest.TestCase):
    """测试乘子的规范对数"""

    def test_branch_window(self):
        """测试虚部落在 (-π/2, 3π/2)"""
        self.assertAlmostEqual(canonic_log(2.0), math.log(2.0))
        self.assertAlmostEqual(canonic_log(-1.0), 1j * math.pi)
        value = canonic_log(cmath.exp(-2j))
        self.assertAlmostEqual(value.imag, 2 * math.pi - 2)

    def test_negative_imaginary_axis(self):
        """测试 μ ∈ iR_- 与 μ = 0 时报退化"""
        with self.assertRaises(DegenerateInput):
            canonic_log(-0.5j)
        with self.assertRaises(DegenerateInput):
            canonic_log(0)


class TestKoenigsLinearization(unittest.TestCase):
    """测试 Koenigs 线性化"""

    def test_doubling_map_closed_form(self):
        """测试排斥不动点的 φ 与 t/(1-t) 一致"""
        chart = KoenigsChart.from_map(doubling_map(), 0, delta=0.5)
        self.assertAlmostEqual(chart.fp.mu, 2.0)
        self.assertEqual(chart.fp.stability, "repelling")
        t = np.array([0.1, 0.05 + 0.05j, -0.2j])
        ev = koenigs_eval(chart, t, with_derivative=True)
        np.testing.assert_allclose(ev.values, t / (1 - t), rtol=1e-10)
        np.testing.assert_allclose(ev.derivatives, 1 / (1 - t) ** 2, rtol=1e-9)
        self.assertLess(float(np.nanmax(koenigs_residual(chart, t))), 1e-10)

    def test_generator_flow(self):
        """测试规范生成元的单位时间流回到映射本身"""
        chart = KoenigsChart.from_map(doubling_map(), 0, delta=0.5)
        errors = generator_flow_check(chart, np.array([0.05, 0.03 + 0.04j]))
        self.assertLess(float(np.max(errors)), 1e-9)

    def test_moebius_family_closed_form(self):
        """测试 Möbius 族的 φ = (α0-α1)(t-α0)/(t-α1)"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        fmap = fam.at(-1e-4)
        a0, a1 = fmap.roots
        self.assertAlmostEqual(a0, 0.01j)
        chart = KoenigsChart.from_map(fmap, 0, delta=0.3)
        t = np.array([-0.15, -0.1 + 0.05j, 0.05 + 0.02j])
        ev = koenigs_eval(chart, t)
        np.testing.assert_allclose(ev.values, (a0 - a1) * (t - a0) / (t - a1), rtol=1e-10)

    def test_jet_closed_form(self):
        """测试倍增映射的局部射流为 t + t² + t³ + …"""
        jet = koenigs_jet(doubling_map(), 0, order=12)
        expected = np.ones(13, dtype=complex)
        expected[0] = 0
        np.testing.assert_allclose(jet.coeffs, expected, atol=1e-12)

    def test_generator_closed_form(self):
        """测试倍增映射的规范生成元 v = ln2·t(1-t)"""
        chart = KoenigsChart.from_map(doubling_map(), 0, delta=0.5)
        t = np.array([0.05, 0.03 + 0.04j, -0.1j])
        np.testing.assert_allclose(generator_eval(chart, t), math.log(2) * t * (1 - t), rtol=1e-9)
        self.assertAlmostEqual(generator_eval(chart, 0.05), math.log(2) * 0.05 * 0.95, places=12)

    def test_iteration_cost_grows(self):
        """测试 ε → 0 时同一点的 Koenigs 迭代次数严格增加"""
        eps_list = (1e-3j, 1e-4j, 1e-5j)
        fam = GermFamily.quadratic(eps_list)
        counts = []
        for eps in eps_list:
            self.assertEqual(fixed_point_data(fam, eps, 0).stability, "attracting")
            chart = KoenigsChart.from_map(fam.at(eps), 0, delta=0.3)
            ev = koenigs_eval(chart, [-0.05])
            self.assertTrue(np.isfinite(ev.values[0]))
            counts.append(ev.iterations)
        self.assertEqual(counts, sorted(counts))
        self.assertEqual(len(set(counts)), len(counts))

    def test_near_unit_multiplier_fails_fast(self):
        """测试 |μ| 贴近 1 时在迭代前按预计次数报不收敛"""
        fam = GermFamily.quadratic((NEAR_UNIT_EPS,))
        fp = fixed_point_data(fam, NEAR_UNIT_EPS, 0)
        self.assertLess(abs(abs(fp.mu) - 1), 1e-3)
        chart = KoenigsChart.from_map(fam.at(NEAR_UNIT_EPS), 0, delta=0.3)
        with self.assertRaises(NotConverged) as ctx:
            koenigs_eval(chart, [-0.08], cap=20_000)
        self.assertIn("预计", str(ctx.exception))


class TestFixedPoints(unittest.TestCase):
    """测试不动点数据与模型向量场"""

    def test_moebius_multiplier(self):
        """测试 μ = (1+4π²ε)/(1-2πiα)²"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        eps = -1e-2
        fp = fixed_point_data(fam, eps, 0)
        expected = (1 + 4 * math.pi ** 2 * eps) / (1 - TWO_PI_I * fp.alpha) ** 2
        self.assertAlmostEqual(fp.mu, expected, places=12)
        self.assertEqual(fp.stability, "attracting")
        other = fixed_point_data(fam, eps, 1)
        self.assertAlmostEqual(fp.mu * other.mu, 1.0, places=12)

    def test_model_field_matches_multiplier(self):
        """测试模型场在 α_i 处的导数等于 log μ"""
        fam = GermFamily.quadratic((1e-3j, 1e-4j))
        field = model_field(fam, 1e-3j, 0)
        fp = fixed_point_data(fam, 1e-3j, 0)
        self.assertAlmostEqual(field.derivative_at_root(), fp.log_mu, places=12)

    def test_model_field_check(self):
        """测试 f_ε∘g_w^{-1} - id 与 w(t)(t-α) 同阶，且圆周缩小时残差下降"""
        fam = GermFamily.quadratic((1e-4j,))
        angles = np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
        outer = model_field_check(fam, 1e-4j, 0, 0.04 * angles)
        inner = model_field_check(fam, 1e-4j, 0, 0.02 * angles)
        for report in (outer, inner):
            self.assertTrue(math.isfinite(report["constant"]))
            self.assertLess(report["constant"], 20.0)
        self.assertLess(float(np.max(inner["residuals"])), float(np.max(outer["residuals"])))

    def test_index_out_of_range(self):
        """测试不动点序号越界"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        with self.assertRaises(ValidationError):
            fixed_point_data(fam, -1e-2, 2)

    def test_family_validation(self):
        """测试族的系数约束"""
        with self.assertRaises(ValidationError):
            GermFamily(k=1, eps_list=(1e-3,))
        with self.assertRaises(ValidationError):
            GermFamily(k=1, eps_list=(1e-3,), explicit_roots=[[0.1, -0.1], [0.01, -0.01]])


class TestSlits(unittest.TestCase):
    """测试开缝几何"""

    def test_distance_to_slits(self):
        """测试到线段 [0, α] 的距离"""
        d = distance_to_slits([0.005j, 0.02j, -0.1], np.array([0.01j]))
        np.testing.assert_allclose(d, [0.0, 0.01, 0.1], atol=1e-15)

    def test_segment_crossing(self):
        """测试线段与开缝相交"""
        slits = np.array([0.01j])
        hit = segments_cross_slits(np.array([-0.001 + 0.005j, -0.001 + 0.02j]),
                                   np.array([0.001 + 0.005j, 0.001 + 0.02j]), slits)
        self.assertEqual(list(hit), [True, False])

    def test_branch_cut(self):
        """测试单值模式下穿过开缝的路径报 BranchCut"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        chart = koenigs_chart(fam, -1e-4, 0, mode="invariant")
        self.assertEqual(chart.ray, 0)
        target = 0.07 + 0.005j
        with self.assertRaises(BranchCut):
            perturbed_time(chart, target, path=[chart.base_point, target])

    def test_time_is_path_independent(self):
        """测试开缝域内不同路径得到同一复时间"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        chart = koenigs_chart(fam, -1e-4, 0, mode="invariant")
        b = chart.base_point
        t = -0.03 + 0.004j
        direct = perturbed_time(chart, t, path=[b, t])
        detour = perturbed_time(chart, t, path=[b, -0.1 - 0.03j, t])
        self.assertLess(abs(direct - detour), 1e-9)

    def test_winding_shifts_time_by_period(self):
        """测试绕开缝 [0, α_0] 一周的路径使复时间相差 ±2πi/log μ"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        chart = koenigs_chart(fam, -1e-4, 0, mode="invariant")
        b = chart.base_point
        t = -0.03 + 0.004j
        direct = perturbed_time(chart, t, path=[b, t])
        around = perturbed_time(chart, t, path=[b, -0.03 + 0.05j, 0.03 + 0.05j, 0.03 + 0.004j, t],
                                single_valued=False)
        period = TWO_PI_I / chart.fp.log_mu
        diff = around - direct
        self.assertLess(min(abs(diff - period), abs(diff + period)), 1e-9)
        self.assertGreater(abs(period), 1.0)

    def test_line_times_match_paths(self):
        """测试沿点列累加的复时间与逐点路径延拓一致"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        chart = koenigs_chart(fam, -1e-4, 0)
        pts = -0.1 + 0.01j * np.linspace(-1.0, 1.0, 9)
        along = line_times(chart, pts)
        pointwise = perturbed_times(chart, pts)
        np.testing.assert_allclose(along.values, pointwise.values, atol=1e-10)


class TestPerturbedTransitions(unittest.TestCase):
    """测试扰动转移函数与收敛扫描"""

    def test_transition_pairs(self):
        """测试 k = 1 的两对相邻不动点"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        self.assertEqual(transition_pairs(fam), [(0, 1), (1, 0)])

    def test_moebius_transition_is_translation(self):
        """测试 Möbius 对照族的转移函数只有平移部分"""
        fam = GermFamily.moebius(MOEBIUS_EPS)
        sample = perturbed_transition(fam, -1e-4, (0, 1), fourier_range=1, depth=1.5, samples=64)
        self.assertEqual(sample.half_plane_sign, 1)
        self.assertLess(abs(sample.fourier[-1]), 1e-6)
        self.assertLess(sample.metadata["residual_koenigs"], 1e-8)
        self.assertEqual(sample.metadata["mode"], "model")

    def test_generic_transition_refinement(self):
        """测试非 Möbius 族的 |c_{-1}| 在加密采样与收紧容差后保持不变"""
        fam = GermFamily.quadratic((GENERIC_EPS,))
        pair = transition_pairs(fam)[0]
        coarse = perturbed_transition(fam, GENERIC_EPS, pair, fourier_range=1, samples=32, tol=1e-10)
        fine = perturbed_transition(fam, GENERIC_EPS, pair, fourier_range=1, samples=64, tol=1e-12)
        s = -fine.half_plane_sign
        reference = abs(fine.fourier[s])
        self.assertGreater(reference, 0.0)
        self.assertLess(abs(abs(coarse.fourier[s]) - reference) / reference, 1e-3)
        self.assertLessEqual(fine.metadata["residual_koenigs"], 1e-8)

    def test_reduced_sweep_matches_unperturbed(self):
        """测试二次族的 |c_l| 外推值与未扰动模的相对距离小于 2%"""
        fam = GermFamily.quadratic((1e-4j, 1e-5j, 1e-6j))
        result = convergence_sweep(fam, fourier_range=1, samples=64, depth=2.0, mode="limit", threads=1)
        self.assertEqual(result.errors, [])
        self.assertEqual(len(result.limits), 2)
        for entry in result.limits:
            self.assertLess(entry["relative_distance"], 0.02)

    def test_monodromy_sweep_matches_unperturbed(self):
        """测试平面族单值映射的扫描与 ε = 0 的单值映射模相差小于 5%"""
        fam = MonodromyMapFamily(PlanarFieldFamily.quadratic((1e-4j, 1e-5j)), radius=0.2)
        result = convergence_sweep(fam, fourier_range=1, samples=64, depth=2.0, mode="limit",
                                   delta=0.15, threads=1)
        self.assertEqual(result.errors, [])
        self.assertTrue(result.limits)
        for entry in result.limits:
            self.assertLess(entry["relative_distance"], 0.05)

    def test_real_eps_is_degenerate(self):
        """测试实 ε 族在扫描前报退化"""
        fam = GermFamily.quadratic((1e-2, 1e-3))
        with self.assertRaises(DegenerateInput):
            convergence_sweep(fam, compare_unperturbed=False)

    def test_richardson_limit(self):
        """测试线性模型的外推"""
        self.assertAlmostEqual(richardson_limit(np.array([0.2, 0.1]), [1.2, 1.1]), 1.0)
        self.assertAlmostEqual(richardson_limit(np.array([0.3]), [2.0]), 2.0)


if __name__ == "__main__":
    unittest.main()
