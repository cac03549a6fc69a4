"""
Fatou 坐标、Ecalle–Voronin 转移函数与首次积分坐标测试
"""

import math
import unittest
from dataclasses import replace

import numpy as np

from tools.fatou_ev import (
    GermSpec,
    IntegralTransition,
    abel_residual,
    conjugator_order,
    ev_transitions,
    fatou_coordinates,
    fourier_coefficients,
    integral_series_value,
    invert_chart,
    make_chart,
    model_time,
    normalize_charts,
    overlap_point,
    petal_mode,
    sampling_line,
    shift_transition,
    split_composition,
    time_to_integral,
    transition_from_samples,
    transition_samples,
    translation_invariants,
)
from tools.formal_normalform import formal_invariant
from tools.sector_geometry import imaginary_dividing_rays
from tools.series_kernel import model_field_jet, series_time1_flow
from utils.complex_utils import newton_solve
from utils.validation import (
    BranchMismatch,
    NotUnivalent,
    OriginPole,
    ValidationError,
    WrongNormalization,
)

TWO_PI_I = 2j * math.pi
# t + 2πi t²(1 + 0.3t)
CUBIC_GERM = GermSpec.polynomial([0, 1, TWO_PI_I, 0.3 * TWO_PI_I])


def chart_for(germ, j):
    formal = formal_invariant(germ.jet(conjugator_order(germ.k)), germ.k)
    return make_chart(germ, j, formal.lam, formal.conjugator)


def synthetic_sample(j, c0, coeffs, samples=64, depth=0.25):
    """在采样线上构造 ψ(τ) = τ + c0 + Σ c_l e^{2πilτ}"""
    line = sampling_line(j, depth, samples)[:-1]
    out = line + c0
    for l, c in coeffs.items():
        out = out + c * np.exp(TWO_PI_I * l * line)
    return line, out


class TestGermSpec(unittest.TestCase):
    """测试芽的规范化检查"""

    def test_wrong_quadratic_coefficient(self):
        """测试 t² 系数不是 2πi 时报错"""
        with self.assertRaises(WrongNormalization):
            GermSpec.polynomial([0, 1, 1.0])

    def test_unknown_kind(self):
        """测试未知芽类型"""
        with self.assertRaises(ValidationError):
            GermSpec(k=1, kind="entire", coefficients=(0, 1, TWO_PI_I))

    def test_moebius_jet(self):
        """测试 Möbius 芽的射流为几何级数"""
        jet = GermSpec.moebius().jet(5)
        expected = [0] + [TWO_PI_I ** (n - 1) for n in range(1, 6)]
        np.testing.assert_allclose(np.asarray(jet.coeffs, dtype=complex), expected, rtol=1e-13)


class TestModelTime(unittest.TestCase):
    """测试模型时间与花瓣方向"""

    def test_moebius_model_time_is_exact(self):
        """测试 T_0(f(t)) = T_0(t) + 1"""
        f = GermSpec.moebius().to_map()
        t = np.array([0.05j, 0.02 + 0.03j, -0.04 + 0.01j])
        np.testing.assert_allclose(model_time(1, 0, f(t)) - model_time(1, 0, t), np.ones(3),
                                   atol=1e-12)

    def test_origin_pole(self):
        """测试 t = 0 处报 OriginPole"""
        with self.assertRaises(OriginPole):
            model_time(1, 0, 0.0)

    def test_petal_modes(self):
        """测试偶数射线吸引、奇数射线排斥"""
        self.assertEqual(petal_mode(0), "attracting")
        self.assertEqual(petal_mode(3), "repelling")

    def test_chart_index_out_of_range(self):
        """测试扇形序号越界"""
        with self.assertRaises(ValidationError):
            chart_for(GermSpec.moebius(), 2)


class TestFatouCoordinates(unittest.TestCase):
    """测试 Fatou 坐标"""

    def test_moebius_coordinates(self):
        """测试 Möbius 芽的 Fatou 坐标为 -1/(2πit) 加常数"""
        germ = GermSpec.moebius()
        t = np.array([0.05j, 0.01 + 0.03j, -0.02 + 0.04j])
        for j in (0, 1):
            with self.subTest(j=j):
                chart = chart_for(germ, j)
                pts = t if j == 0 else np.conj(t)
                values = fatou_coordinates(chart, pts).values
                shifted = values + 1 / (TWO_PI_I * pts)
                self.assertLess(float(np.max(np.abs(shifted - shifted[0]))), 1e-9)

    def test_abel_equation(self):
        """测试多项式芽满足 τ(f(t)) = τ(t) + 1"""
        germ = GermSpec.polynomial([0, 1, TWO_PI_I])
        chart = chart_for(germ, 0)
        res = abel_residual(chart, np.array([0.02j, 0.03j, 0.005 + 0.025j]))
        finite = res[np.isfinite(res)]
        self.assertGreater(len(finite), 0)
        self.assertLess(float(np.max(finite)), 1e-8)

    def test_abel_grid_cubic_germ(self):
        """测试 t+2πit²(1+0.3t) 每个花瓣 100 点网格上的 Abel 残差"""
        rays = imaginary_dividing_rays(1)
        radii = np.linspace(0.02, 0.05, 10)
        offsets = np.linspace(-0.6, 0.6, 10)
        for j in (0, 1):
            with self.subTest(j=j):
                chart = chart_for(CUBIC_GERM, j)
                t = (radii[:, None] * np.exp(1j * (rays[j] + offsets[None, :]))).ravel()
                res = abel_residual(chart, t)
                finite = res[np.isfinite(res)]
                self.assertGreaterEqual(len(finite), 90)
                self.assertLess(float(np.max(finite)), 1e-8)

    def test_inversion_round_trip(self):
        """测试 τ_0⁻¹(τ_0(t)) = t"""
        chart = chart_for(GermSpec.moebius(), 0)
        t0 = np.array([-0.05 + 0.02j, 0.03j])
        w = fatou_coordinates(chart, t0).values
        back = invert_chart(chart, w)
        np.testing.assert_allclose(back, t0, atol=1e-9)


class TestNormalization(unittest.TestCase):
    """测试图的规范化"""

    def test_moebius_offsets_vanish(self):
        """测试 Möbius 芽相邻图之差为零且闭合"""
        normalized = normalize_charts(GermSpec.moebius())
        self.assertEqual(len(normalized.charts), 2)
        self.assertEqual(normalized.charts[0].norm_constant, 0j)
        self.assertTrue(all(abs(o) < 1e-8 for o in normalized.offsets))
        self.assertLess(abs(normalized.closure), 1e-8)

    def test_closure_reproduces_lambda(self):
        """测试 v_λ 单位时间流（λ=0.2）的 τ_0 - τ_{2k-1} 趋于 -λ"""
        flow = series_time1_flow(model_field_jet(1, 0.2, 12), 12)
        germ = GermSpec.polynomial(np.asarray(flow.coeffs, dtype=complex), radius_hint=0.1)
        normalized = normalize_charts(germ)
        self.assertLess(abs(normalized.charts[0].lam - 0.2), 1e-8)
        self.assertLess(abs(normalized.wrap_difference + 0.2), 1e-4)
        self.assertLess(abs(normalized.closure), 1e-4)
        self.assertAlmostEqual(normalized.to_json()["wrap_difference"][0], normalized.wrap_difference.real)


class TestTransitions(unittest.TestCase):
    """测试转移函数与傅里叶系数"""

    def test_moebius_transitions_are_translations(self):
        """测试 Möbius 芽的全部非零傅里叶系数可忽略"""
        # 允许一侧的 c_l 按 e^{2π|l|·depth} 放大采样误差，取较浅的采样线
        modulus = ev_transitions(GermSpec.moebius(), depth=0.6)
        self.assertEqual(len(modulus.transitions), 2)
        self.assertLess(abs(modulus.lam), 1e-12)
        for sample in modulus.transitions:
            for l, c in sample.fourier.items():
                if l != 0:
                    self.assertLess(abs(c), 1e-8, msg=f"j={sample.j}, l={l}")

    def test_fourier_recovers_synthetic_coefficients(self):
        """测试从合成样本恢复 c_0 与允许一侧的系数"""
        coeffs = {-1: 0.01 + 0.02j, -2: -0.003j}
        line, out = synthetic_sample(0, 0.1 - 0.05j, coeffs)
        found = fourier_coefficients(line, out, 3)
        self.assertLess(abs(found[0] - (0.1 - 0.05j)), 1e-12)
        for l, c in coeffs.items():
            self.assertLess(abs(found[l] - c), 1e-9)
        sample = transition_from_samples(line, out, 0)
        self.assertEqual(sample.half_plane_sign, 1)
        self.assertLess(sample.noise_floor, 1e-9)
        np.testing.assert_allclose(sample.evaluate(line), out, atol=1e-12)

    def test_gauge_covariance(self):
        """测试实平移后重新采样的系数与 shift_transition 一致"""
        coeffs = {-1: 0.02 - 0.01j, -2: 0.004 + 0.001j}
        c0 = 0.2 + 0.1j
        a_in, a_out = 0.25, 0.4
        line, out = synthetic_sample(0, c0, coeffs)
        base = transition_from_samples(line, out, 0)
        moved = shift_transition(base, a_in, a_out)
        direct = fourier_coefficients(line + a_in, out + a_out, 3)
        self.assertLess(abs(moved.c0 - (c0 + a_out - a_in)), 1e-12)
        for l in coeffs:
            self.assertLess(abs(moved.fourier[l] - direct[l]), 1e-9)
            self.assertAlmostEqual(abs(moved.fourier[l]), abs(base.fourier[l]), places=12)

    def test_translation_invariants(self):
        """测试 |c_l| 与 c_{-2}/c_{-1}² 在实平移下不变"""
        line, out = synthetic_sample(0, 0.1, {-1: 0.02j, -2: 0.003})
        base = transition_from_samples(line, out, 0)
        moved = shift_transition(base, 0.37, 0.0)
        before, after = translation_invariants(base), translation_invariants(moved)
        self.assertLess(abs(before["ratio"] - after["ratio"]), 1e-9)
        self.assertAlmostEqual(before["abs"][-1], after["abs"][-1], places=12)

    def test_overlap_point_on_mid_ray(self):
        """测试采样中心位于相邻射线之间，半径受 radius/2 限制"""
        t = overlap_point(2, 1, depth=2.0, radius=1.0)
        self.assertAlmostEqual(np.angle(t), np.pi, places=12)
        self.assertAlmostEqual(abs(t), (TWO_PI_I.imag * 2 * 2.0) ** -0.5, places=12)
        self.assertAlmostEqual(abs(overlap_point(1, 0, depth=0.5, radius=0.2)), 0.1, places=12)
        line = sampling_line(0, 2.0, 8, center=3.0 - 1.0j)
        self.assertEqual(len(line), 9)
        self.assertAlmostEqual(line[4], 3.0 - 1.0j)

    def test_cubic_germ_transitions(self):
        """测试 t+2πit²(1+0.3t) 的两个转移函数都能计算且满足周期性"""
        modulus = ev_transitions(CUBIC_GERM, fourier_range=2, samples=64)
        self.assertEqual(len(modulus.transitions), 2)
        for sample in modulus.transitions:
            with self.subTest(j=sample.j):
                self.assertLess(sample.periodicity_defect, 1e-8)
                allowed = [c for l, c in sample.fourier.items() if l != 0 and sample.allowed(l)]
                self.assertTrue(all(np.isfinite(abs(c)) for c in allowed))
                self.assertLess(sample.metadata["overlap_radius"], CUBIC_GERM.radius_hint)

    def test_first_coefficient_refinement(self):
        """测试 ψ_0 的 |c_{-1}| 在加密网格与更严容差下相对变化小于 1e-4"""
        charts = normalize_charts(CUBIC_GERM).charts
        coarse = transition_samples(charts, 0, samples=64, fourier_range=1, tol=1e-11)
        fine = transition_samples(charts, 0, samples=256, fourier_range=1, tol=1e-12)
        reference = abs(fine.fourier[-1])
        self.assertGreater(reference, 0.0)
        self.assertLess(abs(abs(coarse.fourier[-1]) - reference) / reference, 1e-4)

    def test_gauge_covariance_recomputed(self):
        """测试源图实平移 0.37 后重新采样的系数与 shift_transition 一致"""
        charts = list(normalize_charts(CUBIC_GERM).charts)
        base = transition_samples(charts, 0, samples=64, fourier_range=2)
        charts[0] = replace(charts[0], norm_constant=charts[0].norm_constant + 0.37)
        recomputed = transition_samples(charts, 0, samples=64, fourier_range=2)
        expected = shift_transition(base, 0.37, 0.0)
        self.assertLess(abs(recomputed.c0 - expected.c0), 1e-8)
        for l in (-1, -2):
            with self.subTest(l=l):
                c = expected.fourier[l]
                self.assertLess(abs(recomputed.fourier[l] - c), 1e-8 * abs(c) + 1e-12)
                self.assertAlmostEqual(abs(recomputed.fourier[l]) / abs(base.fourier[l]), 1.0, places=8)


class TestIntegralCoordinates(unittest.TestCase):
    """测试首次积分坐标中的转移函数"""

    def test_exponential_conjugation(self):
        """测试 φ = E∘ψ∘E⁻¹ 与级数求值一致"""
        c0, c1 = 0.05 + 0.02j, 0.3 - 0.1j
        line, out = synthetic_sample(1, c0, {1: c1})
        psi = transition_from_samples(line, out, 1)
        phi = time_to_integral(psi, "zero")
        self.assertAlmostEqual(phi.multiplier, np.exp(TWO_PI_I * c0))
        np.testing.assert_allclose(integral_series_value(psi, phi.sigma_in), phi.sigma_out,
                                   rtol=1e-9)

    def test_branch_mismatch(self):
        """测试半平面方向与 σ 图不一致时报错"""
        line, out = synthetic_sample(0, 0.0, {-1: 0.01})
        psi = transition_from_samples(line, out, 0)
        with self.assertRaises(BranchMismatch):
            time_to_integral(psi, "zero")
        self.assertEqual(time_to_integral(psi, "infinity").chart, "infinity")

    def _circle_transition(self, poly, n=3):
        x = 0.1 * np.exp(2j * np.pi * np.arange(n) / n)
        return IntegralTransition(sigma_in=x, sigma_out=np.polynomial.polynomial.polyval(x, poly))

    def test_split_even(self):
        """测试偶数拆分恢复已知的 φ_l 与平移量"""
        x = 0.1 * np.exp(2j * np.pi * np.arange(5) / 5)
        phi_l = x + 0.2 * x ** 2 - 0.1 * x ** 3
        phi = IntegralTransition(sigma_in=x, sigma_out=phi_l + 0.3)
        first, second = split_composition(phi, "even")
        np.testing.assert_allclose(first.sigma_out, phi_l, atol=1e-12)
        np.testing.assert_allclose(second.sigma_out - second.sigma_in, np.full(5, 0.3), atol=1e-12)
        self.assertAlmostEqual(first.metadata["shift"][0], 0.3, places=12)

    def test_split_odd(self):
        """测试奇数拆分恢复已知的平移 φ_l(σ) = σ - r 与外层 g"""
        r = 0.02 - 0.01j
        g = np.polynomial.Polynomial([0.0, 1.1, 0.3, -0.05])
        x = 0.1 * np.exp(2j * np.pi * np.arange(4) / 4)
        phi = IntegralTransition(sigma_in=x, sigma_out=g(x - r))
        first, second = split_composition(phi, "odd")
        np.testing.assert_allclose(first.sigma_in - first.sigma_out, np.full(4, r), atol=1e-12)
        np.testing.assert_allclose(second.sigma_out, g(second.sigma_in), atol=1e-12)
        # 反向复合：由 g(u) = y 解出 u，再平移回 x
        u = newton_solve(g, g.deriv(), phi.sigma_out, phi.sigma_out / 1.1, tol=1e-14)
        np.testing.assert_allclose(u + r, x, atol=1e-12)

    def test_split_odd_not_univalent(self):
        """测试圆盘内有两个零点时报 NotUnivalent"""
        phi = self._circle_transition([-1e-4, 0.0, 1.0])
        with self.assertRaises(NotUnivalent):
            split_composition(phi, "odd")

    def test_unknown_parity(self):
        """测试未知奇偶性"""
        phi = self._circle_transition([0.0, 1.0])
        with self.assertRaises(ValidationError):
            split_composition(phi, "both")


if __name__ == "__main__":
    unittest.main()
