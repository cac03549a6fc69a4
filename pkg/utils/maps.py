"""
全纯映射对象

定义数值管线共用的一维全纯映射：多项式映射、有理映射和
按不动点分解的扰动族映射。每个映射提供求值、导数、牛顿反演以及
在不动点处的局部坐标表示，局部表示避免了 t - α 的相消误差。
"""

import logging
from typing import Any, Optional, Protocol, Sequence

import numpy as np

from config import NEWTON_MAX_STEPS, NEWTON_TOL
from tools.series_kernel import TruncatedSeries, series_divide, series_mul
from utils.complex_utils import newton_solve
from utils.precision import cabs
from utils.validation import NewtonFailed, ValidationError

logger = logging.getLogger(__name__)

P = np.polynomial.Polynomial


class ConformalMap(Protocol):
    """一维全纯映射接口"""

    def __call__(self, t: Any) -> Any: ...

    def derivative(self, t: Any) -> Any: ...

    def inverse(self, w: Any, seed: Any) -> Any: ...

    def local_map(self, alpha: complex, u: Any) -> Any: ...

    def local_series(self, alpha: complex, order: int) -> TruncatedSeries: ...


def _horner(coeffs: Sequence[Any], x: Any) -> Any:
    result = 0
    for c in coeffs[::-1]:
        result = result * x + c
    return result


class _NewtonInverse:
    """基于牛顿法的反演与局部反演"""

    def inverse(self, w: Any, seed: Any) -> Any:
        """求 f(t) = w，初值 seed"""
        return newton_solve(self, self.derivative, w, seed, tol=NEWTON_TOL,
                            max_steps=NEWTON_MAX_STEPS)

    def local_inverse(self, alpha: complex, v: Any, seed: Any, tol: float = NEWTON_TOL) -> Any:
        """在局部坐标中求 g(u) = v，g(u) = f(α+u) - α"""
        x = np.array(seed, copy=True)
        v = np.asarray(v)
        for _ in range(NEWTON_MAX_STEPS):
            step = (self.local_map(alpha, x) - v) / self.derivative(alpha + x)
            size = cabs(step)
            if not np.all(np.isfinite(size)):
                raise NewtonFailed("局部牛顿反演出现非有限值")
            x = x - step
            if np.all(size <= tol * np.maximum(cabs(x), 1e-300)):
                return x
        raise NewtonFailed(f"局部牛顿反演 {NEWTON_MAX_STEPS} 步内未收敛")


class PolynomialMap(_NewtonInverse):
    """多项式映射 f(t) = Σ c_m t^m"""

    kind = "polynomial"

    def __init__(self, coeffs: Sequence[complex]):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim != 1 or len(self.coeffs) < 2:
            raise ValidationError("多项式映射至少需要两个系数")
        self._poly = P(self.coeffs)
        self._dpoly = self._poly.deriv()
        self._shift_cache = {}

    def __call__(self, t: Any) -> Any:
        return _horner(self.coeffs, t)

    def derivative(self, t: Any) -> Any:
        return _horner(self._dpoly.coef, t)

    def _shifted(self, alpha: complex) -> np.ndarray:
        key = complex(alpha)
        if key in self._shift_cache:
            return self._shift_cache[key].copy()
        shifted = self._poly(P([alpha, 1.0]))
        coef = np.zeros(len(self.coeffs), dtype=complex)
        coef[: len(shifted.coef)] = shifted.coef
        self._shift_cache[key] = coef
        return coef.copy()

    def local_map(self, alpha: complex, u: Any) -> Any:
        coef = self._shifted(alpha)
        # 常数项 f(α) = α 与 -α 相消
        coef[0] = 0.0
        return _horner(coef, u)

    def local_series(self, alpha: complex, order: int) -> TruncatedSeries:
        coef = self._shifted(alpha)
        coef[0] = 0.0
        return TruncatedSeries.from_coeffs(coef[: order + 1], order)

    def to_json(self) -> dict:
        return {"kind": self.kind, "coeffs": [[c.real, c.imag] for c in self.coeffs]}


class RationalMap(_NewtonInverse):
    """有理映射 f(t) = N(t)/D(t)"""

    kind = "rational"

    def __init__(self, numerator: Sequence[complex], denominator: Sequence[complex]):
        self.num = np.asarray(numerator, dtype=complex)
        self.den = np.asarray(denominator, dtype=complex)
        if len(self.den) == 0 or not np.any(self.den):
            raise ValidationError("有理映射的分母不能为零")
        self._dnum = P(self.num).deriv().coef
        self._dden = P(self.den).deriv().coef
        self._local_cache = {}

    def __call__(self, t: Any) -> Any:
        return _horner(self.num, t) / _horner(self.den, t)

    def derivative(self, t: Any) -> Any:
        n, d = _horner(self.num, t), _horner(self.den, t)
        dn, dd = _horner(self._dnum, t), _horner(self._dden, t)
        return (dn * d - n * dd) / (d * d)

    def _local_coeffs(self, alpha: complex):
        # f(α+u) - α = (N(α+u) - α D(α+u)) / D(α+u)，分子在 u=0 处为零
        key = complex(alpha)
        if key not in self._local_cache:
            top = self._shift(P(self.num) - alpha * P(self.den), alpha)
            top[0] = 0.0
            self._local_cache[key] = (top, self._shift(P(self.den), alpha))
        return self._local_cache[key]

    def local_map(self, alpha: complex, u: Any) -> Any:
        top, bottom = self._local_coeffs(alpha)
        return _horner(top, u) / _horner(bottom, u)

    @staticmethod
    def _shift(poly: "P", alpha: complex) -> np.ndarray:
        return np.asarray(poly(P([alpha, 1.0])).coef, dtype=complex)

    def local_series(self, alpha: complex, order: int) -> TruncatedSeries:
        top, bottom = self._local_coeffs(alpha)
        ts = TruncatedSeries.from_coeffs(top[: order + 1], order)
        bs = TruncatedSeries.from_coeffs(bottom[: order + 1], order)
        return series_divide(ts, bs)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "numerator": [[c.real, c.imag] for c in self.num],
            "denominator": [[c.real, c.imag] for c in self.den],
        }


class FactoredMap(_NewtonInverse):
    """
    按不动点分解的映射 f(t) = t + 2πi·(N(t)/D(t))·∏(t - α_s)

    N/D 即修正因子 1 + q(t, ε)，D ≡ 1 时为多项式修正。
    局部映射直接用分解形式求值，保持 u → 0 时的相对精度。
    """

    kind = "factored"

    def __init__(self, roots: Sequence[complex], numerator: Sequence[complex],
                 denominator: Optional[Sequence[complex]] = None):
        self.roots = np.asarray(roots, dtype=complex)
        self.num = np.asarray(numerator, dtype=complex)
        self.den = np.asarray([1.0] if denominator is None else denominator, dtype=complex)
        self._p = P.fromroots(self.roots)
        self._dp = self._p.deriv()
        self._dnum = P(self.num).deriv().coef
        self._dden = P(self.den).deriv().coef

    def correction(self, t: Any) -> Any:
        return _horner(self.num, t) / _horner(self.den, t)

    def correction_derivative(self, t: Any) -> Any:
        n, d = _horner(self.num, t), _horner(self.den, t)
        dn, dd = _horner(self._dnum, t), _horner(self._dden, t)
        return (dn * d - n * dd) / (d * d)

    def product(self, t: Any) -> Any:
        out = 1
        for a in self.roots:
            out = out * (t - a)
        return out

    def product_derivative(self, t: Any) -> Any:
        return _horner(self._dp.coef, t)

    def __call__(self, t: Any) -> Any:
        return t + 2j * np.pi * self.correction(t) * self.product(t)

    def derivative(self, t: Any) -> Any:
        return 1 + 2j * np.pi * (
            self.correction_derivative(t) * self.product(t)
            + self.correction(t) * self.product_derivative(t)
        )

    def local_map(self, alpha: complex, u: Any) -> Any:
        """g(u) = f(α+u) - α，α 必须是 roots 之一"""
        idx = int(np.argmin(np.abs(self.roots - alpha)))
        out = 2j * np.pi * self.correction(alpha + u) * u
        for s, a in enumerate(self.roots):
            if s != idx:
                out = out * (self.roots[idx] - a + u)
        return u + out

    def local_series(self, alpha: complex, order: int) -> TruncatedSeries:
        idx = int(np.argmin(np.abs(self.roots - alpha)))
        base = self.roots[idx]
        num = TruncatedSeries.from_coeffs(
            np.asarray(P(self.num)(P([base, 1.0])).coef)[: order + 1], order)
        den = TruncatedSeries.from_coeffs(
            np.asarray(P(self.den)(P([base, 1.0])).coef)[: order + 1], order)
        prod = TruncatedSeries.from_coeffs([0, 2j * np.pi], order)
        for s, a in enumerate(self.roots):
            if s != idx:
                prod = series_mul(prod, TruncatedSeries.from_coeffs([base - a, 1.0], order))
        g = series_mul(series_divide(num, den), prod)
        return g + TruncatedSeries.identity(order)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "roots": [[c.real, c.imag] for c in self.roots],
            "numerator": [[c.real, c.imag] for c in self.num],
            "denominator": [[c.real, c.imag] for c in self.den],
        }


__all__ = ["ConformalMap", "PolynomialMap", "RationalMap", "FactoredMap"]
