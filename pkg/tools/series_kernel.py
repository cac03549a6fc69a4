"""
截断幂级数内核

为形式正规形与中心流形计算提供复系数截断幂级数运算：
复合、反演、单位时间流（Lie 级数）以及基本算术。

所有运算都要求显式的截断阶数，阶数不一致时抛出 BadOrder，
不做隐式截断或提升。
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from utils.precision import cabs, to_double, working_array, zeros
from utils.validation import (
    BadOrder,
    InnerNotGerm,
    NotInvertible,
    ValidationError,
    ensure_order,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncatedSeries:
    """截断阶数为 order 的复幂级数 c_0 + c_1 t + ... + c_N t^N"""

    coeffs: np.ndarray
    order: int

    def __post_init__(self):
        ensure_order(self.order)
        coeffs = np.array(working_array(self.coeffs), copy=True)
        if coeffs.ndim != 1 or len(coeffs) != self.order + 1:
            raise ValidationError(
                f"系数个数 {len(coeffs)} 与截断阶数 {self.order} 不符（应为 N+1）"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Any], order: int) -> "TruncatedSeries":
        """由前若干个系数构造，缺失的高阶系数补零"""
        values = list(coeffs)
        if len(values) > order + 1:
            raise BadOrder(f"给出 {len(values)} 个系数，超过截断阶数 {order}")
        out = zeros(order + 1)
        for i, value in enumerate(values):
            out[i] = value
        return cls(out, order)

    @classmethod
    def identity(cls, order: int) -> "TruncatedSeries":
        return cls.from_coeffs([0, 1], order)

    @classmethod
    def zero(cls, order: int) -> "TruncatedSeries":
        return cls.from_coeffs([], order)

    def __getitem__(self, index: int):
        return self.coeffs[index]

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return series_add(self, other)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return series_sub(self, other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "TruncatedSeries":
        return series_scale(self, -1)

    def valuation(self) -> int:
        """最低非零项的次数，零级数返回 order+1"""
        nonzero = np.nonzero(cabs(self.coeffs) > 0)[0]
        return int(nonzero[0]) if len(nonzero) else self.order + 1

    def is_germ(self) -> bool:
        """是否为固定 0 的芽（c_0 = 0）"""
        return self.coeffs[0] == 0

    def is_invertible_germ(self) -> bool:
        return self.is_germ() and self.coeffs[1] != 0

    def max_abs_diff(self, other: "TruncatedSeries") -> float:
        _check_orders(self, other)
        return float(np.max(cabs(self.coeffs - other.coeffs)))

    def to_json(self) -> Dict[str, Any]:
        values = to_double(self.coeffs)
        return {
            "order": self.order,
            "coeffs": [[float(c.real), float(c.imag)] for c in values],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "TruncatedSeries":
        try:
            order = int(data["order"])
            coeffs = [complex(re, im) for re, im in data["coeffs"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"无效的级数 JSON: {e}")
        return cls(np.asarray(coeffs, dtype=complex), order)


def _check_orders(a: TruncatedSeries, b: TruncatedSeries) -> int:
    if a.order != b.order:
        raise BadOrder(f"截断阶数不一致: {a.order} != {b.order}")
    return a.order


def _truncated_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    out = zeros(order + 1)
    for i in range(order + 1):
        if a[i] != 0:
            out[i:] = out[i:] + a[i] * b[: order + 1 - i]
    return out


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    order = _check_orders(a, b)
    return TruncatedSeries(a.coeffs + b.coeffs, order)


def series_sub(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    order = _check_orders(a, b)
    return TruncatedSeries(a.coeffs - b.coeffs, order)


def series_scale(a: TruncatedSeries, factor: Any) -> TruncatedSeries:
    return TruncatedSeries(a.coeffs * factor, a.order)


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    order = _check_orders(a, b)
    return TruncatedSeries(_truncated_product(a.coeffs, b.coeffs, order), order)


def series_derivative(a: TruncatedSeries) -> TruncatedSeries:
    """导数；第 N 阶系数未知，置零"""
    out = zeros(a.order + 1)
    n = np.arange(1, a.order + 1)
    out[: a.order] = a.coeffs[1:] * n
    return TruncatedSeries(out, a.order)


def series_reciprocal(a: TruncatedSeries) -> TruncatedSeries:
    """1/a，要求 c_0 ≠ 0"""
    c0 = a.coeffs[0]
    if c0 == 0:
        raise NotInvertible("常数项为零，级数不可求倒数")
    out = zeros(a.order + 1)
    out[0] = 1 / c0
    for n in range(1, a.order + 1):
        acc = 0
        for i in range(1, n + 1):
            acc = acc + a.coeffs[i] * out[n - i]
        out[n] = -acc / c0
    return TruncatedSeries(out, a.order)


def series_divide(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return series_mul(a, series_reciprocal(b))


def series_truncate(a: TruncatedSeries, order: int) -> TruncatedSeries:
    """显式降低截断阶数"""
    if order > a.order:
        raise BadOrder(f"不能把阶数 {a.order} 提升到 {order}")
    return TruncatedSeries(a.coeffs[: order + 1].copy(), order)


def series_evaluate(a: TruncatedSeries, t: Any) -> Any:
    """Horner 求值，支持数组输入"""
    result = 0
    for c in a.coeffs[::-1]:
        result = result * t + c
    return result


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """
    计算 outer∘inner 直到截断阶数

    Raises:
        InnerNotGerm: inner 的常数项非零
        BadOrder: 阶数不一致
    """
    order = _check_orders(outer, inner)
    if inner.coeffs[0] != 0:
        raise InnerNotGerm(f"内层级数常数项非零: {complex(inner.coeffs[0])}")
    result = zeros(order + 1)
    result[0] = outer.coeffs[order]
    for m in range(order - 1, -1, -1):
        result = _truncated_product(result, inner.coeffs, order)
        result[0] = result[0] + outer.coeffs[m]
    return TruncatedSeries(result, order)


def series_reverse(s: TruncatedSeries) -> TruncatedSeries:
    """
    求复合逆 r，使 s∘r = id

    Raises:
        InnerNotGerm: 常数项非零
        NotInvertible: 一次项为零
    """
    if s.coeffs[0] != 0:
        raise InnerNotGerm("只有固定 0 的芽才能反演")
    c1 = s.coeffs[1]
    if c1 == 0:
        raise NotInvertible("一次项为零，级数不可反演")
    order = s.order
    r = zeros(order + 1)
    r[1] = 1 / c1
    for n in range(2, order + 1):
        composed = series_compose(s, TruncatedSeries(r, order))
        # 第 n 阶系数对 r_n 的依赖为 c1·r_n
        r[n] = r[n] - composed.coeffs[n] / c1
    return TruncatedSeries(r, order)


def series_time1_flow(field: TruncatedSeries, N: int) -> TruncatedSeries:
    """
    一维向量场 ṫ = field(t) 的单位时间流映射的 N 阶射流

    使用 Lie 级数 Σ L^m(id)/m!，L(h) = field·h'。field 的最低阶 ≥ 2，
    每次作用 L 使最低阶至少升高 1，因此至多 N 项后精确。

    Raises:
        BadOrder: field 的最低阶 < 2 或阶数与 N 不一致
    """
    ensure_order(N)
    if field.order != N:
        raise BadOrder(f"向量场截断阶数 {field.order} 与 N={N} 不一致")
    if field.coeffs[0] != 0 or field.coeffs[1] != 0:
        raise BadOrder("向量场的最低阶必须 >= 2")
    term = TruncatedSeries.identity(N)
    result = term
    m = 0
    while True:
        m += 1
        term = series_scale(series_mul(field, series_derivative(term)), 1.0 / m)
        if not np.any(cabs(term.coeffs) > 0):
            break
        result = series_add(result, term)
        if m > N:
            break
    logger.debug("Lie 级数在第 %d 项截止 (N=%d)", m, N)
    return result


def model_field_jet(k: int, lam: complex, N: int) -> TruncatedSeries:
    """v_λ(t) = 2πi t^{k+1}(1+λt^k)^{-1} 的 N 阶射流"""
    ensure_order(k)
    coeffs = [0j] * (N + 1)
    # (1+λt^k)^{-1} = Σ (-λ)^m t^{km}
    m = 0
    while (k + 1) + k * m <= N:
        coeffs[(k + 1) + k * m] = 2j * np.pi * (-lam) ** m
        m += 1
    return TruncatedSeries.from_coeffs(coeffs, N)


__all__ = [
    "TruncatedSeries",
    "series_add",
    "series_sub",
    "series_scale",
    "series_mul",
    "series_derivative",
    "series_reciprocal",
    "series_divide",
    "series_truncate",
    "series_evaluate",
    "series_compose",
    "series_reverse",
    "series_time1_flow",
    "model_field_jet",
]
