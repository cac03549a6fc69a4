"""
形式正规形

计算抛物芽的形式不变量 λ（芽与 v_λ 单位时间流的形式共轭）
以及鞍结点向量场的形式中心流形级数 q̂。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from config import NORMALIZATION_TOL
from tools.series_kernel import (
    TruncatedSeries,
    model_field_jet,
    series_compose,
    series_derivative,
    series_mul,
    series_sub,
    series_time1_flow,
)
from utils.complex_utils import densify_terms
from utils.performance import get_monitor
from utils.precision import cabs, to_double
from utils.validation import (
    OrderTooLow,
    SingularSolve,
    ValidationError,
    WrongNormalization,
    ensure_positive_int,
)

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class FormalInvariantResult:
    """形式不变量 λ 与规范化射流 h（h∘f∘h⁻¹ = v_λ 的单位时间流）"""

    k: int
    lam: complex
    conjugator: TruncatedSeries
    residual: float = 0.0

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "lambda": [self.lam.real, self.lam.imag],
            "conjugator": self.conjugator.to_json(),
            "residual": self.residual,
        }


def default_working_order(k: int) -> int:
    """λ 位于 2k+1 阶，多取三阶用于检验求解的稳定性"""
    return 2 * k + 4


def _check_parabolic_jet(f_jet: TruncatedSeries, k: int, tol: float) -> None:
    coeffs = to_double(f_jet.coeffs)
    if abs(coeffs[0]) > tol or abs(coeffs[1] - 1) > tol:
        raise WrongNormalization(f"芽必须满足 f(0)=0, f'(0)=1，得到 c0={coeffs[0]}, c1={coeffs[1]}")
    for m in range(2, k + 1):
        if abs(coeffs[m]) > tol:
            raise WrongNormalization(f"t^{m} 系数应为 0，得到 {coeffs[m]}")
    lead = coeffs[k + 1]
    if abs(lead - TWO_PI_I) > tol:
        raise WrongNormalization(f"t^{k + 1} 系数应为 2πi，得到 {lead}")


def formal_invariant(f_jet: TruncatedSeries, k: int,
                     normalization_tol: float = NORMALIZATION_TOL) -> FormalInvariantResult:
    """
    逐阶求解 h∘f = g_λ∘h，g_λ 为 v_λ(t) = 2πi t^{k+1}(1+λt^k)^{-1} 的单位时间流

    第 n 阶方程对 h_{n-k} 的系数为 2πi(n-2k-1)。n = 2k+1 时该系数为零，
    方程改为确定 λ；对应的 h_{k+1} 取 0 作为规范。

    Args:
        f_jet: 形如 t + 2πi t^{k+1}(1+O(t)) 的芽射流
        k: 抛物重数

    Returns:
        FormalInvariantResult

    Raises:
        OrderTooLow: 截断阶数 < 2k+1
        WrongNormalization: 不满足规范形式
    """
    k = ensure_positive_int(k, "k")
    order = f_jet.order
    if order < 2 * k + 1:
        raise OrderTooLow(f"截断阶数 {order} 低于 2k+1 = {2 * k + 1}")
    _check_parabolic_jet(f_jet, k, normalization_tol)

    h = TruncatedSeries.identity(order).coeffs.copy()
    lam = 0j
    g = series_time1_flow(model_field_jet(k, lam, order), order)
    for n in range(k + 2, order + 1):
        hs = TruncatedSeries(h, order)
        residual = series_sub(series_compose(hs, f_jet), series_compose(g, hs)).coeffs[n]
        if n == 2 * k + 1:
            lam = complex(-residual / TWO_PI_I)
            g = series_time1_flow(model_field_jet(k, lam, order), order)
        else:
            h[n - k] = -residual / (TWO_PI_I * (n - 2 * k - 1))

    conjugator = TruncatedSeries(h, order)
    check = formal_invariant_residual(f_jet, conjugator, k, lam)
    logger.info("形式不变量 k=%d λ=%s，共轭残差 %.3e (N=%d)", k, lam, check, order)
    get_monitor().record_stage("formal_invariant", residual=check, iterations=order, k=k)
    return FormalInvariantResult(k=k, lam=lam, conjugator=conjugator, residual=check)


def formal_invariant_residual(f_jet: TruncatedSeries, conjugator: TruncatedSeries,
                              k: int, lam: complex) -> float:
    """h∘f - g_λ∘h 的最大系数模"""
    order = f_jet.order
    g = series_time1_flow(model_field_jet(k, lam, order), order)
    diff = series_sub(series_compose(conjugator, f_jet), series_compose(g, conjugator))
    return float(np.max(cabs(diff.coeffs)))


# ---------------------------------------------------------------------------
# 形式中心流形
# ---------------------------------------------------------------------------

@dataclass
class FormalFieldSpec:
    """
    向量场 ẏ = By + O(|y|² + |t|^{k+1}), ṫ = t^{k+1} + O(|y|²) 的稠密射流

    y_jet 的形状为 (n-1, D+1, ..., D+1)，t_jet 的形状为 (D+1, ..., D+1)，
    各轴依次对应 y_1..y_{n-1} 与 t 的次数。y_jet 包含线性部分 By。
    """

    n: int
    k: int
    y_jet: np.ndarray
    t_jet: np.ndarray
    B: Optional[np.ndarray] = None

    def __post_init__(self):
        self.n = ensure_positive_int(self.n, "相空间维数 n", minimum=2)
        self.k = ensure_positive_int(self.k, "k")
        self.y_jet = np.asarray(self.y_jet, dtype=complex)
        self.t_jet = np.asarray(self.t_jet, dtype=complex)
        dim = self.n - 1
        if self.y_jet.ndim != self.n + 1 or self.y_jet.shape[0] != dim:
            raise ValidationError(f"y_jet 形状应为 ({dim}, D+1, ...)，得到 {self.y_jet.shape}")
        if self.t_jet.ndim != self.n:
            raise ValidationError(f"t_jet 维数应为 {self.n}，得到 {self.t_jet.ndim}")
        linear = np.zeros((dim, dim), dtype=complex)
        for j in range(dim):
            idx = [0] * self.n
            idx[j] = 1
            if all(s > e for s, e in zip(self.y_jet.shape[1:], idx)):
                linear[:, j] = self.y_jet[(slice(None),) + tuple(idx)]
        if self.B is None:
            self.B = linear
        else:
            self.B = np.asarray(self.B, dtype=complex).reshape(dim, dim)
            if not np.allclose(self.B, linear, atol=1e-14):
                raise ValidationError("B 与 y_jet 的线性部分不一致")
        if abs(np.linalg.det(self.B)) == 0:
            raise ValidationError("矩阵 B 退化")
        self._check_t_jet()

    def _check_t_jet(self) -> None:
        t_axis = self.t_jet[(0,) * (self.n - 1)]
        if len(t_axis) <= self.k + 1:
            raise ValidationError(f"t_jet 的次数不足以包含 t^{self.k + 1}")
        for m in range(len(t_axis)):
            expected = 1.0 if m == self.k + 1 else 0.0
            if m <= self.k + 1 and abs(t_axis[m] - expected) > 1e-14:
                raise ValidationError(f"t 分量应以 t^{self.k + 1} 开头，t^{m} 系数为 {t_axis[m]}")
        for j in range(self.n - 1):
            idx = [0] * self.n
            idx[j] = 1
            if all(s > e for s, e in zip(self.t_jet.shape, idx)):
                # y 的一次项只允许乘以 t 的高次幂
                sub = self.t_jet[tuple(idx[:-1]) + (slice(None),)]
                if np.any(np.abs(sub[: self.k + 1]) > 1e-14):
                    raise ValidationError("t 分量不能含有低阶的 y 线性项")

    @classmethod
    def from_terms(cls, n: int, k: int, y_terms: Sequence[Sequence[Dict[str, Any]]],
                   t_terms: Sequence[Dict[str, Any]], degree: int) -> "FormalFieldSpec":
        """由稀疏项构造，变量名为 y1..y{n-1} 与 t"""
        names = [f"y{i + 1}" for i in range(n - 1)] + ["t"]
        shape = (degree + 1,) * n
        y_jet = np.stack([densify_terms(terms, names, shape) for terms in y_terms])
        t_jet = densify_terms(t_terms, names, shape)
        return cls(n=n, k=k, y_jet=y_jet, t_jet=t_jet)


@dataclass(frozen=True)
class CentralManifoldSeries:
    """形式中心流形 y = q̂(t)，每个分量满足 c_0 = c_1 = 0"""

    component_series: List[TruncatedSeries] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)

    def to_json(self) -> List[Dict[str, Any]]:
        return [s.to_json() for s in self.component_series]


def _substitute(table: np.ndarray, qs: List[TruncatedSeries], order: int) -> TruncatedSeries:
    """计算 F(q(t), t)，table 各轴依次为 y_1..y_{n-1}, t"""
    powers: Dict[tuple, TruncatedSeries] = {}

    def power(i: int, e: int) -> TruncatedSeries:
        key = (i, e)
        if key not in powers:
            if e == 0:
                powers[key] = TruncatedSeries.from_coeffs([1], order)
            else:
                powers[key] = series_mul(power(i, e - 1), qs[i])
        return powers[key]

    out = TruncatedSeries.zero(order)
    for idx in np.argwhere(table != 0):
        idx = tuple(int(v) for v in idx)
        t_exp = idx[-1]
        if t_exp > order:
            continue
        term = TruncatedSeries.from_coeffs([0] * t_exp + [table[idx]], order)
        for i, e in enumerate(idx[:-1]):
            if e:
                term = series_mul(term, power(i, e))
        out = out + term
    return out


def central_manifold_defect(spec: FormalFieldSpec, qs: List[TruncatedSeries]) -> List[TruncatedSeries]:
    """不变性方程的亏量 q'(t)·T(q,t) - Y_i(q,t)，逐分量返回"""
    order = qs[0].order
    t_part = _substitute(spec.t_jet, qs, order)
    defects = []
    for i in range(spec.n - 1):
        lhs = series_mul(series_derivative(qs[i]), t_part)
        rhs = _substitute(spec.y_jet[i], qs, order)
        defects.append(series_sub(lhs, rhs))
    return defects


def formal_central_manifold(spec: FormalFieldSpec, order: int) -> CentralManifoldSeries:
    """
    逐阶求解 q̂'(t)·T(q̂, t) = Y(q̂, t)

    第 m 阶亏量关于 q_m 是仿射的（q_m 的二次项落在 2m 阶），
    因此用单位向量扰动构造的矩阵是精确的，主部为 -B。

    Raises:
        SingularSolve: 线性方程组奇异
    """
    order = ensure_positive_int(order, "阶数", minimum=2)
    dim = spec.n - 1
    coeffs = np.zeros((dim, order + 1), dtype=complex)

    def defect_at(m: int) -> np.ndarray:
        qs = [TruncatedSeries(coeffs[i], order) for i in range(dim)]
        return np.array([complex(d.coeffs[m]) for d in central_manifold_defect(spec, qs)])

    for m in range(2, order + 1):
        base = defect_at(m)
        jac = np.zeros((dim, dim), dtype=complex)
        for j in range(dim):
            coeffs[j, m] = 1.0
            jac[:, j] = defect_at(m) - base
            coeffs[j, m] = 0.0
        try:
            solution = np.linalg.solve(jac, -base)
        except np.linalg.LinAlgError as e:
            raise SingularSolve(f"第 {m} 阶线性方程组奇异: {e}")
        if not np.all(np.isfinite(solution)) or np.linalg.cond(jac) > 1e14:
            raise SingularSolve(f"第 {m} 阶线性方程组病态（cond={np.linalg.cond(jac):.3e}）")
        coeffs[:, m] = solution

    qs = [TruncatedSeries(coeffs[i], order) for i in range(dim)]
    residuals = [float(np.max(cabs(d.coeffs))) for d in central_manifold_defect(spec, qs)]
    logger.info("形式中心流形求解至 %d 阶，亏量 %s", order, residuals)
    return CentralManifoldSeries(component_series=qs, residuals=residuals)


def divergence_signature(series: TruncatedSeries) -> np.ndarray:
    """比值 |q_{m+1} / (m·q_m)|，m = 2..N-1；阶乘型发散时趋于常数"""
    c = to_double(series.coeffs)
    out = []
    for m in range(2, series.order):
        out.append(abs(c[m + 1] / (m * c[m])) if c[m] != 0 else np.nan)
    return np.asarray(out, dtype=float)


__all__ = [
    "FormalInvariantResult",
    "FormalFieldSpec",
    "CentralManifoldSeries",
    "default_working_order",
    "formal_invariant",
    "formal_invariant_residual",
    "formal_central_manifold",
    "central_manifold_defect",
    "divergence_signature",
]
