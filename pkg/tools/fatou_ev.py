"""
未扰动抛物芽：扇形复时间（Fatou 坐标）、图的规范化、Ecalle–Voronin 转移函数
及其傅里叶系数、复合拆分，以及时间坐标到首次积分坐标的转换。
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    FATOU_TOL,
    FOURIER_DEPTH,
    FOURIER_RANGE,
    FOURIER_SAMPLES,
    ITERATION_CAP,
    NEWTON_MAX_STEPS,
    NORMALIZATION_TOL,
)
from tools.formal_normalform import formal_invariant
from tools.sector_geometry import Sector, imaginary_dividing_rays
from tools.series_kernel import TruncatedSeries, series_divide
from utils.complex_utils import TWO_PI, complex_to_pair, newton_solve
from utils.maps import PolynomialMap, RationalMap
from utils.performance import get_monitor
from utils.precision import to_double
from utils.validation import (
    BranchMismatch,
    NewtonFailed,
    NotConverged,
    NotUnivalent,
    OriginPole,
    OutsideDomain,
    ValidationError,
    WrongNormalization,
    ensure_in_range,
    ensure_positive_int,
)

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# 芽与模型时间
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GermSpec:
    """
    芽 f(t) = t + 2πi t^{k+1}(1+O(t))，多项式或有理形式

    coefficients 为分子的升幂系数；有理形式另给 denominator。
    """

    k: int
    kind: str
    coefficients: Tuple[complex, ...]
    denominator: Tuple[complex, ...] = (1.0,)
    radius_hint: float = 0.15

    def __post_init__(self):
        ensure_positive_int(self.k, "k")
        if self.kind not in ("polynomial", "rational"):
            raise ValidationError(f"未知的芽类型: {self.kind}")
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))
        object.__setattr__(self, "denominator", tuple(complex(c) for c in self.denominator))
        if self.kind == "polynomial" and any(self.denominator[1:]):
            raise ValidationError("多项式芽不能带非平凡分母")
        if not self.radius_hint > 0:
            raise ValidationError("radius_hint 必须为正")
        if self.kind == "rational" and abs(self.denominator[0]) == 0:
            raise ValidationError("有理芽的分母在 t = 0 处不能为零")
        jet = to_double(self.jet(self.k + 1).coeffs)
        if abs(jet[0]) > NORMALIZATION_TOL or abs(jet[1] - 1) > NORMALIZATION_TOL:
            raise WrongNormalization("芽必须满足 f(0)=0, f'(0)=1")
        if np.any(np.abs(jet[2: self.k + 1]) > NORMALIZATION_TOL) or \
                abs(jet[self.k + 1] - TWO_PI_I) > NORMALIZATION_TOL:
            raise WrongNormalization(f"t^{self.k + 1} 系数必须为 2πi")

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex], k: int = 1,
                   radius_hint: float = 0.15) -> "GermSpec":
        return cls(k=k, kind="polynomial", coefficients=tuple(coeffs), radius_hint=radius_hint)

    @classmethod
    def moebius(cls, radius_hint: float = 1.0) -> "GermSpec":
        """f(t) = t/(1-2πit)，v_0 的精确单位时间流"""
        return cls(k=1, kind="rational", coefficients=(0.0, 1.0),
                   denominator=(1.0, -TWO_PI_I), radius_hint=radius_hint)

    def to_map(self):
        if self.kind == "polynomial":
            return PolynomialMap(self.coefficients)
        return RationalMap(self.coefficients, self.denominator)

    def jet(self, order: int) -> TruncatedSeries:
        num = TruncatedSeries.from_coeffs(self.coefficients[: order + 1], order)
        if self.kind == "polynomial":
            return num
        den = TruncatedSeries.from_coeffs(self.denominator[: order + 1], order)
        return series_divide(num, den)

    def to_json(self) -> Dict[str, Any]:
        out = {
            "k": self.k,
            "kind": self.kind,
            "coefficients": [complex_to_pair(c) for c in self.coefficients],
            "radius_hint": self.radius_hint,
        }
        if self.kind == "rational":
            out["denominator"] = [complex_to_pair(c) for c in self.denominator]
        return out


def log_branch(z: Any, anchor_arg: Any) -> Any:
    """对数分支，虚部取离 anchor_arg 最近的 arg z + 2πm"""
    z = np.asarray(z, dtype=complex)
    arg = np.angle(z)
    turns = np.round((anchor_arg - arg) / TWO_PI)
    return np.log(np.abs(z)) + 1j * (arg + TWO_PI * turns)


def model_time(k: int, lam: complex, t: Any, branch_base: Optional[complex] = None,
               anchor_arg: Optional[float] = None) -> Any:
    """
    T_λ(t) = -1/(2πi k t^k) + (λ/2πi)·log t，即 1/v_λ 的原函数

    Args:
        k: 抛物重数
        lam: 形式不变量
        t: 标量或数组
        branch_base: 对数分支从该点延拓
        anchor_arg: 直接给出分支的参考辐角（可超出 (-π, π]）

    Raises:
        OriginPole: t = 0
    """
    arr = np.asarray(t, dtype=complex)
    if np.any(arr == 0):
        raise OriginPole("模型时间在 t = 0 处有极点")
    if anchor_arg is None:
        anchor_arg = np.angle(branch_base) if branch_base is not None else np.angle(arr)
    value = -1.0 / (TWO_PI_I * k * arr ** k) + (lam / TWO_PI_I) * log_branch(arr, anchor_arg)
    return value if value.ndim else complex(value)


def model_time_derivative(k: int, lam: complex, t: Any) -> Any:
    """dT/dt = (1+λt^k)/(2πi t^{k+1})"""
    t = np.asarray(t, dtype=complex)
    return (1 + lam * t ** k) / (TWO_PI_I * t ** (k + 1))


# ---------------------------------------------------------------------------
# Fatou 坐标
# ---------------------------------------------------------------------------

def petal_mode(j: int) -> str:
    """偶数序号射线为吸引花瓣，奇数为排斥花瓣"""
    return "attracting" if j % 2 == 0 else "repelling"


@dataclass(frozen=True)
class FatouChart:
    """第 j 个扇形上的复时间 τ_j"""

    germ: GermSpec
    j: int
    sector: Sector
    norm_constant: complex
    mode: str
    lam: complex
    conjugator: TruncatedSeries
    anchor: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "j": self.j,
            "mode": self.mode,
            "norm_constant": complex_to_pair(self.norm_constant),
            "sector": self.sector.to_json(),
        }


@dataclass
class FatouEvaluation:
    values: np.ndarray
    derivatives: Optional[np.ndarray]
    iterations: int


def conjugator_order(k: int) -> int:
    """Fatou 极限使用的形式共轭阶数；误差项按 n^{-(N-2k)/k} 衰减"""
    return 6 * k + 1


def make_chart(germ: GermSpec, j: int, lam: complex, conjugator: TruncatedSeries,
               norm_constant: complex = 0j) -> FatouChart:
    """构造第 j 个图，并在射线上验证吸引/排斥方向"""
    k = germ.k
    rays = imaginary_dividing_rays(k)
    if not 0 <= j < 2 * k:
        raise ValidationError(f"扇形序号 j 必须在 0..{2 * k - 1} 内: {j}")
    mode = petal_mode(j)
    on_ray = 0.1 * germ.radius_hint * np.exp(1j * rays[j])
    shrinking = abs(germ.to_map()(on_ray)) < abs(on_ray)
    if shrinking != (mode == "attracting"):
        raise ValidationError(f"射线 {j} 上的动力学方向与 {mode} 约定不符")
    sector = Sector(rays[j], 1.5 * np.pi / k, germ.radius_hint, metadata={"ray": j})
    return FatouChart(germ=germ, j=j, sector=sector, norm_constant=complex(norm_constant),
                      mode=mode, lam=complex(lam), conjugator=conjugator,
                      anchor=float(rays[j]))


def _formal_time(chart: FatouChart, s: np.ndarray, anchor: float,
                 with_derivative: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """T_λ(ĥ(s)) 及其对 s 的导数"""
    coeffs = to_double(chart.conjugator.coeffs)
    h = np.polynomial.polynomial.polyval(s, coeffs)
    value = model_time(chart.germ.k, chart.lam, h, anchor_arg=anchor)
    if not with_derivative:
        return np.asarray(value), None
    dh = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(coeffs))
    return np.asarray(value), model_time_derivative(chart.germ.k, chart.lam, h) * dh


def fatou_coordinates(chart: FatouChart, t: Any, with_derivative: bool = False,
                      branch_turns: int = 0, tol: float = FATOU_TOL,
                      cap: int = ITERATION_CAP, check_domain: bool = True) -> FatouEvaluation:
    """
    向量化的 Fatou 坐标 τ(t) = lim [T_λ(ĥ(f^{±n}(t))) ∓ n] + C

    当 n·|Δ_n| < tol/10 时停止（多项式收敛的尾项估计）。

    Raises:
        OutsideDomain: t 不在图的扇形内
        NotConverged: 轨道逃出 |t| < radius_hint 或超过迭代上限
    """
    arr = np.atleast_1d(np.asarray(t, dtype=complex))
    if check_domain and not np.all(chart.sector.contains(arr)):
        raise OutsideDomain(f"点不在第 {chart.j} 个扇形内")
    fmap = chart.germ.to_map()
    k = chart.germ.k
    anchor = chart.anchor + TWO_PI * branch_turns
    attracting = chart.mode == "attracting"
    sign = -1.0 if attracting else 1.0

    orbit = arr.copy()
    dorbit = np.ones_like(arr)
    est, dest = _formal_time(chart, orbit, anchor, with_derivative)
    values = est.copy()
    derivs = dest.copy() if with_derivative else None
    active = np.ones(arr.shape, dtype=bool)
    n = 0
    while np.any(active):
        n += 1
        if n > cap:
            raise NotConverged(f"Fatou 坐标在 {cap} 次迭代内未收敛")
        cur = orbit[active]
        if attracting:
            nxt = fmap(cur)
            if with_derivative:
                dorbit[active] = dorbit[active] * fmap.derivative(cur)
        else:
            nxt = fmap.inverse(cur, seed=cur - TWO_PI_I * cur ** (k + 1))
            if with_derivative:
                dorbit[active] = dorbit[active] / fmap.derivative(nxt)
        if np.any(np.abs(nxt) > chart.germ.radius_hint) or not np.all(np.isfinite(nxt)):
            raise NotConverged(f"第 {chart.j} 个图的轨道逃出花瓣")
        orbit[active] = nxt
        new_est, new_dest = _formal_time(chart, nxt, anchor, with_derivative)
        new_est = new_est + sign * n
        diff = np.abs(new_est - values[active])
        values[active] = new_est
        if with_derivative:
            derivs[active] = new_dest * dorbit[active]
        done = n * diff < tol / 10
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    values = values + chart.norm_constant
    logger.debug("图 %d 的 Fatou 坐标在 %d 次迭代后收敛", chart.j, n)
    return FatouEvaluation(values=values, derivatives=derivs, iterations=n)


def fatou_coordinate(chart: FatouChart, t: Any, tol: float = FATOU_TOL,
                     cap: int = ITERATION_CAP) -> Any:
    """τ_j(t)，标量输入返回标量"""
    out = fatou_coordinates(chart, t, tol=tol, cap=cap).values
    return complex(out[0]) if np.ndim(t) == 0 else out


def abel_residual(chart: FatouChart, t: Any, tol: float = FATOU_TOL) -> np.ndarray:
    """|τ(f(t)) - τ(t) - 1|，只在 f(t) 仍在扇形内的点上计算"""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    ft = chart.germ.to_map()(t)
    keep = chart.sector.contains(ft)
    res = np.full(t.shape, np.nan)
    if np.any(keep):
        a = fatou_coordinates(chart, t[keep], tol=tol).values
        b = fatou_coordinates(chart, ft[keep], tol=tol).values
        res[keep] = np.abs(b - a - 1)
    return res


def invert_chart(chart: FatouChart, w: Any, tol: float = FATOU_TOL,
                 deep_steps: int = 256, branch_turns: int = 0) -> np.ndarray:
    """
    求 τ_j(t) = w

    先在轨道深处（w ± n）反解 T_λ∘ĥ，再用 f^{∓n} 拉回，最后以完整
    Fatou 坐标做牛顿修正。

    Raises:
        NewtonFailed: 反演发散
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex)) - chart.norm_constant
    k = chart.germ.k
    fmap = chart.germ.to_map()
    attracting = chart.mode == "attracting"
    anchor = chart.anchor + TWO_PI * branch_turns
    deep = w + deep_steps if attracting else w - deep_steps

    # 主项 t^k = i/(2πkW)，取最接近射线 r_j 的根
    base = (1j / (TWO_PI * k * deep)) ** (1.0 / k)
    roots = base[:, None] * np.exp(2j * np.pi * np.arange(k) / k)[None, :]
    pick = np.argmin(np.abs(np.angle(roots * np.exp(-1j * chart.anchor))), axis=1)
    seed = roots[np.arange(len(deep)), pick]

    def ft(s):
        return _formal_time(chart, s, anchor, False)[0]

    def dft(s):
        return _formal_time(chart, s, anchor, True)[1]

    s = newton_solve(ft, dft, deep, seed, tol=1e-14)
    for _ in range(deep_steps):
        if attracting:
            s = fmap.inverse(s, seed=s - TWO_PI_I * s ** (k + 1))
        else:
            s = fmap(s)
    target = w + chart.norm_constant
    for _ in range(NEWTON_MAX_STEPS):
        ev = fatou_coordinates(chart, s, with_derivative=True, tol=tol,
                               branch_turns=branch_turns, check_domain=False)
        err = ev.values - target
        s = s - err / ev.derivatives
        # 达到容差后仍做完这一步，傅里叶高阶模会放大反演误差
        if np.all(np.abs(err) < 10 * tol):
            if not np.all(chart.sector.contains(s)):
                raise OutsideDomain(f"反演点落在第 {chart.j} 个扇形之外")
            return s
    raise NewtonFailed(f"第 {chart.j} 个图的牛顿反演未收敛")


# ---------------------------------------------------------------------------
# 规范化
# ---------------------------------------------------------------------------

@dataclass
class NormalizedCharts:
    charts: List[FatouChart]
    offsets: List[complex]
    stability: List[float]
    closure: complex
    wrap_difference: complex = 0j

    def to_json(self) -> Dict[str, Any]:
        return {
            "charts": [c.to_json() for c in self.charts],
            "offsets": [complex_to_pair(o) for o in self.offsets],
            "stability": list(self.stability),
            "closure_error": abs(self.closure),
            "wrap_difference": complex_to_pair(self.wrap_difference),
        }


def _overlap_difference(a: FatouChart, b: FatouChart, arg: float, radii: Sequence[float],
                        turns_a: int = 0, turns_b: int = 0) -> np.ndarray:
    t = np.asarray(radii) * np.exp(1j * arg)
    va = fatou_coordinates(a, t, branch_turns=turns_a, check_domain=False).values
    vb = fatou_coordinates(b, t, branch_turns=turns_b, check_domain=False).values
    return va - vb


def normalize_charts(germ: GermSpec, levels: int = 5) -> NormalizedCharts:
    """
    规范化 2k 个图，使相邻图在公共中射线上 τ_j - τ_{j+1} → 0

    τ_j - τ_{j+1} 在 t → 0 时以指数速度趋于常数，取半径逐次减半的最后
    一个值作为极限，相邻两级之差作为稳定性指标。0 号图的常数固定为 0，
    闭合检验比较 τ_0 与 τ_{2k-1} 在辐角 2π 处的差 wrap_difference 与 -λ。
    """
    k = germ.k
    formal = formal_invariant(germ.jet(conjugator_order(k)), k)
    raw = [make_chart(germ, j, formal.lam, formal.conjugator) for j in range(2 * k)]
    radii = germ.radius_hint / 4 * 0.5 ** np.arange(levels)

    offsets, stability = [], []
    constants = [0j]
    for j in range(2 * k - 1):
        mid = np.pi * (j + 1) / k
        d = _overlap_difference(raw[j], raw[j + 1], mid, radii)
        offsets.append(complex(d[-1]))
        stability.append(float(abs(d[-1] - d[-2])))
        constants.append(constants[-1] + d[-1])
    charts = [replace(c, norm_constant=complex(constants[c.j])) for c in raw]
    wrap = _overlap_difference(charts[2 * k - 1], charts[0], TWO_PI, radii, turns_a=0, turns_b=0)
    # τ_0 以 r_0 为参考辐角，在辐角 2π 处取主值分支
    closure = complex(-wrap[-1] + formal.lam)
    logger.info("规范化完成: 偏移 %s，闭合误差 %.3e", offsets, abs(closure))
    return NormalizedCharts(charts=charts, offsets=offsets, stability=stability, closure=closure,
                            wrap_difference=complex(-wrap[-1]))


# ---------------------------------------------------------------------------
# 转移函数与傅里叶系数
# ---------------------------------------------------------------------------

@dataclass
class TransitionSample:
    """水平线上采样的转移函数 ψ 及其傅里叶系数"""

    tau_in: np.ndarray
    tau_out: np.ndarray
    half_plane_sign: int
    fourier: Dict[int, complex]
    c0: complex
    noise_floor: float = 0.0
    periodicity_defect: float = 0.0
    j: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def allowed(self, l: int) -> bool:
        """奇偶性允许的一侧：half_plane_sign·l < 0"""
        return self.half_plane_sign * l < 0

    def evaluate(self, tau: Any) -> Any:
        tau = np.asarray(tau, dtype=complex)
        out = tau + self.c0
        for l, c in self.fourier.items():
            if l != 0 and self.allowed(l):
                out = out + c * np.exp(TWO_PI_I * l * tau)
        return out

    def to_json(self) -> Dict[str, Any]:
        return {
            "j": self.j,
            "half_plane_sign": self.half_plane_sign,
            "c0": complex_to_pair(self.c0),
            "fourier": [{"l": l, "c": complex_to_pair(c)} for l, c in sorted(self.fourier.items())],
            "noise_floor": self.noise_floor,
            "periodicity_defect": self.periodicity_defect,
            "metadata": dict(self.metadata),
        }


def fourier_coefficients(tau_in: np.ndarray, tau_out: np.ndarray,
                         fourier_range: int = FOURIER_RANGE) -> Dict[int, complex]:
    """
    由水平线 τ = x + i·y0（x 等距，步长 1/M）上的样本计算
    c_l = ∫_0^1 (ψ(τ)-τ) e^{-2πilτ} dx

    Returns:
        {l: c_l}，|l| <= fourier_range
    """
    tau_in = np.asarray(tau_in, dtype=complex)
    g = np.asarray(tau_out, dtype=complex) - tau_in
    m = len(g)
    x0, y0 = tau_in[0].real, tau_in[0].imag
    spectrum = np.fft.fft(g) / m
    out = {}
    for l in range(-fourier_range, fourier_range + 1):
        out[l] = complex(spectrum[l % m] * np.exp(TWO_PI * l * y0) * np.exp(-TWO_PI_I * l * x0))
    return out


def transition_from_samples(tau_in: np.ndarray, tau_out: np.ndarray, j: int,
                            fourier_range: int = FOURIER_RANGE,
                            tau_end: Optional[Tuple[complex, complex]] = None,
                            metadata: Optional[Dict[str, Any]] = None) -> TransitionSample:
    """由样本构造 TransitionSample，tau_end 为周期末端点 (τ_in+1, ψ) 用于周期性检验"""
    coeffs = fourier_coefficients(tau_in, tau_out, fourier_range)
    sign = 1 if j % 2 == 0 else -1
    disallowed = [abs(c) for l, c in coeffs.items() if l != 0 and sign * l > 0]
    defect = 0.0
    if tau_end is not None:
        defect = abs((tau_end[1] - tau_end[0]) - (tau_out[0] - tau_in[0]))
    return TransitionSample(
        tau_in=np.asarray(tau_in), tau_out=np.asarray(tau_out), half_plane_sign=sign,
        fourier=coeffs, c0=coeffs[0], noise_floor=max(disallowed, default=0.0),
        periodicity_defect=float(defect), j=j, metadata=dict(metadata or {}),
    )


def overlap_point(k: int, j: int, depth: float = FOURIER_DEPTH, radius: float = 1.0) -> complex:
    """
    射线 j 与 j+1 之间中射线上的点 t* = ρ·e^{iπ(j+1)/k}

    ρ 取模型时间深度为 depth 的半径 (2πk·depth)^{-1/k}，并限制在 radius/2 以内，
    使采样线整体落在两个扇形的公共部分。
    """
    depth = ensure_in_range(depth, 1e-3, 10.0, "采样深度")
    rho = min((TWO_PI * k * depth) ** (-1.0 / k), radius / 2)
    return complex(rho * np.exp(1j * np.pi * (j + 1) / k))


def sampling_line(j: int, depth: float = FOURIER_DEPTH, samples: int = FOURIER_SAMPLES,
                  center: Optional[complex] = None) -> np.ndarray:
    """
    τ = center + x，x ∈ [-1/2, 1/2]，末尾多一个周期端点

    不给 center 时取 center = i·y0，y0 = -(-1)^j·depth。
    """
    depth = ensure_in_range(depth, 1e-3, 10.0, "采样深度")
    samples = ensure_positive_int(samples, "采样点数", minimum=8)
    if center is None:
        center = 1j * (-((-1) ** j) * depth)
    x = -0.5 + np.arange(samples + 1) / samples
    return complex(center) + x


def transition_samples(charts: Sequence[FatouChart], j: int, depth: float = FOURIER_DEPTH,
                       samples: int = FOURIER_SAMPLES, fourier_range: int = FOURIER_RANGE,
                       tol: float = FATOU_TOL) -> TransitionSample:
    """
    ψ_j = τ_{j+1}∘τ_j⁻¹；j = 2k-1 时目标为 0 号图在辐角 +2π 的分支

    采样线以 τ_j(t*) 为中心，t* 见 overlap_point，因此 λ 的对数项不会把
    采样线推出公共区域。
    """
    two_k = len(charts)
    source = charts[j]
    t_star = overlap_point(source.germ.k, j, depth, source.germ.radius_hint)
    center = fatou_coordinate(source, t_star, tol=tol)
    line = sampling_line(j, depth, samples, center=center)
    t = invert_chart(source, line, tol=tol)
    target = charts[(j + 1) % two_k]
    turns = 1 if j == two_k - 1 else 0
    out = fatou_coordinates(target, t, branch_turns=turns, tol=tol).values
    return transition_from_samples(
        line[:-1], out[:-1], j, fourier_range, tau_end=(line[-1], out[-1]),
        metadata={"depth": depth, "samples": samples, "center": complex_to_pair(center),
                  "overlap_radius": abs(t_star)},
    )


@dataclass
class EVModulus:
    """Ecalle–Voronin 模：k、λ 与 2k 个转移函数"""

    k: int
    lam: complex
    transitions: List[TransitionSample]
    charts: Optional[NormalizedCharts] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "lambda": complex_to_pair(self.lam),
            "transitions": [
                {"j": s.j, "c0": complex_to_pair(s.c0),
                 "fourier": [{"l": l, "c": complex_to_pair(c)}
                             for l, c in sorted(s.fourier.items()) if l != 0]}
                for s in self.transitions
            ],
        }


def ev_transitions(germ: GermSpec, fourier_range: int = FOURIER_RANGE,
                   depth: float = FOURIER_DEPTH, samples: int = FOURIER_SAMPLES,
                   normalized: Optional[NormalizedCharts] = None,
                   tol: float = FATOU_TOL) -> EVModulus:
    """
    计算全部 2k 个 Ecalle–Voronin 转移函数

    Raises:
        NewtonFailed: 反演发散
        NotConverged: Fatou 极限未收敛
    """
    normalized = normalized or normalize_charts(germ)
    transitions = []
    for j in range(2 * germ.k):
        sample = transition_samples(normalized.charts, j, depth, samples, fourier_range, tol)
        logger.info("ψ_%d: c0=%s, 噪声 %.3e", j, sample.c0, sample.noise_floor)
        get_monitor().record_stage("ev_transition", residual=sample.noise_floor, precision="double",
                                   j=j, periodicity_defect=sample.periodicity_defect)
        transitions.append(sample)
    return EVModulus(k=germ.k, lam=normalized.charts[0].lam, transitions=transitions,
                     charts=normalized)


def shift_transition(sample: TransitionSample, a_in: complex, a_out: complex) -> TransitionSample:
    """
    源图平移 a_in、目标图平移 a_out 后的转移函数：
    c_l -> c_l·e^{-2πila_in}，c_0 -> c_0 + a_out - a_in
    """
    fourier = {}
    for l, c in sample.fourier.items():
        fourier[l] = c * np.exp(-TWO_PI_I * l * a_in) if l != 0 else c + a_out - a_in
    return replace(sample, fourier=fourier, c0=fourier[0],
                   tau_in=sample.tau_in + a_in, tau_out=sample.tau_out + a_out)


def translation_invariants(sample: TransitionSample,
                           next_sample: Optional[TransitionSample] = None) -> Dict[str, Any]:
    """
    平移共轭下不变的量

    |c_l|（实平移下不变）、c_{±2}/c_{±1}²（允许一侧），以及相邻转移的
    配对积 c^{(j)}_{∓1}·c^{(j+1)}_{±1}·e^{2πic^{(j)}_0}（任意复平移下不变）。
    """
    s = -sample.half_plane_sign
    out: Dict[str, Any] = {"abs": {l: abs(c) for l, c in sample.fourier.items() if l != 0}}
    c1, c2 = sample.fourier.get(s), sample.fourier.get(2 * s)
    if c1 is not None and c2 is not None and abs(c1) > 0:
        out["ratio"] = c2 / c1 ** 2
    if next_sample is not None:
        c_next = next_sample.fourier.get(-s)
        if c1 is not None and c_next is not None:
            out["pair_product"] = c1 * c_next * np.exp(TWO_PI_I * sample.c0)
    return out


# ---------------------------------------------------------------------------
# 首次积分坐标
# ---------------------------------------------------------------------------

@dataclass
class IntegralTransition:
    """首次积分坐标 σ 中的转移函数样本 φ"""

    sigma_in: np.ndarray
    sigma_out: np.ndarray
    chart: str = "zero"
    multiplier: Optional[complex] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            "chart": self.chart,
            "multiplier": None if self.multiplier is None else complex_to_pair(self.multiplier),
            "samples": [complex_to_pair(a) + complex_to_pair(b)
                        for a, b in zip(self.sigma_in, self.sigma_out)],
        }


def time_to_integral(psi: TransitionSample, chart: str = "zero") -> IntegralTransition:
    """
    φ = E∘ψ∘E⁻¹，E(τ) = e^{2πiτ}

    chart = "zero" 对应 σ → 0（Im τ → +∞），要求允许的傅里叶一侧为 l > 0；
    chart = "infinity" 对应 σ → ∞。

    Raises:
        BranchMismatch: 半平面方向与所请求的 σ 图不一致
    """
    if chart not in ("zero", "infinity"):
        raise ValidationError(f"未知的 σ 图: {chart}")
    expected = -1 if chart == "zero" else 1
    if psi.half_plane_sign != expected:
        raise BranchMismatch(
            f"转移函数的半平面方向 {psi.half_plane_sign} 与 σ 图 {chart} 不一致"
        )
    sigma_in = np.exp(TWO_PI_I * psi.tau_in)
    sigma_out = np.exp(TWO_PI_I * psi.tau_out)
    return IntegralTransition(sigma_in=sigma_in, sigma_out=sigma_out, chart=chart,
                              multiplier=complex(np.exp(TWO_PI_I * psi.c0)),
                              metadata={"j": psi.j})


def integral_series_value(psi: TransitionSample, sigma: Any) -> Any:
    """φ(σ) = σ·exp(2πi(c_0 + Σ c_l σ^l))，求和取允许的一侧"""
    sigma = np.asarray(sigma, dtype=complex)
    acc = psi.c0 + 0 * sigma
    for l, c in psi.fourier.items():
        if l != 0 and psi.allowed(l):
            acc = acc + c * sigma ** l
    return sigma * np.exp(TWO_PI_I * acc)


def _fit_polynomial(x: np.ndarray, y: np.ndarray, degree: Optional[int] = None) -> np.ndarray:
    degree = min(len(x) - 1, 8) if degree is None else degree
    return np.polynomial.polynomial.polyfit(x, y, degree)


def split_composition(phi_composed: IntegralTransition,
                      parity: str) -> Tuple[IntegralTransition, IntegralTransition]:
    """
    拆分 φ = φ_{l+1}∘φ_l

    even：φ_{l+1}(σ) = σ + φ(0)，φ_l = φ - φ(0)；
    odd：φ_l(σ) = σ - φ⁻¹(0)，φ_{l+1}(σ) = φ(σ + φ⁻¹(0))。
    两部分都由样本构造，在样本点上精确复合回 φ。

    Raises:
        NotUnivalent: 0 附近无法单值反演
    """
    x = np.asarray(phi_composed.sigma_in, dtype=complex)
    y = np.asarray(phi_composed.sigma_out, dtype=complex)
    exact = np.flatnonzero(x == 0)
    if parity == "even":
        shift = complex(y[exact[0]]) if len(exact) else \
            complex(np.polynomial.polynomial.polyval(0.0, _fit_polynomial(x, y)))
        middle = y - shift
    elif parity == "odd":
        coeffs = _fit_polynomial(x, y)
        radius = float(np.max(np.abs(x)))
        roots = np.polynomial.polynomial.polyroots(coeffs)
        inside = roots[np.abs(roots) < radius]
        if len(inside) != 1:
            raise NotUnivalent(f"φ 在样本圆盘内有 {len(inside)} 个零点，无法单值反演")
        poly = np.polynomial.Polynomial(coeffs)
        try:
            root = complex(newton_solve(poly, poly.deriv(), 0.0, inside[0], tol=1e-15))
        except NewtonFailed as e:
            raise NotUnivalent(f"φ⁻¹(0) 的牛顿迭代失败: {e}")
        shift = -root
        middle = x - root
    else:
        raise ValidationError(f"未知的奇偶性: {parity}")
    first = IntegralTransition(sigma_in=x, sigma_out=middle, chart=phi_composed.chart,
                               metadata={"parity": parity, "piece": "l", "shift": complex_to_pair(shift)})
    second = IntegralTransition(sigma_in=middle, sigma_out=y, chart=phi_composed.chart,
                                metadata={"parity": parity, "piece": "l+1"})
    return first, second


__all__ = [
    "GermSpec",
    "FatouChart",
    "FatouEvaluation",
    "NormalizedCharts",
    "TransitionSample",
    "EVModulus",
    "IntegralTransition",
    "log_branch",
    "model_time",
    "model_time_derivative",
    "petal_mode",
    "make_chart",
    "conjugator_order",
    "fatou_coordinates",
    "fatou_coordinate",
    "abel_residual",
    "invert_chart",
    "normalize_charts",
    "fourier_coefficients",
    "transition_from_samples",
    "overlap_point",
    "sampling_line",
    "transition_samples",
    "ev_transitions",
    "shift_transition",
    "translation_invariants",
    "time_to_integral",
    "integral_series_value",
    "split_composition",
]
