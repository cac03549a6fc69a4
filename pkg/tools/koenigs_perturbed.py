"""
扰动映射族 f_ε(t) = t + 2πi(1+q(t,ε))∏(t-α_i(ε))

不动点与乘子、规范对数、Koenigs 线性化、开缝区域上的复时间、
模型向量场 w_ε、扰动转移函数以及 ε → 0 的收敛扫描。
"""

import functools
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from config import (
    DEFAULT_DELTA,
    FOURIER_DEPTH,
    FOURIER_RANGE,
    FOURIER_SAMPLES,
    ITERATION_CAP,
    KOENIGS_JET_ORDER,
    KOENIGS_RESIDUAL_TOL,
    KOENIGS_STOP_TOL,
    NEWTON_MAX_STEPS,
    NEWTON_TOL,
    NORMALIZATION_TOL,
    ODE_ATOL,
    ODE_TOL,
    PATH_POINTS,
)
from tools.fatou_ev import (
    EVModulus,
    GermSpec,
    NormalizedCharts,
    TransitionSample,
    conjugator_order,
    ev_transitions,
    fatou_coordinate,
    normalize_charts,
    overlap_point,
    sampling_line,
    transition_from_samples,
)
from tools.formal_normalform import formal_invariant
from tools.sector_geometry import (
    FamilyRoots,
    RotationDisc,
    Sector,
    assign_rays,
    check_nondegenerate,
    rotation_disc_k1,
    sector_for_singularity,
)
from tools.series_kernel import TruncatedSeries, series_compose, series_derivative, series_evaluate
from utils.complex_utils import (
    TWO_PI,
    canonical_angle,
    complex_to_pair,
    newton_solve,
    polynomial_roots,
    univariate_at,
    wrap_angle,
)
from utils.maps import FactoredMap
from utils.performance import BatchProcessor, get_monitor
from utils.precision import cabs, get_precision, is_extended, precision_mode, to_double, working_array
from utils.validation import (
    BranchCut,
    DegenerateInput,
    NewtonFailed,
    NoOverlap,
    NotConverged,
    OutsideDomain,
    StepFailure,
    ValidationError,
    ensure_positive_int,
)

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi
NORMALIZATION_MODES = ("model", "limit", "invariant")
_EXTENDED_LOCK = threading.Lock()


# ---------------------------------------------------------------------------
# 规范对数与映射族
# ---------------------------------------------------------------------------

def canonic_log(mu: complex, tol: float = 1e-12) -> complex:
    """
    乘子的规范对数，Im ∈ (-π/2, 3π/2)

    Raises:
        DegenerateInput: μ = 0 或 μ 位于负虚轴 iR_-
    """
    mu = complex(mu)
    if mu == 0:
        raise DegenerateInput("乘子为零")
    if abs(mu.real) <= tol * abs(mu) and mu.imag < 0:
        raise DegenerateInput(f"乘子 {mu} 位于负虚轴上，规范对数无定义")
    value = complex(np.log(mu))
    if value.imag <= -math.pi / 2:
        value += TWO_PI_I
    return value


def acquire_roots(k: int, eps: complex, p_table: Optional[np.ndarray] = None,
                  explicit: Optional[Sequence[complex]] = None) -> FamilyRoots:
    """
    p(t,ε) 的根（伴随矩阵特征值加一步牛顿修正）或显式根，按辐角 [0, 2π) 排序

    Raises:
        DegenerateInput: 根的个数不是 k+1
    """
    eps = complex(eps)
    if explicit is not None:
        roots = np.asarray(explicit, dtype=complex)
    else:
        roots = polynomial_roots(univariate_at(p_table, eps))
    if len(roots) != k + 1:
        raise DegenerateInput(f"ε = {eps} 处得到 {len(roots)} 个根")
    order = np.argsort(canonical_angle(np.angle(roots)), kind="stable")
    return FamilyRoots(k=k, eps=eps, roots=roots[order])


class MapFamily(Protocol):
    """扰动映射族接口；holonomy_2d 的单值映射族同样实现它"""

    k: int
    eps_list: Tuple[complex, ...]

    def at(self, eps: complex) -> FactoredMap: ...

    def roots_at(self, eps: complex) -> FamilyRoots: ...

    def roots_family(self) -> List[FamilyRoots]: ...

    def unperturbed_germ(self, radius_hint: float) -> GermSpec: ...


@dataclass
class GermFamily:
    """
    f_ε(t) = t + 2πi·(1+q(t,ε))/D(t,ε)·p(t,ε)

    p、q、D 为二元系数表 table[m, r]（t^m ε^r）。p(t,0) = t^{k+1} 且关于 t 首一；
    q(0,0) = 0，D(0,0) = 1。给定 explicit_roots 时按 eps_list 逐项使用。
    """

    k: int
    eps_list: Tuple[complex, ...]
    p: Optional[np.ndarray] = None
    q: np.ndarray = field(default_factory=lambda: np.zeros((1, 1), dtype=complex))
    q_den: np.ndarray = field(default_factory=lambda: np.ones((1, 1), dtype=complex))
    explicit_roots: Optional[List[List[complex]]] = None
    name: str = "family"

    def __post_init__(self):
        ensure_positive_int(self.k, "k")
        self.eps_list = tuple(complex(e) for e in self.eps_list)
        self.q = np.atleast_2d(np.asarray(self.q, dtype=complex))
        self.q_den = np.atleast_2d(np.asarray(self.q_den, dtype=complex))
        if abs(self.q[0, 0]) > NORMALIZATION_TOL:
            raise ValidationError("q(0,0) 必须为 0")
        if abs(self.q_den[0, 0] - 1) > NORMALIZATION_TOL:
            raise ValidationError("D(0,0) 必须为 1")
        if self.explicit_roots is not None:
            if len(self.explicit_roots) != len(self.eps_list):
                raise ValidationError("explicit_roots 的长度必须与 eps_list 一致")
            for roots in self.explicit_roots:
                if len(roots) != self.k + 1:
                    raise ValidationError(f"每个 ε 需要 {self.k + 1} 个根")
        elif self.p is None:
            raise ValidationError("必须给出 p(t,ε) 系数或显式根")
        else:
            self.p = np.atleast_2d(np.asarray(self.p, dtype=complex))
            self._check_p()
        self._cache: Dict[str, Any] = {}

    def _check_p(self) -> None:
        k = self.k
        if self.p.shape[0] != k + 2:
            raise ValidationError(f"p 必须是 t 的 {k + 1} 次多项式")
        lead = self.p[k + 1]
        if abs(lead[0] - 1) > NORMALIZATION_TOL or np.any(np.abs(lead[1:]) > NORMALIZATION_TOL):
            raise ValidationError("p 必须关于 t 首一")
        at0 = self.p[:, 0]
        if np.any(np.abs(at0[: k + 1]) > NORMALIZATION_TOL):
            raise ValidationError("p(t, 0) 必须等于 t^{k+1}")

    @classmethod
    def moebius(cls, eps_list: Sequence[complex]) -> "GermFamily":
        """Möbius 对照族 f_ε(t) = (t - 2πiε)/(1 - 2πit)，不动点 ±√ε"""
        p = np.zeros((3, 2), dtype=complex)
        p[2, 0], p[0, 1] = 1.0, -1.0
        den = np.zeros((2, 1), dtype=complex)
        den[0, 0], den[1, 0] = 1.0, -TWO_PI_I
        return cls(k=1, eps_list=tuple(eps_list), p=p, q_den=den, name="moebius")

    @classmethod
    def quadratic(cls, eps_list: Sequence[complex], c: complex = 0.3) -> "GermFamily":
        """f_ε(t) = t + 2πi(t² - ε)(1 + c·t)"""
        p = np.zeros((3, 2), dtype=complex)
        p[2, 0], p[0, 1] = 1.0, -1.0
        q = np.zeros((2, 1), dtype=complex)
        q[1, 0] = c
        return cls(k=1, eps_list=tuple(eps_list), p=p, q=q, name="quadratic")

    def _eps_index(self, eps: complex) -> int:
        for idx, e in enumerate(self.eps_list):
            if abs(e - eps) <= 1e-15 * max(abs(e), 1e-300):
                return idx
        raise ValidationError(f"ε = {eps} 不在 eps_list 中")

    def roots_at(self, eps: complex) -> FamilyRoots:
        """按辐角 [0, 2π) 排序的不动点"""
        explicit = None
        if self.explicit_roots is not None:
            explicit = self.explicit_roots[self._eps_index(eps)]
        return acquire_roots(self.k, eps, self.p, explicit)

    def roots_family(self) -> List[FamilyRoots]:
        if "roots_family" not in self._cache:
            self._cache["roots_family"] = [self.roots_at(e) for e in self.eps_list]
        return self._cache["roots_family"]

    def correction_tables(self, eps: complex) -> Tuple[np.ndarray, np.ndarray]:
        """(1+q(t,ε), D(t,ε)) 的一元系数"""
        num = univariate_at(self.q, eps).copy()
        num[0] += 1.0
        return num, univariate_at(self.q_den, eps)

    def at(self, eps: complex) -> FactoredMap:
        roots = self.roots_at(eps).roots
        num, den = self.correction_tables(eps)
        return FactoredMap(roots, num, den)

    def unperturbed_germ(self, radius_hint: float = DEFAULT_DELTA) -> GermSpec:
        """ε = 0 处的芽 f_0(t) = t + 2πi t^{k+1}(1+q(t,0))/D(t,0)"""
        k = self.k
        num, den = self.correction_tables(0j)
        lifted = np.concatenate([np.zeros(k + 1, dtype=complex), TWO_PI_I * num])
        if len(np.trim_zeros(den, "b")) <= 1:
            coeffs = lifted.copy()
            coeffs[1] += 1.0
            return GermSpec.polynomial(coeffs, k=k, radius_hint=radius_hint)
        top = np.zeros(max(len(lifted), len(den) + 1), dtype=complex)
        top[1: len(den) + 1] += den
        top[: len(lifted)] += lifted
        return GermSpec(k=k, kind="rational", coefficients=tuple(top),
                        denominator=tuple(den), radius_hint=radius_hint)

    def unperturbed_lambda(self) -> complex:
        if "lambda" not in self._cache:
            germ = self.unperturbed_germ()
            self._cache["lambda"] = formal_invariant(germ.jet(conjugator_order(self.k)), self.k).lam
        return self._cache["lambda"]

    def unperturbed_charts(self, radius_hint: float = DEFAULT_DELTA) -> NormalizedCharts:
        key = f"charts:{radius_hint}"
        if key not in self._cache:
            self._cache[key] = normalize_charts(self.unperturbed_germ(radius_hint))
        return self._cache[key]


# ---------------------------------------------------------------------------
# 不动点
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointData:
    alpha: complex
    mu: complex
    log_mu: complex
    stability: str
    index: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "alpha": complex_to_pair(self.alpha),
            "mu": complex_to_pair(self.mu),
            "log_mu": complex_to_pair(self.log_mu),
            "stability": self.stability,
        }


def fixed_point_from_map(fmap: FactoredMap, index: int) -> FixedPointData:
    """由分解形式直接计算乘子 μ = 1 + 2πi·corr(α)·∏_{s≠i}(α-α_s)"""
    alpha = complex(fmap.roots[index])
    mu = complex(to_double(fmap.local_series(alpha, 1).coeffs)[1])
    if abs(abs(mu) - 1) <= 1e-10:
        raise DegenerateInput(f"不动点 {index} 的乘子 |μ| = {abs(mu):.12f} 过于接近 1")
    log_mu = canonic_log(mu)
    return FixedPointData(alpha=alpha, mu=mu, log_mu=log_mu,
                          stability="attracting" if abs(mu) < 1 else "repelling",
                          index=index)


def fixed_point_data(fam: MapFamily, eps: complex, i: int) -> FixedPointData:
    """
    第 i 个不动点的乘子与规范对数

    Raises:
        DegenerateInput: |μ| 在 1e-10 内接近 1，或 μ 位于 iR_-
    """
    fmap = fam.at(eps)
    if not 0 <= i < len(fmap.roots):
        raise ValidationError(f"不动点序号越界: {i}")
    return fixed_point_from_map(fmap, i)


# ---------------------------------------------------------------------------
# Koenigs 图
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KoenigsChart:
    """α_i 处的 Koenigs 线性化与复时间 τ = log φ / log μ + C"""

    fmap: FactoredMap
    fp: FixedPointData
    slits: np.ndarray
    base_point: complex
    delta: Optional[float] = None
    sector: Optional[Sector] = None
    ray: Optional[int] = None
    constant: complex = 0j
    model_constant: complex = 0j
    mode: str = "invariant"
    disc: Optional[RotationDisc] = None
    eps: Optional[complex] = None

    @property
    def scale(self) -> float:
        """α 到其余不动点的最小距离；单个不动点时取 δ"""
        others = np.delete(self.fmap.roots, self.fp.index)
        if len(others):
            return float(np.min(np.abs(others - self.fp.alpha)))
        return float(self.delta or 1.0)

    @classmethod
    def from_map(cls, fmap: FactoredMap, index: int = 0, delta: Optional[float] = None,
                 base_point: Optional[complex] = None) -> "KoenigsChart":
        """不带扇形与开缝的图，用于单个映射"""
        fp = fixed_point_from_map(fmap, index)
        if base_point is None:
            base_point = fp.alpha + 0.5 * (delta or 1.0) * 0.5
        return cls(fmap=fmap, fp=fp, slits=np.zeros(0, dtype=complex),
                   base_point=complex(base_point), delta=delta)

    def to_json(self) -> Dict[str, Any]:
        return {
            "fixed_point": self.fp.to_json(),
            "ray": self.ray,
            "mode": self.mode,
            "constant": complex_to_pair(self.constant),
            "base_point": complex_to_pair(self.base_point),
            "slits": [complex_to_pair(s) for s in self.slits],
            "sector": None if self.sector is None else self.sector.to_json(),
        }


@dataclass
class KoenigsEvaluation:
    values: np.ndarray
    derivatives: Optional[np.ndarray]
    iterations: int
    precision: str


def distance_to_slits(t: Any, slits: np.ndarray) -> np.ndarray:
    """到开缝 ∪[0, α_s] 的距离"""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    if len(slits) == 0:
        return np.full(t.shape, np.inf)
    out = np.full(t.shape, np.inf)
    for a in slits:
        if a == 0:
            d = np.abs(t)
        else:
            s = np.clip((t * np.conj(a)).real / abs(a) ** 2, 0.0, 1.0)
            d = np.abs(t - s * a)
        out = np.minimum(out, d)
    return out


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (np.conj(u) * v).imag


def segments_cross_slits(p0: np.ndarray, p1: np.ndarray, slits: np.ndarray) -> np.ndarray:
    """线段 [p0, p1] 是否与某条开缝 [0, α_s] 相交"""
    hit = np.zeros(np.shape(p0), dtype=bool)
    for a in slits:
        d1, d2 = _cross(a, p0), _cross(a, p1)
        d3, d4 = _cross(p1 - p0, -p0), _cross(p1 - p0, a - p0)
        hit |= (d1 * d2 < 0) & (d3 * d4 < 0)
    return hit


def _check_region(chart: KoenigsChart, t: np.ndarray, check_slits: bool = True) -> None:
    if chart.delta is not None and np.any(np.abs(t) >= chart.delta):
        raise OutsideDomain(f"点超出评估圆盘 |t| < {chart.delta}")
    if chart.sector is not None and not np.all(chart.sector.contains(t)):
        raise OutsideDomain(f"点不在不动点 {chart.fp.index} 的扇形内")
    if check_slits and np.any(distance_to_slits(t, chart.slits) <= 1e-14 * max(chart.scale, 1e-300)):
        raise OutsideDomain("点位于开缝上")
    if chart.disc is not None and not np.all(chart.disc.contains(t)):
        raise OutsideDomain("点不在旋转圆盘 D_ε 内")


@functools.lru_cache(maxsize=128)
def _koenigs_jet_cached(roots: Tuple[complex, ...], num: Tuple[complex, ...],
                        den: Tuple[complex, ...], index: int, order: int,
                        precision: str) -> TruncatedSeries:
    # precision 只参与缓存键：local_series 按当前精度构造系数
    fmap = FactoredMap(roots, num, den)
    g = fmap.local_series(fmap.roots[index], order)
    mu = g.coeffs[1]
    phi = TruncatedSeries.identity(order)
    for n in range(2, order + 1):
        composed = series_compose(phi, g)
        coeffs = np.array(phi.coeffs, copy=True)
        coeffs[n] = -composed.coeffs[n] / (mu ** n - mu)
        phi = TruncatedSeries(coeffs, order)
    return phi


def koenigs_jet(fmap: FactoredMap, index: int, order: int = KOENIGS_JET_ORDER) -> TruncatedSeries:
    """
    局部坐标 u = t - α_index 中 Koenigs 线性化 φ(u) = u + a_2u² + … 的 order 阶射流

    逐阶求解 φ∘g = μφ：a_n = -[φ_{<n}∘g]_n / (μ^n - μ)，g 为 f 在 α 处的局部级数。
    结果按映射与精度缓存。
    """
    key = (tuple(complex(r) for r in fmap.roots), tuple(complex(c) for c in fmap.num),
           tuple(complex(c) for c in fmap.den), int(index), int(order), get_precision())
    return _koenigs_jet_cached(*key)


def _closure_radius(tail: np.ndarray, order: int, tol: float, radius: float) -> float:
    """射流尾项低于 tol 的最大 |u|"""
    r = radius
    for c, p in ((tail[1], order - 1), (tail[0], order - 2)):
        if c > 0:
            r = min(r, (tol / c) ** (1.0 / p))
    return r


def _check_budget(u0: np.ndarray, offsets: np.ndarray, mu: complex, r_close: float, cap: int) -> None:
    """
    按模型映射估计进入射流区域所需的迭代次数，超过上限时直接报错

    以最近的另一不动点 α′ 作 Möbius 坐标 ζ = u/(u + α - α′)，模型映射在其中
    恰为 ζ ↦ μζ，|ζ| 每步按 |μ| 收缩。|μ| 接近 1 时迭代次数与 1/|log|μ|| 成正比。
    """
    d = -complex(offsets[np.argmin(np.abs(offsets))])
    rate = abs(math.log(abs(mu)))
    with np.errstate(divide="ignore"):
        spread = float(np.max(np.abs(u0) / np.abs(u0 + d)))
    inner = r_close / max(abs(d) - r_close, 1e-300)
    if spread <= inner:
        return
    predicted = math.log(spread / inner) / rate
    if predicted > cap:
        raise NotConverged(f"|μ| = {abs(mu):.8f} 过于接近 1：预计需要约 {predicted:.3g} 次迭代，"
                           f"超过上限 {cap}")


def koenigs_eval(chart: KoenigsChart, t: Any, with_derivative: bool = False,
                 tol: float = KOENIGS_STOP_TOL, cap: int = ITERATION_CAP,
                 check_domain: bool = True, check_slits: bool = True) -> KoenigsEvaluation:
    """
    Koenigs 线性化 φ(t) = μ^{∓n}·J(u_n)，u_n = f^{±n}(t) - α

    在局部坐标中迭代（利用 f - id 的分解避免相消），J 为 koenigs_jet 给出的
    局部射流。轨道一旦进入射流的收敛区域、尾项 max(|a_N||u|^{N-1}, |a_{N-1}||u|^{N-2})
    低于容差（double 下不低于 1e-16）就停止，乘子接近单位圆时不必等轨道
    几何收缩到不动点。当前精度为 double-double 时在 mpmath 对象数组上迭代。

    Raises:
        OutsideDomain: 点不在评估区域内
        NotConverged: 轨道逃出 |t| < δ 或超过迭代上限
        NewtonFailed: 排斥不动点的局部反演失败
    """
    arr = np.atleast_1d(np.asarray(t, dtype=complex))
    if check_domain:
        _check_region(chart, arr, check_slits)
    fmap, fp = chart.fmap, chart.fp
    alpha, mu = fp.alpha, fp.mu
    jet = koenigs_jet(fmap, fp.index)
    order = jet.order
    tail = np.abs(to_double(jet.coeffs[order - 1:]))
    radius = chart.scale
    attracting = abs(mu) < 1
    extended = is_extended()
    closure_tol = tol if extended else max(tol, 1e-16)
    if extended:
        u = working_array(arr - alpha)
        mu_w = mpmath.mpc(mu)
        factor = working_array(np.ones(arr.shape, dtype=complex))
        deriv = working_array(np.ones(arr.shape, dtype=complex))
        inv_tol = 1e-28
    else:
        u = arr - alpha
        mu_w = mu
        factor = np.ones(arr.shape, dtype=complex)
        deriv = np.ones(arr.shape, dtype=complex)
        inv_tol = NEWTON_TOL

    def closed(mag: np.ndarray) -> np.ndarray:
        inside = mag < radius
        rest = np.where(inside, mag, 0.0)
        err = np.maximum(tail[1] * rest ** (order - 1), tail[0] * rest ** (order - 2))
        return inside & (err < closure_tol)

    done = closed(cabs(u))
    others = np.delete(fmap.roots, fp.index)
    if len(others) and not np.all(done):
        _check_budget(arr[~done] - alpha, others - alpha, mu,
                      _closure_radius(tail, order, closure_tol, radius), cap)
    n = 0
    while not np.all(done):
        n += 1
        if n > cap:
            raise NotConverged(f"Koenigs 极限在 {cap} 次迭代内未收敛")
        act = np.flatnonzero(~done)
        ua = u[act]
        if attracting:
            if with_derivative:
                deriv[act] = deriv[act] * fmap.derivative(alpha + ua)
            un = fmap.local_map(alpha, ua)
            factor[act] = factor[act] / mu_w
        else:
            un = fmap.local_inverse(alpha, ua, ua / mu_w, tol=inv_tol)
            if with_derivative:
                deriv[act] = deriv[act] / fmap.derivative(alpha + un)
            factor[act] = factor[act] * mu_w
        mag = cabs(un)
        if not np.all(np.isfinite(mag)):
            raise NotConverged("Koenigs 轨道出现非有限值")
        if chart.delta is not None and np.any(cabs(alpha + un) >= chart.delta):
            raise NotConverged(f"不动点 {fp.index} 的轨道逃出 |t| < {chart.delta}")
        u[act] = un
        done[act] = closed(mag)
    phi = factor * series_evaluate(jet, u)
    dphi = factor * series_evaluate(series_derivative(jet), u) * deriv if with_derivative else None
    return KoenigsEvaluation(values=to_double(phi),
                             derivatives=None if dphi is None else to_double(dphi),
                             iterations=n, precision=get_precision())


def koenigs_residual(chart: KoenigsChart, t: Any) -> np.ndarray:
    """相对残差 |φ(f(t)) - μφ(t)| / |μφ(t)|；f(t) 离开区域的点记为 nan"""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    ft = chart.fmap(t)
    keep = np.abs(ft) < (chart.delta or np.inf)
    if chart.sector is not None:
        keep &= chart.sector.contains(ft)
    keep &= distance_to_slits(ft, chart.slits) > 0
    out = np.full(t.shape, np.nan)
    if np.any(keep):
        a = koenigs_eval(chart, t[keep], check_domain=False).values
        b = koenigs_eval(chart, ft[keep], check_domain=False).values
        out[keep] = np.abs(b - chart.fp.mu * a) / np.abs(chart.fp.mu * a)
    return out


# ---------------------------------------------------------------------------
# 复时间与路径延拓
# ---------------------------------------------------------------------------

@dataclass
class PerturbedTimes:
    values: np.ndarray
    log_phi: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    iterations: int
    precision: str


def default_paths(chart: KoenigsChart, t: np.ndarray, points: int = PATH_POINTS) -> np.ndarray:
    """从基点出发：沿 |t| = |b| 的圆弧（在扇形内）到 t 的辐角，再沿径向到 t"""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    b = chart.base_point
    rb_abs = abs(b)
    bis = chart.sector.bisector_arg if chart.sector is not None else float(np.angle(b))
    rb = wrap_angle(np.angle(b) - bis)
    rt = wrap_angle(np.angle(t) - bis)
    s = np.linspace(0.0, 1.0, points)
    theta = bis + rb + (rt - rb)[:, None] * s[None, :]
    arc = rb_abs * np.exp(1j * theta)
    radii = rb_abs + (np.abs(t) - rb_abs)[:, None] * s[None, 1:]
    radial = radii * np.exp(1j * np.angle(t))[:, None]
    radial[:, -1] = t
    return np.concatenate([arc, radial], axis=1)


def densify_polyline(vertices: Sequence[complex], points: int = PATH_POINTS) -> np.ndarray:
    """把折线顶点加密为路径点"""
    v = np.asarray(vertices, dtype=complex)
    if len(v) < 2:
        raise ValidationError("路径至少需要两个顶点")
    s = np.linspace(0.0, 1.0, points, endpoint=False)
    pieces = [v[m] + (v[m + 1] - v[m]) * s for m in range(len(v) - 1)]
    return np.concatenate(pieces + [v[-1:]])


def _continue_log(chart: KoenigsChart, paths: np.ndarray, single_valued: bool,
                  with_derivative: bool) -> Optional[Tuple[np.ndarray, KoenigsEvaluation]]:
    if single_valued and len(chart.slits):
        crossing = segments_cross_slits(paths[:, :-1], paths[:, 1:], chart.slits)
        if np.any(crossing):
            raise BranchCut("延拓路径穿过开缝 [0, α_s]")
    ev = koenigs_eval(chart, paths.ravel(), with_derivative=False, check_slits=single_valued)
    phi = ev.values.reshape(paths.shape)
    steps = np.log(phi[:, 1:] / phi[:, :-1])
    if np.any(np.abs(steps.imag) > np.pi / 3):
        return None
    log_phi = np.log(phi[:, 0]) + steps.sum(axis=1)
    end = koenigs_eval(chart, paths[:, -1], with_derivative=with_derivative,
                       check_slits=single_valued)
    return log_phi, end


def perturbed_times(chart: KoenigsChart, t: Any, paths: Optional[np.ndarray] = None,
                    single_valued: bool = True, refinements: int = 4) -> PerturbedTimes:
    """
    τ(t) = log φ(t)/log μ + C，对数分支沿从基点出发的路径延拓

    缺省路径见 default_paths；相邻路径点间 Arg(φ_{m+1}/φ_m) 超过 π/3 时加密。

    Raises:
        BranchCut: single_valued 时路径穿过开缝
        NotConverged: 加密后仍无法延拓
    """
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    points = PATH_POINTS
    for _ in range(refinements + 1):
        p = default_paths(chart, t, points) if paths is None else np.atleast_2d(paths)
        result = _continue_log(chart, p, single_valued, with_derivative=True)
        if result is not None:
            log_phi, end = result
            values = log_phi / chart.fp.log_mu + chart.constant
            return PerturbedTimes(values=values, log_phi=log_phi, phi=end.values,
                                  dphi=end.derivatives, iterations=end.iterations,
                                  precision=end.precision)
        if paths is not None:
            paths = np.stack([densify_polyline(row, 2) for row in np.atleast_2d(paths)])
        points *= 2
    raise NotConverged("对数分支延拓在加密后仍不稳定")


def perturbed_time(chart: KoenigsChart, t: complex,
                   path: Optional[Sequence[complex]] = None,
                   single_valued: bool = True) -> complex:
    """
    沿给定折线（从基点到 t）延拓的复时间；缺省使用 default_paths

    Raises:
        BranchCut: single_valued 时路径穿过开缝
    """
    if path is not None:
        vertices = list(path)
        if abs(vertices[0] - chart.base_point) > 1e-14 or abs(vertices[-1] - t) > 1e-14:
            raise ValidationError("路径必须从基点出发并终止于 t")
        dense = densify_polyline(vertices)[None, :]
        return complex(perturbed_times(chart, [t], paths=dense, single_valued=single_valued).values[0])
    return complex(perturbed_times(chart, [t], single_valued=single_valued).values[0])


def generator_eval(chart: KoenigsChart, t: Any, check_domain: bool = True) -> Any:
    """规范生成元 v(t) = log μ · φ(t)/φ′(t)"""
    ev = koenigs_eval(chart, t, with_derivative=True, check_domain=check_domain)
    out = chart.fp.log_mu * ev.values / ev.derivatives
    return complex(out[0]) if np.ndim(t) == 0 else out


def _complex_flow(rhs, y0: np.ndarray, duration: float = 1.0) -> np.ndarray:
    """沿复向量场积分单位时间（RK45，复值状态）"""
    y0 = np.atleast_1d(np.asarray(y0, dtype=complex))
    sol = solve_ivp(lambda s, y: duration * rhs(y), (0.0, 1.0), y0,
                    method="RK45", rtol=ODE_TOL, atol=ODE_ATOL)
    if not sol.success:
        raise StepFailure(f"向量场积分失败: {sol.message}")
    return sol.y[:, -1]


def generator_flow_check(chart: KoenigsChart, t: Any) -> np.ndarray:
    """沿 ṫ = v(t) 积分单位时间，与 f(t) 比较的误差"""
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    end = _complex_flow(lambda y: generator_eval(chart, y, check_domain=False), t)
    return np.abs(end - chart.fmap(t))


# ---------------------------------------------------------------------------
# 模型向量场
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelField:
    """w_ε(t) = a(ε)∏(t - α_s)，在 α_index 处 1-jet 与规范生成元一致"""

    a_eps: complex
    roots: FamilyRoots
    index: int

    def __call__(self, t: Any) -> Any:
        out = self.a_eps
        for a in self.roots.roots:
            out = out * (np.asarray(t, dtype=complex) - a)
        return out

    def derivative_at_root(self) -> complex:
        alpha = self.roots.roots[self.index]
        others = np.delete(self.roots.roots, self.index)
        return complex(self.a_eps * np.prod(alpha - others))

    def time(self, t: Any) -> Any:
        return model_time_perturbed(self, t)

    def to_json(self) -> Dict[str, Any]:
        return {"a_eps": complex_to_pair(self.a_eps), "index": self.index,
                "roots": self.roots.to_json()}


def model_field(fam: MapFamily, eps: complex, i: int) -> ModelField:
    """
    a(ε) = Log(1 + 2πi(1+q(α))·P)/P，P = ∏_{s≠i}(α_i - α_s)

    Raises:
        DegenerateInput: 根重合
    """
    roots = fam.roots_at(eps)
    if roots.min_separation() <= 1e-14 * max(roots.diameter(), 1e-300):
        raise DegenerateInput(f"ε = {eps} 处的根重合")
    fp = fixed_point_data(fam, eps, i)
    alpha = roots.roots[i]
    prod = complex(np.prod(alpha - np.delete(roots.roots, i)))
    return ModelField(a_eps=fp.log_mu / prod, roots=roots, index=i)


def model_time_perturbed(field: ModelField, t: Any) -> Any:
    """
    模型场的时间 T_w(t) = (1/a)·Σ_s Log(1 - α_s/t)/p′(α_s)

    在开缝星形 ∪[0, α_s] 之外单值。
    """
    arr = np.asarray(t, dtype=complex)
    roots = field.roots.roots
    total = np.zeros(arr.shape, dtype=complex)
    for s, a in enumerate(roots):
        dp = np.prod(a - np.delete(roots, s))
        total = total + np.log(1 - a / arr) / dp
    out = total / field.a_eps
    return out if out.ndim else complex(out)


def model_field_check(fam: MapFamily, eps: complex, i: int, t: Any) -> Dict[str, Any]:
    """
    |f_ε(g_w^{-1}(t)) - t| 与 |w(t)(t-α_i)| 之比的拟合常数

    g_w^{-1} 为沿模型场反向积分单位时间。
    """
    field = model_field(fam, eps, i)
    fmap = fam.at(eps)
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    back = _complex_flow(lambda y: -field(y), t)
    residual = np.abs(fmap(back) - t)
    scale = np.abs(field(t) * (t - field.roots.roots[i]))
    ratio = residual / scale
    return {"constant": float(np.max(ratio)), "residuals": residual, "ratios": ratio}


# ---------------------------------------------------------------------------
# 图的构造与规范化
# ---------------------------------------------------------------------------

def koenigs_chart(fam: MapFamily, eps: complex, i: int, mode: str = "model",
                  delta: float = DEFAULT_DELTA, certified: bool = False) -> KoenigsChart:
    """
    构造第 i 个不动点的复时间图

    基点 b = (δ/2)·e^{iπ(j+1)/k} 位于射线 j 与 j+1 之间的中射线上。
    mode = "model" 令 τ(b) = T_w(b)；"limit" 令 τ(b) 等于规范化的未扰动
    Fatou 坐标 τ_j(b)；"invariant" 不做锚定。
    """
    if mode not in NORMALIZATION_MODES:
        raise ValidationError(f"未知的规范化模式: {mode}")
    fmap = fam.at(eps)
    roots = fam.roots_at(eps)
    fp = fixed_point_from_map(fmap, i)
    sector, j = sector_for_singularity(fam.roots_family(), i, radius=delta)
    k = fam.k
    base = 0.5 * delta * np.exp(1j * np.pi * (j + 1) / k)
    disc = rotation_disc_k1(roots, delta, i) if certified and k == 1 else None
    chart = KoenigsChart(fmap=fmap, fp=fp, slits=roots.roots.copy(), base_point=complex(base),
                         delta=delta, sector=sector, ray=j, mode=mode, disc=disc, eps=complex(eps))
    log_b = complex(np.log(koenigs_eval(chart, [base]).values[0]))
    field = model_field(fam, eps, i)
    model_const = complex(model_time_perturbed(field, base) - log_b / fp.log_mu)
    if mode == "model":
        constant = model_const
    elif mode == "limit":
        reference = fam.unperturbed_charts(delta).charts[j]
        constant = complex(fatou_coordinate(reference, base) - log_b / fp.log_mu)
    else:
        constant = 0j
    logger.debug("ε=%s 不动点 %d：射线 %d，μ=%s，常数 %s", eps, i, j, fp.mu, constant)
    return replace(chart, constant=constant, model_constant=model_const)


def transition_pairs(fam: MapFamily) -> List[Tuple[int, int]]:
    """满足 j_{i'} ≡ j_i + 1 (mod 2k) 的不动点对，按 j_i 排序"""
    rays = assign_rays(fam.roots_family())
    two_k = 2 * fam.k
    pairs = []
    for i, ji in enumerate(rays):
        for i2, ji2 in enumerate(rays):
            if ji2 == (ji + 1) % two_k:
                pairs.append((i, i2))
    return sorted(pairs, key=lambda p: rays[p[0]])


def line_times(chart: KoenigsChart, t: Any) -> PerturbedTimes:
    """
    有序点列 t_0, …, t_M 上的复时间

    只在中间一点沿 default_paths 延拓对数分支，其余点沿点列逐段累加
    Log(φ_{m+1}/φ_m)；相邻两点间辐角增量超过 π/3 时报 NotConverged。
    """
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    mid = len(t) // 2
    anchor = perturbed_times(chart, t[mid: mid + 1])
    ev = koenigs_eval(chart, t, with_derivative=True)
    steps = np.log(ev.values[1:] / ev.values[:-1])
    if np.any(np.abs(steps.imag) > np.pi / 3):
        raise NotConverged("采样点过稀，对数分支无法沿点列延拓")
    cumulative = np.concatenate([[0j], np.cumsum(steps)])
    log_phi = anchor.log_phi[0] + np.log(ev.values[mid] / anchor.phi[0]) + cumulative - cumulative[mid]
    values = log_phi / chart.fp.log_mu + chart.constant
    return PerturbedTimes(values=values, log_phi=log_phi, phi=ev.values, dphi=ev.derivatives,
                          iterations=max(ev.iterations, anchor.iterations), precision=ev.precision)


def invert_perturbed_time(chart: KoenigsChart, field: ModelField, w_model: np.ndarray,
                          mid_arg: float, tol: float = 1e-10,
                          center: Optional[Tuple[complex, complex]] = None) -> np.ndarray:
    """
    在模型规范化下求 τ(t) = w

    给定 center = (t*, w*)（w* 为 t* 处的模型规范化复时间）时，沿规范生成元
    v 做二阶泰勒展开 t ≈ t* + xv + x²vv′/2（x = w - w*）作为初值；否则对 T_w
    做牛顿法（初值取 t^k = i/(2πkw) 中最接近中射线的根）。随后对完整复时间
    做牛顿修正，对数分支增量延拓。
    """
    k = field.roots.k
    w_model = np.atleast_1d(np.asarray(w_model, dtype=complex))
    if center is not None:
        t_star, w_star = complex(center[0]), complex(center[1])
        v = generator_eval(chart, t_star)
        h = 1e-4 * abs(v)
        dv = (generator_eval(chart, t_star + h) - generator_eval(chart, t_star - h)) / (2 * h)
        x = w_model - w_star
        t = t_star + x * v + 0.5 * x * x * v * dv
        times = line_times(chart, t)
    else:
        base = (1j / (TWO_PI * k * w_model)) ** (1.0 / k)
        roots = base[:, None] * np.exp(2j * np.pi * np.arange(k) / k)[None, :]
        pick = np.argmin(np.abs(np.angle(roots * np.exp(-1j * mid_arg))), axis=1)
        seed = roots[np.arange(len(w_model)), pick]
        t = newton_solve(lambda x: model_time_perturbed(field, x),
                         lambda x: 1.0 / field(x), w_model, seed, tol=1e-13)
        times = perturbed_times(chart, t)
    log_phi, phi, dphi = times.log_phi, times.phi, times.dphi
    log_mu = chart.fp.log_mu
    for _ in range(NEWTON_MAX_STEPS):
        err = log_phi / log_mu + chart.model_constant - w_model
        t = t - err * phi * log_mu / dphi
        if np.all(np.abs(err) < tol):
            return t
        ev = koenigs_eval(chart, t, with_derivative=True)
        log_phi = log_phi + np.log(ev.values / phi)
        phi, dphi = ev.values, ev.derivatives
    raise NewtonFailed("扰动复时间的牛顿反演未收敛")


def _abel_residual(chart: KoenigsChart, t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    ft = chart.fmap(t)
    keep = (np.abs(ft) < (chart.delta or np.inf)) & chart.sector.contains(ft) \
        if chart.sector is not None else np.abs(ft) < (chart.delta or np.inf)
    out = np.full(t.shape, np.nan)
    if np.any(keep):
        pf = koenigs_eval(chart, ft[keep], check_domain=False).values
        d = np.log(pf / phi[keep]) - chart.fp.log_mu
        d = d - TWO_PI_I * np.round(d.imag / TWO_PI)
        out[keep] = np.abs(d / chart.fp.log_mu)
    return out


def _nanmax(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.nanmax(values)) if np.any(np.isfinite(values)) else float("nan")


def _transition_once(fam: MapFamily, eps: complex, pair: Tuple[int, int], fourier_range: int,
                     depth: float, samples: int, mode: str, delta: float,
                     tol: float) -> TransitionSample:
    i, i2 = pair
    source = koenigs_chart(fam, eps, i, mode=mode, delta=delta)
    target = koenigs_chart(fam, eps, i2, mode=mode, delta=delta)
    k = fam.k
    j, j2 = source.ray, target.ray
    if (j2 - j) % (2 * k) != 1:
        raise NoOverlap(f"不动点 {i} 与 {i2} 的射线 {j}, {j2} 不相邻")
    mid = np.pi * (j + 1) / k
    # 采样线以中射线上 t* 处的模型规范化时间为中心
    t_star = overlap_point(k, j, depth, delta)
    w_star = complex(perturbed_times(source, [t_star]).values[0]) - source.constant + source.model_constant
    line = sampling_line(j, depth, samples, center=w_star)
    field = model_field(fam, eps, i)
    t = invert_perturbed_time(source, field, line, mid, tol=tol, center=(t_star, w_star))
    for chart in (source, target):
        inside = (np.abs(t) < delta) & chart.sector.contains(t) & (distance_to_slits(t, chart.slits) > 0)
        if not np.all(inside):
            raise NoOverlap(f"ε = {eps} 时采样点离开了不动点 {chart.fp.index} 的区域")
    tau_in = line + (source.constant - source.model_constant)
    out = line_times(target, t)
    tau_out = out.values
    wrap = j == 2 * k - 1
    if wrap:
        tau_out = tau_out + fam.unperturbed_lambda()
    src_phi = koenigs_eval(source, t).values
    res_k = np.concatenate([koenigs_residual(source, t), koenigs_residual(target, t)])
    res_a = np.concatenate([_abel_residual(source, t, src_phi), _abel_residual(target, t, out.phi)])
    sample = transition_from_samples(
        tau_in[:-1], tau_out[:-1], j, fourier_range, tau_end=(tau_in[-1], tau_out[-1]),
        metadata={
            "pair": [i, i2], "eps": complex_to_pair(eps), "mode": mode, "wrap": wrap,
            "residual_koenigs": _nanmax(res_k), "residual_abel": _nanmax(res_a),
            "iter_count": int(out.iterations), "precision_mode": get_precision(),
            "depth": depth, "center": complex_to_pair(w_star), "overlap_radius": abs(t_star),
        },
    )
    return sample


def perturbed_transition(fam: MapFamily, eps: complex, pair: Tuple[int, int],
                         fourier_range: int = FOURIER_RANGE, depth: float = FOURIER_DEPTH,
                         samples: int = FOURIER_SAMPLES, mode: str = "model",
                         delta: float = DEFAULT_DELTA, tol: float = 1e-10) -> TransitionSample:
    """
    扰动转移函数 τ_{i+1,ε}∘τ_{i,ε}⁻¹ 在重叠区域上的采样与傅里叶系数

    从 2k-1 号射线到 0 号射线的转移按 τ_{2k} = τ_0 + λ 约定平移目标图。
    Koenigs 残差超过 KOENIGS_RESIDUAL_TOL 时以 double-double 重算，
    元数据记录所用精度。

    Raises:
        NoOverlap: 射线不相邻或采样点离开任一图的区域
    """
    sample = _transition_once(fam, eps, pair, fourier_range, depth, samples, mode, delta, tol)
    residual = sample.metadata["residual_koenigs"]
    if get_precision() == "double" and not residual <= KOENIGS_RESIDUAL_TOL:
        logger.warning("ε=%s 对 %s 的 Koenigs 残差 %.2e 超限，提升到 double-double",
                       eps, pair, residual)
        with _EXTENDED_LOCK, precision_mode("double-double"):
            sample = _transition_once(fam, eps, pair, fourier_range, depth, samples, mode, delta, tol)
    get_monitor().record_stage(
        "perturbed_transition", residual=sample.metadata["residual_koenigs"],
        iterations=sample.metadata["iter_count"], precision=sample.metadata["precision_mode"],
        pair=list(pair), eps=complex_to_pair(eps),
    )
    return sample


# ---------------------------------------------------------------------------
# 收敛扫描
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = (
    "eps_re", "eps_im", "pair", "l", "c_re", "c_im", "abs_c",
    "residual_abel", "residual_koenigs", "iter_count", "precision_mode",
)


@dataclass
class SweepResult:
    rows: List[Dict[str, Any]]
    limits: List[Dict[str, Any]]
    errors: List[Dict[str, Any]]
    samples: Dict[Tuple[complex, Tuple[int, int]], TransitionSample] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"rows": self.rows, "limits": self.limits, "errors": self.errors}


def richardson_limit(s: Sequence[float], values: Sequence[complex]) -> complex:
    """假设 v(s) = v_0 + A·s，用两个最小的 s 外推到 s = 0"""
    order = np.argsort(s)
    if len(order) < 2:
        return complex(values[order[0]])
    s2, s1 = s[order[0]], s[order[1]]
    v2, v1 = values[order[0]], values[order[1]]
    return complex((s1 * v2 - s2 * v1) / (s1 - s2))


def _sweep_row(fam: MapFamily, eps: complex, pairs: List[Tuple[int, int]], kwargs: Dict[str, Any],
               precision: str):
    # 精度模式是线程局部的，工作线程需要重新设置
    with precision_mode(precision):
        return [(pair, perturbed_transition(fam, eps, pair, **kwargs)) for pair in pairs]


def convergence_sweep(fam: MapFamily, observables: Sequence[str] = ("abs_c",),
                      fourier_range: int = FOURIER_RANGE, depth: float = FOURIER_DEPTH,
                      samples: int = FOURIER_SAMPLES, mode: str = "limit",
                      delta: float = DEFAULT_DELTA, reference: Optional[EVModulus] = None,
                      compare_unperturbed: bool = True,
                      threads: Optional[int] = None, tol: float = 1e-10) -> SweepResult:
    """
    在 eps_list 上计算扰动转移函数，并在 s = |ε|^{1/(k+1)} 中外推平移不变量

    各 ε 行并行计算，单行失败只记录错误。|c_l| 只在实平移下不变，因此只有
    mode = "limit"（图锚定到未扰动图）时才与未扰动值比较；c_{2l}/c_l² 在任意平移下
    不变，任何模式下都比较。

    Raises:
        DegenerateInput: 族不满足非退化条件（在任何计算之前检查）
    """
    ok, margin = check_nondegenerate(fam.roots_family(), fam.k)
    if not ok:
        raise DegenerateInput(
            f"族不满足非退化条件（k=1：过两根的直线不能平行于实轴；k≥2：极限多边形的"
            f"对称轴不能与实分割直线 t^k∈R 重合），余量 {margin:.3e}"
        )
    pairs = transition_pairs(fam)
    kwargs = dict(fourier_range=fourier_range, depth=depth, samples=samples,
                  mode=mode, delta=delta, tol=tol)
    precision = get_precision()
    if precision == "double-double":
        # mpmath 的工作精度是进程全局的
        threads = 1
    with BatchProcessor(threads) as pool:
        outcomes = pool.run([
            (lambda e=e: _sweep_row(fam, e, pairs, kwargs, precision)) for e in fam.eps_list
        ])

    rows, errors, table = [], [], {}
    for idx, result, error in outcomes:
        eps = fam.eps_list[idx]
        if error is not None:
            errors.append({"eps": complex_to_pair(eps), "error": str(error),
                           "error_type": type(error).__name__})
            continue
        for pair, sample in result:
            table[(eps, pair)] = sample
            meta = sample.metadata
            for l, c in sorted(sample.fourier.items()):
                rows.append({
                    "eps_re": eps.real, "eps_im": eps.imag, "pair": f"{pair[0]}-{pair[1]}",
                    "l": l, "c_re": c.real, "c_im": c.imag, "abs_c": abs(c),
                    "residual_abel": meta["residual_abel"],
                    "residual_koenigs": meta["residual_koenigs"],
                    "iter_count": meta["iter_count"], "precision_mode": meta["precision_mode"],
                })

    if compare_unperturbed and reference is None:
        reference = ev_transitions(fam.unperturbed_germ(delta), fourier_range, depth=depth,
                                   samples=samples, normalized=fam.unperturbed_charts(delta))
    anchored = mode == "limit"
    if reference is not None and not anchored and "abs_c" in observables:
        logger.warning("%s 模式下图的常数没有锚定到未扰动图，|c_l| 不与未扰动值比较", mode)
    rays = assign_rays(fam.roots_family())
    limits = []
    k = fam.k
    for pair in pairs:
        ok_eps = [e for e in fam.eps_list if (e, pair) in table]
        if len(ok_eps) < 2:
            continue
        s = np.abs(np.asarray(ok_eps)) ** (1.0 / (k + 1))
        sign = table[(ok_eps[0], pair)].half_plane_sign
        for l in range(-fourier_range, fourier_range + 1):
            if l == 0 or sign * l >= 0:
                continue
            entry: Dict[str, Any] = {"pair": f"{pair[0]}-{pair[1]}", "l": l}
            if "abs_c" in observables:
                seq = [abs(table[(e, pair)].fourier[l]) for e in ok_eps]
                entry["abs_c"] = seq
                entry["abs_c_limit"] = richardson_limit(s, seq).real
                if reference is not None and anchored:
                    ref = abs(reference.transitions[rays[pair[0]]].fourier[l])
                    entry["abs_c_unperturbed"] = ref
                    entry["relative_distance"] = abs(entry["abs_c_limit"] - ref) / max(ref, 1e-300)
            if "ratio" in observables and abs(l) == 1:
                seq = []
                for e in ok_eps:
                    f = table[(e, pair)].fourier
                    seq.append(f[2 * l] / f[l] ** 2 if abs(f[l]) > 0 else np.nan)
                entry["ratio"] = [complex_to_pair(v) for v in seq]
                limit = richardson_limit(s, seq)
                entry["ratio_limit"] = complex_to_pair(limit)
                if reference is not None:
                    ref_f = reference.transitions[rays[pair[0]]].fourier
                    if abs(ref_f.get(l, 0)) > 0 and 2 * l in ref_f:
                        ref_ratio = ref_f[2 * l] / ref_f[l] ** 2
                        entry["ratio_unperturbed"] = complex_to_pair(ref_ratio)
                        entry["ratio_relative_distance"] = abs(limit - ref_ratio) / max(abs(ref_ratio), 1e-300)
            limits.append(entry)
    logger.info("扫描完成: %d 行，%d 个失败的 ε", len(rows), len(errors))
    return SweepResult(rows=rows, limits=limits, errors=errors, samples=table)


__all__ = [
    "canonic_log",
    "acquire_roots",
    "MapFamily",
    "GermFamily",
    "FixedPointData",
    "fixed_point_from_map",
    "fixed_point_data",
    "KoenigsChart",
    "KoenigsEvaluation",
    "PerturbedTimes",
    "ModelField",
    "SweepResult",
    "SWEEP_COLUMNS",
    "NORMALIZATION_MODES",
    "distance_to_slits",
    "segments_cross_slits",
    "koenigs_jet",
    "koenigs_eval",
    "koenigs_residual",
    "default_paths",
    "densify_polyline",
    "perturbed_times",
    "perturbed_time",
    "generator_eval",
    "generator_flow_check",
    "model_field",
    "model_time_perturbed",
    "model_field_check",
    "koenigs_chart",
    "transition_pairs",
    "line_times",
    "invert_perturbed_time",
    "perturbed_transition",
    "richardson_limit",
    "convergence_sweep",
]
