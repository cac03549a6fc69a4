"""
平面鞍结点族 ż = z(1+q(z,t,ε)) + g(t,ε)p(t,ε)，ṫ = p(t,ε)

相曲线的复路径积分、横截面 {z = δ} 上的单值映射（绕 z = 0 逆时针一周）、
典范首次积分在横截面上的限制，以及奇点 (0, α_i) 处分界线的追踪与
不等式检验。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial as P
from scipy.integrate import solve_ivp

from config import (
    DEFAULT_DELTA,
    FIT_RESIDUAL_THRESHOLD,
    MIN_LOOP_STEPS,
    MONODROMY_DELTA,
    MONODROMY_GRID_POINTS,
    MONODROMY_GRID_RADIUS,
    MONODROMY_MAP_DEGREE,
    MONODROMY_MAP_POINTS,
    MONODROMY_MAP_RADIUS,
    ODE_ATOL,
    ODE_TOL,
    SEPARATRIX_JET_FRACTION,
    SEPARATRIX_JET_ORDER,
    SEPARATRIX_SEED_OFFSET,
)
from tools.fatou_ev import GermSpec
from tools.koenigs_perturbed import acquire_roots
from tools.sector_geometry import FamilyRoots
from tools.series_kernel import TruncatedSeries
from utils.complex_utils import complex_to_pair, newton_solve, univariate_at
from utils.maps import FactoredMap, PolynomialMap
from utils.performance import get_monitor
from utils.validation import (
    FitBad,
    InequalityViolated,
    OffDomain,
    StepFailure,
    ValidationError,
    WrongNormalization,
    ensure_positive_int,
)

logger = logging.getLogger(__name__)

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# 向量场
# ---------------------------------------------------------------------------

@dataclass
class PlanarFieldFamily:
    """
    平面向量场族

    p 与 g 为系数表 [m, r]（t^m ε^r），q 为三元表 [a, b, c]（z^a t^b ε^c），
    q(0,0,0) = 0。
    """

    k: int
    eps_list: Tuple[complex, ...]
    p: Optional[np.ndarray] = None
    q: np.ndarray = field(default_factory=lambda: np.zeros((1, 1, 1), dtype=complex))
    g: np.ndarray = field(default_factory=lambda: np.zeros((1, 1), dtype=complex))
    explicit_roots: Optional[List[List[complex]]] = None
    name: str = "planar"

    def __post_init__(self):
        ensure_positive_int(self.k, "k")
        self.eps_list = tuple(complex(e) for e in self.eps_list)
        q = np.asarray(self.q, dtype=complex)
        while q.ndim < 3:
            q = q[..., None]
        self.q = q
        self.g = np.atleast_2d(np.asarray(self.g, dtype=complex))
        if abs(self.q[0, 0, 0]) > 1e-14:
            raise ValidationError("q(0,0,0) 必须为 0")
        if self.p is None and self.explicit_roots is None:
            raise ValidationError("必须给出 p(t,ε) 系数或显式根")
        if self.p is not None:
            self.p = np.atleast_2d(np.asarray(self.p, dtype=complex))
        if self.explicit_roots is not None and len(self.explicit_roots) != len(self.eps_list):
            raise ValidationError("explicit_roots 的长度必须与 eps_list 一致")

    @classmethod
    def normal_form(cls, k: int, lam: complex = 0j, eps_list: Sequence[complex] = ()) -> "PlanarFieldFamily":
        """形式正规形 ż = z(1+λt^k)，ṫ = t^{k+1}"""
        p = np.zeros((k + 2, 1), dtype=complex)
        p[k + 1, 0] = 1.0
        q = np.zeros((1, k + 1, 1), dtype=complex)
        q[0, k, 0] = lam
        return cls(k=k, eps_list=tuple(eps_list), p=p, q=q, name="normal_form")

    @classmethod
    def quadratic(cls, eps_list: Sequence[complex]) -> "PlanarFieldFamily":
        """ż = z + (t² - ε)，ṫ = t² - ε，奇点 (0, ±√ε)"""
        p = np.zeros((3, 2), dtype=complex)
        p[2, 0], p[0, 1] = 1.0, -1.0
        g = np.ones((1, 1), dtype=complex)
        return cls(k=1, eps_list=tuple(eps_list), p=p, g=g, name="quadratic")

    def _p_coeffs(self, eps: complex) -> np.ndarray:
        if self.p is not None:
            return univariate_at(self.p, eps)
        roots = self.roots_at(eps).roots
        return np.polynomial.polynomial.polyfromroots(roots).astype(complex)

    def roots_at(self, eps: complex) -> FamilyRoots:
        explicit = None
        if self.explicit_roots is not None:
            idx = int(np.argmin([abs(e - eps) for e in self.eps_list]))
            explicit = self.explicit_roots[idx]
        return acquire_roots(self.k, eps, self.p, explicit)

    def roots_family(self) -> List[FamilyRoots]:
        return [self.roots_at(e) for e in self.eps_list]

    def at(self, eps: complex) -> "PlanarField":
        eps = complex(eps)
        q_t = np.stack([univariate_at(self.q[a], eps) for a in range(self.q.shape[0])])
        return PlanarField(p=self._p_coeffs(eps), q=q_t, g=univariate_at(self.g, eps), k=self.k)

    def singular_residual(self, eps: complex) -> float:
        """max |ż|, |ṫ| 在 (0, α_i) 处的值"""
        fld = self.at(eps)
        alphas = self.roots_at(eps).roots
        zeros = np.zeros_like(alphas)
        return float(max(np.max(np.abs(fld.z_dot(zeros, alphas))),
                         np.max(np.abs(fld.t_dot(zeros, alphas)))))

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "k": self.k,
                "eps_list": [complex_to_pair(e) for e in self.eps_list]}


@dataclass(frozen=True)
class PlanarField:
    """固定 ε 的向量场；q 的第 a 行为 z^a 的 t 系数"""

    p: np.ndarray
    q: np.ndarray
    g: np.ndarray
    k: Optional[int] = None

    def q_value(self, z: Any, t: Any) -> Any:
        out = 0
        for a in range(self.q.shape[0] - 1, -1, -1):
            out = out * z + np.polynomial.polynomial.polyval(t, self.q[a])
        return out

    def z_dot(self, z: Any, t: Any) -> Any:
        pt = np.polynomial.polynomial.polyval(t, self.p)
        return z * (1 + self.q_value(z, t)) + np.polynomial.polynomial.polyval(t, self.g) * pt

    def t_dot(self, z: Any, t: Any) -> Any:
        return np.polynomial.polynomial.polyval(t, self.p) + 0 * z


@dataclass(frozen=True)
class LinearPlanarField:
    """线性场 ż = νz，ṫ = μt"""

    nu: complex
    mu: complex
    k: Optional[int] = None

    def z_dot(self, z: Any, t: Any) -> Any:
        return self.nu * z + 0 * t

    def t_dot(self, z: Any, t: Any) -> Any:
        return self.mu * t + 0 * z

    @property
    def multiplier(self) -> complex:
        return complex(np.exp(TWO_PI_I * self.mu / self.nu))


def _field_at(fam: Any, eps: Optional[complex]) -> Any:
    if hasattr(fam, "at"):
        if eps is None:
            raise ValidationError("向量场族需要给出 ε")
        return fam.at(eps)
    return fam


# ---------------------------------------------------------------------------
# 相曲线积分
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathDriver:
    """以 s ∈ [0, 1] 参数化的驱动坐标路径"""

    coordinate: str
    point: Callable[[float], complex]
    velocity: Callable[[float], Any]
    min_steps: int = 1

    def __post_init__(self):
        if self.coordinate not in ("z", "t"):
            raise ValidationError(f"驱动坐标必须是 z 或 t: {self.coordinate}")

    @classmethod
    def loop(cls, delta: float, turns: int = 1) -> "PathDriver":
        """z(s) = δ e^{2πi·turns·s}，逆时针"""
        w = TWO_PI_I * turns
        return cls("z", lambda s: delta * np.exp(w * s), lambda s: w * delta * np.exp(w * s),
                   min_steps=MIN_LOOP_STEPS * max(abs(turns), 1))

    @classmethod
    def segment(cls, start: Any, end: Any, coordinate: str = "z") -> "PathDriver":
        """直线段；t 驱动时 start/end 可为数组（逐分量的段）"""
        a = np.asarray(start, dtype=complex)
        b = np.asarray(end, dtype=complex)
        return cls(coordinate, lambda s: a + s * (b - a), lambda s: b - a)


@dataclass
class PhaseEndpoint:
    values: np.ndarray
    error: np.ndarray
    steps: int


def _solve(rhs, y0: np.ndarray, tol: float, atol: float, min_steps: int):
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="RK45", rtol=tol, atol=atol,
                    max_step=1.0 / min_steps)
    if not sol.success:
        raise StepFailure(f"相曲线积分失败: {sol.message}")
    return sol.y[:, -1], len(sol.t) - 1


def integrate_phase_path(fld: Any, start: Tuple[Any, Any], driver: PathDriver,
                         tol: float = ODE_TOL, atol: float = ODE_ATOL,
                         estimate: bool = True) -> PhaseEndpoint:
    """
    沿驱动路径积分相曲线，另一坐标满足 dy/ds = (ẏ/ẋ)·dx/ds

    start = (z0, t0)；被驱动的坐标必须与 driver.point(0) 一致，
    另一坐标可以是数组（逐分量独立积分）。误差估计取容差缩小 100 倍后
    两次积分的差。

    Raises:
        OffDomain: 驱动坐标的速度 ż 或 ṫ 在路径上为零
        StepFailure: 积分失败
    """
    z0, t0 = start
    driven_z = driver.coordinate == "z"
    y0 = np.atleast_1d(np.asarray(t0 if driven_z else z0, dtype=complex))
    if driven_z and not np.allclose(np.atleast_1d(z0), driver.point(0.0)):
        raise ValidationError("起点的 z 与驱动路径的起点不一致")

    def rhs(s, y):
        x = driver.point(s)
        if driven_z:
            num, den = fld.t_dot(x, y), fld.z_dot(x, y)
        else:
            num, den = fld.z_dot(y, x), fld.t_dot(y, x)
        den = np.asarray(den)
        if np.any(np.abs(den) <= 1e-300):
            raise OffDomain(f"驱动坐标速度在 s = {s:.6f} 处为零")
        return num / den * driver.velocity(s)

    values, steps = _solve(rhs, y0, tol, atol, driver.min_steps)
    error = np.zeros(values.shape)
    if estimate:
        fine, _ = _solve(rhs, y0, tol / 100, atol / 100, driver.min_steps)
        error = np.abs(fine - values)
        values = fine
    return PhaseEndpoint(values=values, error=error, steps=steps)


# ---------------------------------------------------------------------------
# 单值映射
# ---------------------------------------------------------------------------

def circle_grid(radius: float, points: int) -> np.ndarray:
    return radius * np.exp(TWO_PI_I * np.arange(points) / points)


def fit_circle_polynomial(t_grid: np.ndarray, values: np.ndarray, degree: int) -> Tuple[np.ndarray, float]:
    """最小二乘多项式拟合，返回 (升幂系数, 相对残差)"""
    t_grid = np.asarray(t_grid, dtype=complex)
    if len(t_grid) <= degree:
        raise ValidationError(f"网格点数 {len(t_grid)} 不足以拟合 {degree} 次多项式")
    scale = float(np.max(np.abs(t_grid)))
    vander = np.vander(t_grid / scale, degree + 1, increasing=True)
    coeffs, *_ = np.linalg.lstsq(vander, values, rcond=None)
    coeffs = coeffs / scale ** np.arange(degree + 1)
    fitted = np.polynomial.polynomial.polyval(t_grid, coeffs)
    residual = float(np.max(np.abs(fitted - values)) / max(np.max(np.abs(values)), 1e-300))
    return coeffs, residual


def snap_parabolic(coeffs: Sequence[complex], k: int, gate: float = 1e-6) -> np.ndarray:
    """
    把拟合系数对齐到 t + 2πi t^{k+1} + ...

    低阶系数与 t^{k+1} 系数在 gate 内时替换为精确值。

    Raises:
        WrongNormalization: 偏离超过 gate（逆时针环路应给出 +2πi）
    """
    out = np.array(coeffs, dtype=complex)
    if len(out) < k + 2:
        raise ValidationError(f"射流阶数不足 {k + 1}")
    lead = out[k + 1]
    low = np.concatenate([[out[0], out[1] - 1], out[2: k + 1]])
    if abs(lead - TWO_PI_I) > gate or np.any(np.abs(low) > gate):
        raise WrongNormalization(
            f"单值映射的 t^{k + 1} 系数为 {lead}，与 +2πi 不符，检查环路定向"
        )
    out[0], out[1] = 0.0, 1.0
    out[2: k + 1] = 0.0
    out[k + 1] = TWO_PI_I
    return out


@dataclass
class MonodromyGerm:
    """横截面 z = δ 上的单值映射样本与拟合射流"""

    delta: float
    t_grid: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    fitted_jet: Optional[TruncatedSeries] = None
    fit_residual: float = float("nan")
    k: Optional[int] = None
    eps: Optional[complex] = None

    @property
    def multiplier(self) -> complex:
        if self.fitted_jet is None:
            raise ValidationError("没有拟合射流")
        return complex(self.fitted_jet.coeffs[1])

    def normalized_jet(self, gate: float = 1e-6) -> TruncatedSeries:
        """对齐到抛物规范形式的拟合射流"""
        if self.fitted_jet is None or self.k is None:
            raise ValidationError("没有拟合射流")
        coeffs = snap_parabolic(np.asarray(self.fitted_jet.coeffs, dtype=complex), self.k, gate)
        return TruncatedSeries.from_coeffs(coeffs, self.fitted_jet.order)

    def to_map(self) -> PolynomialMap:
        if self.fitted_jet is None:
            raise ValidationError("没有拟合射流")
        return PolynomialMap(np.asarray(self.fitted_jet.coeffs, dtype=complex))

    def rows(self) -> List[Dict[str, float]]:
        """单值网格 CSV 行：t0_re, t0_im, ft_re, ft_im, err_est"""
        return [
            {"t0_re": t.real, "t0_im": t.imag, "ft_re": v.real, "ft_im": v.imag, "err_est": float(e)}
            for t, v, e in zip(self.t_grid, self.values, self.errors)
        ]

    def to_json(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "eps": None if self.eps is None else complex_to_pair(self.eps),
            "fit_residual": self.fit_residual,
            "fitted_jet": None if self.fitted_jet is None else self.fitted_jet.to_json(),
            "grid": self.rows(),
        }


def monodromy_germ(fam: Any, eps: Optional[complex] = None, delta: float = MONODROMY_DELTA,
                   t_grid: Optional[Sequence[complex]] = None, degree: Optional[int] = None,
                   grid_radius: float = MONODROMY_GRID_RADIUS,
                   grid_points: int = MONODROMY_GRID_POINTS, tol: float = ODE_TOL,
                   fit: bool = True) -> MonodromyGerm:
    """
    沿 z(s) = δe^{2πis} 积分 dt/ds = 2πi·z·ṫ/ż，得到 t0 ↦ f(t0)

    拟合射流在圆周网格上做最小二乘，次数缺省为 k+3。fam 可以是向量场族
    （配合 eps）或单个向量场。

    Raises:
        StepFailure: 积分失败
        FitBad: 拟合相对残差超过 FIT_RESIDUAL_THRESHOLD
    """
    fld = _field_at(fam, eps)
    k = getattr(fam, "k", None)
    if t_grid is None:
        t_grid = circle_grid(grid_radius, grid_points)
    t_grid = np.asarray(t_grid, dtype=complex)
    end = integrate_phase_path(fld, (delta, t_grid), PathDriver.loop(delta), tol=tol)
    germ = MonodromyGerm(delta=delta, t_grid=t_grid, values=end.values, errors=end.error,
                         k=k, eps=None if eps is None else complex(eps))
    if fit:
        degree = degree if degree is not None else (k or 1) + 3
        coeffs, residual = fit_circle_polynomial(t_grid, end.values, degree)
        germ.fitted_jet = TruncatedSeries.from_coeffs(coeffs, degree)
        germ.fit_residual = residual
        if residual > FIT_RESIDUAL_THRESHOLD:
            raise FitBad(f"单值射流拟合残差 {residual:.3e} 超过阈值 {FIT_RESIDUAL_THRESHOLD:.1e}")
    get_monitor().record_stage("monodromy_germ", residual=germ.fit_residual,
                               iterations=end.steps, precision="double",
                               error_estimate=float(np.max(end.error)))
    logger.debug("单值映射: δ=%s，%d 个网格点，最大误差估计 %.2e", delta, len(t_grid),
                 float(np.max(end.error)))
    return germ


def integral_from_time(tau: Any) -> Any:
    """典范首次积分在横截面上的限制 e^{2πiτ}"""
    out = np.exp(TWO_PI_I * np.asarray(tau, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


class MonodromyMapFamily:
    """
    把平面族的单值映射作为映射族

    每个 ε 的单值映射在较大圆周上拟合为多项式 P，不动点取 P(t) = t 在
    α_i(ε) 附近的根，再写成 t + 2πi·N(t)·∏(t - α_s) 的分解形式，
    于是 Koenigs 与 Fatou 的工具可以直接使用。
    """

    def __init__(self, planar: PlanarFieldFamily, delta: float = MONODROMY_DELTA,
                 degree: int = MONODROMY_MAP_DEGREE, radius: float = MONODROMY_MAP_RADIUS,
                 points: int = MONODROMY_MAP_POINTS, tol: float = ODE_TOL):
        self.planar = planar
        self.k = planar.k
        self.eps_list = planar.eps_list
        self.delta = delta
        self.degree = degree
        self.radius = radius
        self.points = points
        self.tol = tol
        self._polys: Dict[complex, np.ndarray] = {}
        self._maps: Dict[complex, Tuple[FamilyRoots, FactoredMap]] = {}
        self._charts: Dict[float, Any] = {}
        self._lambda: Optional[complex] = None

    def polynomial(self, eps: complex) -> np.ndarray:
        eps = complex(eps)
        if eps not in self._polys:
            germ = monodromy_germ(self.planar, eps, delta=self.delta,
                                  t_grid=circle_grid(self.radius, self.points),
                                  tol=self.tol, fit=False)
            coeffs, residual = fit_circle_polynomial(germ.t_grid, germ.values, self.degree)
            if residual > FIT_RESIDUAL_THRESHOLD:
                raise FitBad(f"ε = {eps} 的单值映射拟合残差 {residual:.3e}")
            self._polys[eps] = coeffs
        return self._polys[eps]

    def _factored(self, eps: complex) -> Tuple[FamilyRoots, FactoredMap]:
        eps = complex(eps)
        if eps not in self._maps:
            coeffs = self.polynomial(eps)
            disp = coeffs.copy()
            disp[1] -= 1.0
            dd = np.polynomial.polynomial.polyder(disp)
            seeds = self.planar.roots_at(eps).roots
            fixed = newton_solve(lambda t: np.polynomial.polynomial.polyval(t, disp),
                                 lambda t: np.polynomial.polynomial.polyval(t, dd),
                                 np.zeros_like(seeds), seeds, tol=1e-15,
                                 scale=max(float(np.max(np.abs(seeds))), 1e-300))
            roots = FamilyRoots(k=self.k, eps=eps, roots=fixed)
            quotient, _ = np.polynomial.polynomial.polydiv(
                disp, np.polynomial.polynomial.polyfromroots(fixed))
            self._maps[eps] = (roots, FactoredMap(fixed, quotient / TWO_PI_I))
        return self._maps[eps]

    def roots_at(self, eps: complex) -> FamilyRoots:
        return self._factored(eps)[0]

    def roots_family(self) -> List[FamilyRoots]:
        return [self.roots_at(e) for e in self.eps_list]

    def at(self, eps: complex) -> FactoredMap:
        return self._factored(eps)[1]

    def unperturbed_germ(self, radius_hint: float = DEFAULT_DELTA, gate: float = 1e-6) -> GermSpec:
        """
        ε = 0 的单值映射芽

        t^{k+1} 系数必须为 +2πi（逆时针环路的定向约定），在 gate 内对齐后
        固定为精确值。

        Raises:
            WrongNormalization: 系数偏离 2πi 超过 gate
        """
        coeffs = snap_parabolic(self.polynomial(0j), self.k, gate)
        return GermSpec.polynomial(coeffs, k=self.k, radius_hint=radius_hint)

    def unperturbed_lambda(self) -> complex:
        from tools.fatou_ev import conjugator_order
        from tools.formal_normalform import formal_invariant

        if self._lambda is None:
            germ = self.unperturbed_germ()
            self._lambda = formal_invariant(germ.jet(conjugator_order(self.k)), self.k).lam
        return self._lambda

    def unperturbed_charts(self, radius_hint: float = DEFAULT_DELTA):
        from tools.fatou_ev import normalize_charts

        if radius_hint not in self._charts:
            self._charts[radius_hint] = normalize_charts(self.unperturbed_germ(radius_hint))
        return self._charts[radius_hint]


# ---------------------------------------------------------------------------
# 分界线
# ---------------------------------------------------------------------------

@dataclass
class SeparatrixTrace:
    alpha: complex
    slope_at_alpha: complex
    t: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    certified: np.ndarray
    jet: Optional[TruncatedSeries] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def samples(self) -> List[Tuple[complex, complex]]:
        return list(zip(self.t, self.z))

    def assert_certified(self) -> None:
        if not np.all(self.certified):
            bad = int(np.count_nonzero(~self.certified))
            raise InequalityViolated(f"{bad} 个样本不满足 |Q′| < 1 与 |Q| < |t-α|")

    def to_json(self) -> Dict[str, Any]:
        return {
            "alpha": complex_to_pair(self.alpha),
            "slope": complex_to_pair(self.slope_at_alpha),
            "samples": [[t.real, t.imag, z.real, z.imag] for t, z in zip(self.t, self.z)],
            "certified": [bool(c) for c in self.certified],
        }


def _shifted_poly(coeffs: np.ndarray, alpha: complex, order: int) -> np.ndarray:
    """c(α+u) 的 u 升幂系数，截断到 order"""
    shifted = np.asarray(P(coeffs)(P([alpha, 1.0])).coef, dtype=complex)
    out = np.zeros(order + 1, dtype=complex)
    n = min(len(shifted), order + 1)
    out[:n] = shifted[:n]
    return out


def _conv(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def separatrix_jet(fld: PlanarField, alpha: complex, order: int = SEPARATRIX_JET_ORDER) -> TruncatedSeries:
    """
    z = Q(α+u) = Σ c_m u^m 的逐阶解：Q′·P = Q·(1+q(Q, α+u)) + G·P

    u^m 阶的方程对 c_m 的系数为 M_m = m·p′(α) - 1 - q(0, α)。

    Raises:
        ValidationError: 某阶 M_m 为零（共振）
    """
    pu = _shifted_poly(fld.p, alpha, order + 1)
    gu = _shifted_poly(fld.g, alpha, order)
    Qrows = [_shifted_poly(fld.q[a], alpha, order) for a in range(fld.q.shape[0])]
    q0 = Qrows[0][0]
    gp = _conv(gu, pu, order)
    c = np.zeros(order + 1, dtype=complex)

    def residual(cs: np.ndarray) -> np.ndarray:
        dq = np.arange(1, order + 1) * cs[1:]
        lhs = np.zeros(order + 1, dtype=complex)
        prod = _conv(dq, pu, order)
        lhs[: len(prod)] = prod
        qval = np.zeros(order + 1, dtype=complex)
        power = np.zeros(order + 1, dtype=complex)
        power[0] = 1.0
        for row in Qrows:
            qval += _conv(power, row, order)
            power = _conv(power, cs, order)
        rhs = cs + _conv(cs, qval, order) + gp
        return lhs - rhs

    for m in range(1, order + 1):
        M = m * pu[1] - 1 - q0
        if abs(M) <= 1e-14:
            raise ValidationError(f"分界线级数在 {m} 阶共振")
        c[m] = -residual(c)[m] / M
    return TruncatedSeries.from_coeffs(c, order)


def separatrix_slope(fld: PlanarField, alpha: complex) -> complex:
    """线性化特征向量的斜率 g·p′/(p′ - 1 - q(0,α))"""
    dp = np.polynomial.polynomial.polyval(alpha, np.polynomial.polynomial.polyder(fld.p))
    g = np.polynomial.polynomial.polyval(alpha, fld.g)
    q0 = fld.q_value(0.0, alpha)
    return complex(g * dp / (dp - 1 - q0))


def separatrix_trace(fam: Any, eps: Optional[complex], i: int, t_targets: Sequence[complex],
                     jet_order: int = SEPARATRIX_JET_ORDER, tol: float = ODE_TOL,
                     strict: bool = False) -> SeparatrixTrace:
    """
    追踪经过 (0, α_i) 的分界线 z = Q(t)

    |t-α| 不超过 SEPARATRIX_JET_FRACTION 乘最近根距离时直接用局部级数；
    更远的目标从该半径处沿直线积分 dz/dt = ż/ṫ。每个样本检验
    |Q′(t)| < 1 与 |Q(t)| < |t-α|。

    Raises:
        InequalityViolated: strict 时有样本不满足不等式
        StepFailure: 积分失败
    """
    fld = _field_at(fam, eps)
    roots = fam.roots_at(eps).roots if hasattr(fam, "roots_at") else np.zeros(1, dtype=complex)
    if not 0 <= i < len(roots):
        raise ValidationError(f"奇点序号越界: {i}")
    alpha = complex(roots[i])
    others = np.delete(roots, i)
    rho = float(np.min(np.abs(others - alpha))) if len(others) else 1.0
    targets = np.atleast_1d(np.asarray(t_targets, dtype=complex))

    if jet_order > 1:
        jet = separatrix_jet(fld, alpha, jet_order)
        reach = SEPARATRIX_JET_FRACTION * rho
    else:
        jet = TruncatedSeries.from_coeffs([0.0, separatrix_slope(fld, alpha)], 1)
        reach = SEPARATRIX_SEED_OFFSET * rho
    coeffs = np.asarray(jet.coeffs, dtype=complex)
    dcoeffs = np.polynomial.polynomial.polyder(coeffs)

    u = targets - alpha
    near = np.abs(u) <= reach
    z = np.zeros(targets.shape, dtype=complex)
    z[near] = np.polynomial.polynomial.polyval(u[near], coeffs)
    far = ~near
    if np.any(far):
        direction = u[far] / np.abs(u[far])
        t_start = alpha + reach * direction
        z_start = np.polynomial.polynomial.polyval(reach * direction, coeffs)
        end = integrate_phase_path(fld, (z_start, t_start),
                                   PathDriver.segment(t_start, targets[far], "t"), tol=tol)
        z[far] = end.values

    dz = np.empty(targets.shape, dtype=complex)
    dz[near] = np.polynomial.polynomial.polyval(u[near], dcoeffs)
    if np.any(far):
        dz[far] = fld.z_dot(z[far], targets[far]) / fld.t_dot(z[far], targets[far])
    certified = (np.abs(dz) < 1) & (np.abs(z) < np.abs(u))
    trace = SeparatrixTrace(alpha=alpha, slope_at_alpha=complex(coeffs[1]), t=targets, z=z,
                            dz=dz, certified=certified, jet=jet,
                            metadata={"reach": reach, "jet_order": jet_order})
    if not np.all(certified):
        logger.warning("分界线有 %d 个样本离开认证区域", int(np.count_nonzero(~certified)))
        if strict:
            trace.assert_certified()
    return trace


__all__ = [
    "PlanarFieldFamily",
    "PlanarField",
    "LinearPlanarField",
    "PathDriver",
    "PhaseEndpoint",
    "integrate_phase_path",
    "circle_grid",
    "fit_circle_polynomial",
    "snap_parabolic",
    "MonodromyGerm",
    "monodromy_germ",
    "integral_from_time",
    "MonodromyMapFamily",
    "SeparatrixTrace",
    "separatrix_jet",
    "separatrix_slope",
    "separatrix_trace",
]
