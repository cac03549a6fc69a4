"""
径向扇形几何

虚分割射线、好扇形判定、奇点对应的扇形、族的非退化判据、
极限正多边形以及 k=1 时的旋转圆盘 D_ε。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    ANGLE_EPS,
    DEFAULT_DELTA,
    NONDEGENERACY_THRESHOLD,
    POLYGON_DEFECT_THRESHOLD,
)
from utils.complex_utils import (
    TWO_PI,
    angular_distance,
    canonical_angle,
    complex_to_pair,
    wrap_angle,
)
from utils.validation import (
    DegenerateInput,
    NotRegular,
    RootsOutside,
    ValidationError,
    ensure_positive_int,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sector:
    """径向扇形：平分线辐角、张角与半径"""

    bisector_arg: float
    opening: float
    radius: float = DEFAULT_DELTA
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 < self.opening < TWO_PI):
            raise ValidationError(f"扇形张角必须在 (0, 2π) 内: {self.opening}")
        if not self.radius > 0:
            raise ValidationError(f"扇形半径必须为正: {self.radius}")
        object.__setattr__(self, "bisector_arg", canonical_angle(self.bisector_arg))

    def contains(self, t: Any) -> Any:
        t = np.asarray(t, dtype=complex)
        r = np.abs(t)
        dist = angular_distance(np.angle(t), self.bisector_arg)
        return (r > 0) & (r < self.radius) & (dist < self.opening / 2)

    def contains_direction(self, angle: float, closed: bool = False) -> bool:
        dist = float(angular_distance(angle, self.bisector_arg))
        half = self.opening / 2
        return dist <= half + ANGLE_EPS if closed else dist < half - ANGLE_EPS

    def boundary_args(self) -> Tuple[float, float]:
        half = self.opening / 2
        return (canonical_angle(self.bisector_arg - half), canonical_angle(self.bisector_arg + half))

    def to_json(self) -> Dict[str, Any]:
        out = {"bisector": self.bisector_arg, "opening": self.opening, "radius": self.radius}
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out


@dataclass(frozen=True)
class FamilyRoots:
    """参数 ε 处的 k+1 个根 α_0..α_k"""

    k: int
    eps: complex
    roots: np.ndarray

    def __post_init__(self):
        roots = np.asarray(self.roots, dtype=complex)
        if roots.shape != (self.k + 1,):
            raise ValidationError(f"k={self.k} 时应有 {self.k + 1} 个根，得到 {roots.shape}")
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "eps", complex(self.eps))

    def is_centered(self, rel_tol: float = 1e-12) -> bool:
        scale = float(np.max(np.abs(self.roots)))
        return abs(self.roots.sum()) <= rel_tol * max(scale, 1e-300)

    def min_separation(self) -> float:
        diff = np.abs(self.roots[:, None] - self.roots[None, :])
        diff[np.diag_indices_from(diff)] = np.inf
        return float(diff.min())

    def diameter(self) -> float:
        return float(np.max(np.abs(self.roots[:, None] - self.roots[None, :])))

    def rotated(self, phi: float) -> "FamilyRoots":
        return FamilyRoots(self.k, self.eps, self.roots * np.exp(1j * phi))

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "eps": complex_to_pair(self.eps),
            "roots": [complex_to_pair(r) for r in self.roots],
        }


def _by_decreasing_eps(roots_family: Sequence[FamilyRoots]) -> List[FamilyRoots]:
    return sorted(roots_family, key=lambda fr: -abs(fr.eps))


def imaginary_dividing_rays(k: int) -> np.ndarray:
    """
    虚分割射线 {t^k ∈ iR} 的辐角 π(1+2j)/(2k)，j = 0..2k-1

    Args:
        k: 抛物重数

    Returns:
        长度 2k 的辐角数组，位于 [0, 2π)
    """
    k = ensure_positive_int(k, "k")
    j = np.arange(2 * k)
    return canonical_angle(np.pi * (1 + 2 * j) / (2 * k))


def real_dividing_line_args(k: int) -> np.ndarray:
    """实分割直线 {t^k ∈ R} 的方向（模 π）"""
    return np.pi * np.arange(k) / k


def is_good_sector(s: Sector, k: int) -> Tuple[bool, Optional[int]]:
    """
    判定 s 是否为好扇形：开扇形恰含一条虚分割射线，闭扇形不含其他射线

    Returns:
        (是否为好扇形, 所含射线的序号 j)
    """
    rays = imaginary_dividing_rays(k)
    inside = [j for j, r in enumerate(rays) if s.contains_direction(r)]
    closed = [j for j, r in enumerate(rays) if s.contains_direction(r, closed=True)]
    if len(inside) == 1 and len(closed) == 1:
        return True, inside[0]
    return False, None


def nearest_ray(angle: float, k: int) -> Tuple[int, float]:
    """离给定辐角最近的虚分割射线及有向角差（angle - r_j）"""
    rays = imaginary_dividing_rays(k)
    diffs = wrap_angle(angle - rays)
    j = int(np.argmin(np.abs(diffs)))
    return j, float(diffs[j])


def limit_vertex_args(roots_family: Sequence[FamilyRoots]) -> np.ndarray:
    """根的极限径向辐角；样本不少于 3 个时用极限多边形，否则用最小 ε 处的根"""
    ordered = _by_decreasing_eps(roots_family)
    if len(ordered) >= 3:
        fit = limit_polygon(ordered, threshold=np.inf)
        return canonical_angle(np.angle(fit.vertices))
    last = ordered[-1]
    centered = last.roots - last.roots.mean()
    return canonical_angle(np.angle(centered))


def assign_rays(roots_family: Sequence[FamilyRoots], tol: float = 1e-9) -> List[int]:
    """每个根对应的最近虚分割射线序号 j_i"""
    k = roots_family[0].k
    out = []
    for a in limit_vertex_args(roots_family):
        j, d = nearest_ray(float(a), k)
        if abs(d) >= np.pi / (2 * k) - tol:
            raise DegenerateInput(
                f"根的径向射线位于两条虚分割射线正中（角差 {abs(d):.3e}），族退化"
            )
        out.append(j)
    return out


def sector_for_singularity(roots_family: Sequence[FamilyRoots], i: int,
                           radius: float = DEFAULT_DELTA,
                           tol: float = 1e-9) -> Tuple[Sector, int]:
    """
    为第 i 个奇点族构造 j_i-好扇形

    k ≥ 2 时扇形以 A_i 的径向射线为平分线，张角 π/k + 2m/3，
    m = π/(2k) - |a - r_j| 为角度余量。k = 1 时扇形包含半平面
    {(-1)^j Im t > 0} 与 α_i 的径向射线，两侧再放宽 m/3。

    Returns:
        (扇形, 射线序号 j_i)

    Raises:
        DegenerateInput: 径向射线与两条虚分割射线等距
    """
    if not roots_family:
        raise ValidationError("根族样本为空")
    k = roots_family[0].k
    a = float(limit_vertex_args(roots_family)[i])
    j, d = nearest_ray(a, k)
    margin = np.pi / (2 * k) - abs(d)
    if margin <= tol:
        raise DegenerateInput(
            f"奇点 {i} 的径向射线与两条虚分割射线等距，不满足非退化条件"
        )
    r = float(imaginary_dividing_rays(k)[j])
    if k == 1:
        a_rel = r + d
        lo = min(r - np.pi / 2, a_rel - np.pi / 2) - margin / 3
        hi = max(r + np.pi / 2, a_rel + np.pi / 2) + margin / 3
        bisector, opening = (lo + hi) / 2, hi - lo
    else:
        bisector, opening = a, np.pi / k + 2 * margin / 3
    sector = Sector(bisector, opening, radius,
                    metadata={"ray": j, "margin": margin, "vertex_arg": a})
    logger.debug("奇点 %d -> 射线 %d，余量 %.4f，张角 %.4f", i, j, margin, opening)
    return sector, j


@dataclass(frozen=True)
class PolygonFit:
    """极限多边形：外推顶点与正多边形偏差"""

    vertices: np.ndarray
    defect: float
    rotation: float
    circumradius: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "vertices": [complex_to_pair(v) for v in self.vertices],
            "defect": self.defect,
            "rotation": self.rotation,
            "circumradius": self.circumradius,
        }


def _unit_diameter(fr: FamilyRoots) -> np.ndarray:
    centered = fr.roots - fr.roots.mean()
    return centered / fr.diameter()


def _match(reference: np.ndarray, points: np.ndarray) -> np.ndarray:
    """按最近邻把 points 排成与 reference 对应的顺序"""
    out = np.empty_like(reference)
    free = list(range(len(points)))
    for i, ref in enumerate(reference):
        j = min(free, key=lambda m: abs(points[m] - ref))
        out[i] = points[j]
        free.remove(j)
    return out


def regular_fit(vertices: np.ndarray) -> Tuple[float, float, float]:
    """
    用单位直径正多边形拟合顶点

    Returns:
        (偏差, 旋转角 φ, 外接圆半径)
    """
    n = len(vertices)
    order = np.argsort(canonical_angle(np.angle(vertices)))
    v = vertices[order] - vertices.mean()
    radius = 1.0 / (2.0 * math.sin(math.pi * (n // 2) / n))
    omega = np.exp(2j * np.pi * np.arange(n) / n)
    phi = float(np.angle(np.sum(v / omega)))
    model = radius * np.exp(1j * phi) * omega
    return float(np.max(np.abs(v - model))), phi, radius


def limit_polygon(roots_family: Sequence[FamilyRoots],
                  threshold: float = POLYGON_DEFECT_THRESHOLD) -> PolygonFit:
    """
    把各样本的根缩放为单位直径，并用最小两个 ε 的线性 Richardson 外推

    外推变量为 s = |ε|^{1/(k+1)}，偏差在最小 ε 处相对拟合正多边形计算。

    Raises:
        ValidationError: 样本少于 3 个
        NotRegular: 偏差超过阈值
    """
    if len(roots_family) < 3:
        raise ValidationError("极限多边形至少需要 3 个 ε 样本")
    ordered = _by_decreasing_eps(roots_family)
    k = ordered[0].k
    p1_fr, p2_fr = ordered[-2], ordered[-1]
    s1 = abs(p1_fr.eps) ** (1.0 / (k + 1))
    s2 = abs(p2_fr.eps) ** (1.0 / (k + 1))
    if s1 == s2:
        raise ValidationError("ε 样本的模必须严格递减")
    p2 = _unit_diameter(p2_fr)
    p1 = _match(p2, _unit_diameter(p1_fr))
    limit = (s1 * p2 - s2 * p1) / (s1 - s2)
    # 顶点按原始根的顺序返回
    defect, phi, radius = regular_fit(p2)
    if defect > threshold:
        raise NotRegular(f"根多边形偏离正多边形 {defect:.3e} > {threshold:.1e}")
    return PolygonFit(vertices=limit, defect=defect, rotation=phi, circumradius=radius)


def _k1_margin(fr: FamilyRoots) -> float:
    direction = np.angle(fr.roots[1] - fr.roots[0]) % np.pi
    return float(min(direction, np.pi - direction))


def _polygon_margin(vertices: np.ndarray, k: int) -> float:
    _, phi, _ = regular_fit(vertices)
    n = k + 1
    axes = phi + np.pi * np.arange(n) / n
    lines = real_dividing_line_args(k)
    d = np.abs(wrap_angle(2 * (axes[:, None] - lines[None, :])) / 2)
    return float(d.min())


def check_nondegenerate(roots_family: Sequence[FamilyRoots], k: int,
                        threshold: float = NONDEGENERACY_THRESHOLD) -> Tuple[bool, float]:
    """
    非退化判据

    k = 1：过两根的直线与实轴的夹角；k ≥ 2：正多边形的对称轴与实分割直线的
    最小角距离。余量取所有 ε 样本上的最小值。

    Returns:
        (是否非退化, 余量)
    """
    if not roots_family:
        return False, 0.0
    try:
        if k == 1:
            margin = min(_k1_margin(fr) for fr in roots_family)
        else:
            margin = min(_polygon_margin(_unit_diameter(fr), k) for fr in roots_family)
    except (ValidationError, ZeroDivisionError, FloatingPointError) as e:
        logger.warning("非退化判据计算失败: %s", e)
        return False, 0.0
    margin = max(margin, 0.0)
    ok = margin > threshold
    if not ok:
        logger.info("族退化: 余量 %.3e <= 阈值 %.3e", margin, threshold)
    return ok, margin


@dataclass(frozen=True)
class RotationDisc:
    """Apollonius 圆族 |(t-α)/(t+α)| = c 中的最大圆盘"""

    center: complex
    radius: float
    apollonius_c: float

    def contains(self, t: Any, closed: bool = True) -> Any:
        d = np.abs(np.asarray(t, dtype=complex) - self.center)
        return d <= self.radius * (1 + 1e-12) if closed else d < self.radius

    def boundary(self, count: int = 64) -> np.ndarray:
        theta = np.linspace(0.0, TWO_PI, count, endpoint=False)
        return self.center + self.radius * np.exp(1j * theta)

    def to_json(self) -> Dict[str, Any]:
        return {
            "center": complex_to_pair(self.center),
            "radius": self.radius,
            "apollonius_c": self.apollonius_c,
        }


def rotation_disc_k1(roots: FamilyRoots, delta: float = DEFAULT_DELTA,
                     index: int = 0) -> RotationDisc:
    """
    k = 1 时围绕 α = roots[index] 的旋转圆盘 D_ε

    沿 α 方向旋转到正实轴后，Apollonius 圆与 |t| = δ 内切的条件给出
    c = (δ-a)/(δ+a)，圆心 (δ + a²/δ)/2，半径 (δ - a²/δ)/2。ε → 0 时
    趋于以 [0, δ·α/|α|] 为直径的圆盘。

    Raises:
        RootsOutside: |α| >= δ
    """
    if roots.k != 1:
        raise ValidationError("旋转圆盘只对 k = 1 定义")
    if not roots.is_centered(1e-9):
        raise ValidationError("旋转圆盘要求两根关于 0 对称")
    alpha = complex(roots.roots[index])
    a = abs(alpha)
    if a >= delta:
        raise RootsOutside(f"|α| = {a:.3e} 不小于 δ = {delta:.3e}")
    direction = alpha / a if a > 0 else 1.0
    c = (delta - a) / (delta + a)
    center = 0.5 * (delta + a * a / delta) * direction
    radius = 0.5 * (delta - a * a / delta)
    return RotationDisc(center=complex(center), radius=float(radius), apollonius_c=float(c))


__all__ = [
    "Sector",
    "FamilyRoots",
    "PolygonFit",
    "RotationDisc",
    "imaginary_dividing_rays",
    "real_dividing_line_args",
    "is_good_sector",
    "nearest_ray",
    "assign_rays",
    "limit_vertex_args",
    "sector_for_singularity",
    "limit_polygon",
    "regular_fit",
    "check_nondegenerate",
    "rotation_disc_k1",
]
