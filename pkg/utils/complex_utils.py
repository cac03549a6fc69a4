"""
复数工具模块

提供复数与 [re, im] 形式的转换、角度规范化、稀疏多项式表的稠密化、
二元多项式求值以及伴随矩阵求根加牛顿修正等通用函数。
"""

import logging
import math
from typing import Any, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from config import NEWTON_MAX_STEPS
from utils.validation import NewtonFailed, ValidationError, ensure_finite_complex

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def complex_to_pair(value: complex) -> List[float]:
    """
    将复数转换为 [re, im]

    Args:
        value: 复数

    Returns:
        [实部, 虚部]
    """
    value = complex(value)
    return [float(value.real), float(value.imag)]


def pair_to_complex(pair: Any) -> complex:
    """将 [re, im] 转换为复数"""
    return ensure_finite_complex(pair, "复数")


def canonical_angle(angle: Any) -> Any:
    """把角度规范到 [0, 2π)"""
    out = np.mod(np.asarray(angle, dtype=float), TWO_PI)
    # 绝对值极小的负角度取模后会舍入为 2π
    out = np.where(out >= TWO_PI, 0.0, out)
    return out if out.ndim else float(out)


def wrap_angle(angle: Any) -> Any:
    """把角度规范到 (-π, π]"""
    out = -np.mod(-np.asarray(angle, dtype=float) + math.pi, TWO_PI) + math.pi
    return out if np.ndim(out) else float(out)


def angular_distance(a: Any, b: Any) -> Any:
    """两个角度之间最短弧长，取值 [0, π]"""
    return np.abs(wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def densify_terms(terms: Iterable[Mapping[str, Any]], variables: Sequence[str],
                  shape: Tuple[int, ...] = None) -> np.ndarray:
    """
    把稀疏项列表转换为稠密系数表

    Args:
        terms: 形如 {"t": 2, "eps": 1, "c": [re, im]} 的项
        variables: 指数变量名顺序，例如 ("t", "eps")
        shape: 目标形状，缺省时取各变量最大次数 + 1

    Returns:
        complex 数组，table[i, j, ...] 为对应单项式系数
    """
    entries = []
    for term in terms:
        try:
            exps = tuple(int(term.get(v, 0)) for v in variables)
        except (TypeError, ValueError):
            raise ValidationError(f"无效的多项式项: {term}")
        if any(e < 0 for e in exps):
            raise ValidationError(f"指数必须非负: {term}")
        if "c" not in term:
            raise ValidationError(f"多项式项缺少系数 c: {term}")
        entries.append((exps, pair_to_complex(term["c"])))
    if shape is None:
        shape = tuple(
            max([e[i] for e, _ in entries], default=0) + 1 for i in range(len(variables))
        )
    table = np.zeros(shape, dtype=complex)
    for exps, value in entries:
        if any(e >= s for e, s in zip(exps, shape)):
            raise ValidationError(f"多项式项超出表的范围 {shape}: {exps}")
        table[exps] += value
    return table


def eval_bivariate(table: np.ndarray, t: Any, eps: complex) -> Any:
    """
    求值 Σ table[m, r] t^m ε^r

    Args:
        table: 形状 (M, R) 的系数表，第一维为 t 的次数
        t: 标量或数组
        eps: 参数

    Returns:
        与 t 同形状的值
    """
    return np.polynomial.polynomial.polyval(t, univariate_at(table, eps))


def univariate_at(table: np.ndarray, eps: complex) -> np.ndarray:
    """在给定 ε 处把二元表收缩为 t 的一元系数（升幂）"""
    table = np.asarray(table, dtype=complex)
    if table.ndim == 1:
        return table
    powers = eps ** np.arange(table.shape[1])
    return table @ powers


def polish_root(coeffs: np.ndarray, root: complex, steps: int = 3) -> complex:
    """对一元多项式（升幂系数）的根做牛顿修正"""
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()
    for _ in range(steps):
        d = dpoly(root)
        if d == 0:
            break
        step = poly(root) / d
        root = root - step
        if abs(step) <= 1e-16 * max(abs(root), 1e-300):
            break
    return complex(root)


def polynomial_roots(coeffs: np.ndarray, polish: bool = True) -> np.ndarray:
    """
    伴随矩阵特征值求根，随后对每个根做一次牛顿修正

    Args:
        coeffs: 升幂系数
        polish: 是否做牛顿修正

    Returns:
        复根数组
    """
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if len(coeffs) < 2:
        return np.zeros(0, dtype=complex)
    roots = np.polynomial.polynomial.polyroots(coeffs).astype(complex)
    if polish:
        roots = np.array([polish_root(coeffs, r, steps=1) for r in roots], dtype=complex)
    return roots


def newton_solve(func, dfunc, target: Any, seed: Any, tol: float = 1e-14,
                 max_steps: int = NEWTON_MAX_STEPS, scale: Any = None) -> np.ndarray:
    """
    向量化复牛顿法求解 func(x) = target

    Args:
        func: 函数
        dfunc: 导函数
        target: 目标值（标量或数组）
        seed: 初值
        tol: 相对步长容差
        max_steps: 最大步数
        scale: 步长的相对尺度，缺省为 |x|

    Returns:
        解数组

    Raises:
        NewtonFailed: 超过最大步数仍未收敛或出现非有限值
    """
    x = np.array(seed, dtype=complex, copy=True)
    target = np.asarray(target, dtype=complex)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_steps):
        fx = func(x) - target
        dx = dfunc(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(active, fx / dx, 0.0)
        if not np.all(np.isfinite(step)):
            raise NewtonFailed("牛顿迭代出现非有限值")
        x = x - step
        ref = np.abs(x) if scale is None else np.broadcast_to(np.abs(scale), x.shape)
        active = np.abs(step) > tol * np.maximum(ref, 1e-300)
        if not np.any(active):
            return x
    raise NewtonFailed(f"牛顿迭代 {max_steps} 步内未收敛")
