"""
参数验证工具
提供参数验证功能与数值计算的异常层次
"""

import math
from typing import Union, Any


def validate_numeric_range(value: Union[int, float], min_val: Union[int, float],
                           max_val: Union[int, float], param_name: str = None) -> bool:
    """
    验证数值是否在指定范围内

    Args:
        value: 要验证的值
        min_val: 最小值
        max_val: 最大值
        param_name: 参数名称（用于错误消息）

    Returns:
        bool: 是否在范围内
    """
    try:
        num_value = float(value)
        return min_val <= num_value <= max_val
    except (ValueError, TypeError):
        return False


def validate_complex_pair(value: Any) -> bool:
    """
    验证 [re, im] 形式的复数

    Args:
        value: 待验证对象

    Returns:
        bool: 是否为两个有限实数组成的列表
    """
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        return False
    try:
        return all(math.isfinite(float(v)) for v in value)
    except (ValueError, TypeError):
        return False


class ValidationError(Exception):
    """参数验证错误"""
    pass


# ---------------------------------------------------------------------------
# 数值计算错误
# ---------------------------------------------------------------------------

class ComputationError(Exception):
    """数值计算错误的基类"""
    pass


class InnerNotGerm(ComputationError):
    """复合的内层级数常数项非零"""


class NotInvertible(ComputationError):
    """级数一次项为零，不可反演"""


class BadOrder(ComputationError):
    """截断阶数或最低阶不满足要求"""


class WrongNormalization(ComputationError):
    """芽的 t^{k+1} 系数不等于 2πi"""


class OrderTooLow(ComputationError):
    """截断阶数低于 2k+1"""


class SingularSolve(ComputationError):
    """线性方程组奇异"""


class DegenerateInput(ComputationError):
    """族不满足非退化条件"""


class NotRegular(ComputationError):
    """极限多边形不是正多边形"""


class RootsOutside(ComputationError):
    """根落在圆盘 |t| < δ 之外"""


class NotConverged(ComputationError):
    """迭代或极限未收敛"""


class NewtonFailed(NotConverged):
    """牛顿反演发散"""


class StepFailure(NotConverged):
    """自适应积分步长下溢"""


class OutsideDomain(ComputationError):
    """点不在定义域内"""


class OriginPole(ComputationError):
    """在原点处求值"""


class BranchCut(ComputationError):
    """路径穿过割线"""


class BranchMismatch(ComputationError):
    """半平面方向与目标图不一致"""


class NoOverlap(ComputationError):
    """两个图的定义域不相交"""


class NotUnivalent(ComputationError):
    """在 0 附近无法单值反演"""


class OffDomain(ComputationError):
    """积分路径离开全纯域"""


class FitBad(ComputationError):
    """多项式拟合残差过大"""


class InequalityViolated(ComputationError):
    """分界线样本离开证书区域"""


# ---------------------------------------------------------------------------
# 参数检查
# ---------------------------------------------------------------------------

def ensure_positive_int(value: Any, param_name: str, minimum: int = 1) -> int:
    """
    确保参数是不小于 minimum 的整数

    Raises:
        ValidationError: 当参数无效时
    """
    try:
        ivalue = int(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{param_name} 必须是整数: {value}")
    if ivalue != value or ivalue < minimum:
        raise ValidationError(f"{param_name} 必须是 >= {minimum} 的整数: {value}")
    return ivalue


def ensure_in_range(value: Any, min_val: float, max_val: float, param_name: str) -> float:
    """
    确保数值在指定范围内

    Raises:
        ValidationError: 当数值越界时
    """
    if not validate_numeric_range(value, min_val, max_val, param_name):
        raise ValidationError(f"{param_name} 必须在 [{min_val}, {max_val}] 范围内: {value}")
    return float(value)


def ensure_finite_complex(value: Any, param_name: str) -> complex:
    """
    确保参数是有限复数，接受 complex 或 [re, im]

    Raises:
        ValidationError: 当参数不是有限复数时
    """
    if isinstance(value, (list, tuple)):
        if not validate_complex_pair(value):
            raise ValidationError(f"{param_name} 必须是 [re, im]: {value}")
        return complex(float(value[0]), float(value[1]))
    try:
        cvalue = complex(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{param_name} 不是复数: {value}")
    if not (math.isfinite(cvalue.real) and math.isfinite(cvalue.imag)):
        raise ValidationError(f"{param_name} 必须是有限值: {value}")
    return cvalue


def ensure_order(order: Any, minimum: int = 1) -> int:
    """确保截断阶数有效"""
    return ensure_positive_int(order, "截断阶数", minimum)
