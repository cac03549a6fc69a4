"""
数值精度后端

提供 double 与 double-double 两种工作精度。double-double 模式使用
mpmath 的 106 位二进制精度，数组以 object 类型保存 mpmath.mpc。
"""

import logging
import threading
from contextlib import contextmanager
from typing import Any, Iterator

import mpmath
import numpy as np

from config import DEFAULT_PRECISION, DOUBLE_DOUBLE_PREC
from utils.validation import ValidationError

logger = logging.getLogger(__name__)

PRECISION_MODES = ("double", "double-double")

_state = threading.local()

_mp_exp = np.frompyfunc(mpmath.exp, 1, 1)
_mp_log = np.frompyfunc(mpmath.log, 1, 1)
_mp_mpc = np.frompyfunc(mpmath.mpc, 1, 1)
_mp_abs = np.frompyfunc(lambda x: float(abs(x)), 1, 1)
_mp_to_complex = np.frompyfunc(complex, 1, 1)


def get_precision() -> str:
    """返回当前线程的精度模式"""
    return getattr(_state, "mode", DEFAULT_PRECISION)


def set_precision(mode: str) -> None:
    """设置当前线程的精度模式"""
    if mode not in PRECISION_MODES:
        raise ValidationError(f"不支持的精度模式: {mode}，可选 {PRECISION_MODES}")
    _state.mode = mode


@contextmanager
def precision_mode(mode: str) -> Iterator[str]:
    """临时切换精度模式，double-double 下同时提高 mpmath 工作精度"""
    previous = get_precision()
    set_precision(mode)
    try:
        if mode == "double-double":
            with mpmath.workprec(DOUBLE_DOUBLE_PREC):
                yield mode
        else:
            yield mode
    finally:
        set_precision(previous)


def is_extended() -> bool:
    return get_precision() == "double-double"


def working_array(values: Any) -> np.ndarray:
    """把输入转换为当前精度的复数组"""
    arr = np.asarray(values)
    if is_extended():
        if arr.dtype == object:
            return arr
        return np.asarray(_mp_mpc(arr.astype(complex)), dtype=object)
    return arr.astype(complex)


def to_double(values: Any) -> np.ndarray:
    """转换回 complex128"""
    arr = np.asarray(values)
    if arr.dtype == object:
        return np.asarray(_mp_to_complex(arr), dtype=complex)
    return arr.astype(complex)


def cexp(values: Any) -> Any:
    arr = np.asarray(values)
    if arr.dtype == object:
        return _mp_exp(arr)
    return np.exp(arr)


def clog(values: Any) -> Any:
    arr = np.asarray(values)
    if arr.dtype == object:
        return _mp_log(arr)
    return np.log(arr)


def cabs(values: Any) -> np.ndarray:
    """模长，始终返回 float64"""
    arr = np.asarray(values)
    if arr.dtype == object:
        return np.asarray(_mp_abs(arr), dtype=float)
    return np.abs(arr)


def zeros(shape: Any) -> np.ndarray:
    """当前精度下的零数组"""
    if is_extended():
        out = np.empty(shape, dtype=object)
        out[...] = mpmath.mpc(0)
        return out
    return np.zeros(shape, dtype=complex)


__all__ = [
    "PRECISION_MODES",
    "get_precision",
    "set_precision",
    "precision_mode",
    "is_extended",
    "working_array",
    "to_double",
    "cexp",
    "clog",
    "cabs",
    "zeros",
]
