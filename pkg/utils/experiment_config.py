"""
实验配置

TOML 配置文件经 pydantic 模型校验；复数写作 [re, im]，多项式写作稀疏项列表
[{t = 2, eps = 1, c = [1.0, 0.0]}, ...]。任何错误都转换为带字段路径的
ValidationError，不做部分接受。
"""

import hashlib
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from config import (
    DEFAULT_DELTA,
    DEFAULT_OUTPUT_FORMAT,
    DEFAULT_PRECISION,
    DEFAULT_TOL,
    FOURIER_DEPTH,
    FOURIER_RANGE,
    FOURIER_SAMPLES,
    ITERATION_CAP,
    MONODROMY_DELTA,
    SEPARATRIX_JET_ORDER,
)
from utils.complex_utils import densify_terms, pair_to_complex
from utils.validation import ValidationError, validate_complex_pair

logger = logging.getLogger(__name__)

ComplexPair = List[float]
Term = Dict[str, Any]


def _check_pair(value: Any, name: str) -> List[float]:
    if not validate_complex_pair(value):
        raise ValueError(f"{name} 必须是 [re, im]")
    return [float(value[0]), float(value[1])]


def _check_terms(terms: List[Term], allowed: tuple) -> List[Term]:
    for term in terms:
        unknown = set(term) - set(allowed) - {"c"}
        if unknown:
            raise ValueError(f"未知的变量 {sorted(unknown)}，允许 {list(allowed)}")
        if "c" not in term:
            raise ValueError(f"多项式项缺少系数 c: {term}")
        _check_pair(term["c"], "系数 c")
        for v in allowed:
            if v in term and (not isinstance(term[v], int) or term[v] < 0):
                raise ValueError(f"指数 {v} 必须是非负整数: {term}")
    return terms


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FamilyBlock(_Block):
    """映射族或平面向量场族"""

    kind: Literal["map", "field2d"] = "map"
    name: str = "family"
    preset: Optional[Literal["moebius", "quadratic", "normal_form", "linear"]] = None
    k: int = Field(default=1, ge=1, le=8)
    p: List[Term] = Field(default_factory=list)
    q: List[Term] = Field(default_factory=list)
    q_den: List[Term] = Field(default_factory=list)
    g: List[Term] = Field(default_factory=list)
    roots: Optional[List[List[ComplexPair]]] = None
    lam: ComplexPair = Field(default_factory=lambda: [0.0, 0.0])
    c: ComplexPair = Field(default_factory=lambda: [0.3, 0.0])
    nu: ComplexPair = Field(default_factory=lambda: [1.0, 0.0])
    mu: ComplexPair = Field(default_factory=lambda: [0.0, 0.0])

    @field_validator("lam", "c", "nu", "mu")
    @classmethod
    def _pair(cls, v):
        return _check_pair(v, "复数")

    @field_validator("roots")
    @classmethod
    def _roots(cls, v):
        if v is not None:
            for row in v:
                for pair in row:
                    _check_pair(pair, "根")
        return v

    @model_validator(mode="after")
    def _terms(self):
        map_vars = ("t", "eps")
        q_vars = map_vars if self.kind == "map" else ("z", "t", "eps")
        _check_terms(self.p, map_vars)
        _check_terms(self.q, q_vars)
        _check_terms(self.q_den, map_vars)
        _check_terms(self.g, map_vars)
        if self.kind == "field2d" and self.q_den:
            raise ValueError("平面向量场族不接受 q_den")
        if self.preset is None and not self.p and self.roots is None:
            raise ValueError("必须给出 p 或 roots（或使用 preset）")
        return self

    def table(self, name: str) -> Optional[np.ndarray]:
        terms = getattr(self, name)
        if not terms:
            return None
        if name == "q" and self.kind == "field2d":
            return densify_terms(terms, ("z", "t", "eps"))
        return densify_terms(terms, ("t", "eps"))

    def explicit_roots(self) -> Optional[List[List[complex]]]:
        if self.roots is None:
            return None
        return [[pair_to_complex(p) for p in row] for row in self.roots]


class EpsBlock(_Block):
    """ε 样本：显式列表，或 |ε| 从 start 到 stop 对数等距、辐角固定"""

    values: Optional[List[ComplexPair]] = None
    start: Optional[float] = Field(default=None, gt=0)
    stop: Optional[float] = Field(default=None, gt=0)
    count: Optional[int] = Field(default=None, ge=2)
    arg: float = 0.0

    @model_validator(mode="after")
    def _check(self):
        generator = (self.start, self.stop, self.count)
        if self.values is not None:
            if any(v is not None for v in generator):
                raise ValueError("values 与 start/stop/count 不能同时给出")
            for v in self.values:
                _check_pair(v, "ε")
        elif any(v is None for v in generator):
            raise ValueError("需要 values，或同时给出 start、stop、count")
        elif not self.start > self.stop:
            raise ValueError("生成器要求 start > stop（|ε| 严格递减）")
        return self

    def samples(self) -> List[complex]:
        if self.values is not None:
            return [pair_to_complex(v) for v in self.values]
        radii = np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return [complex(r * np.exp(1j * self.arg)) for r in radii]


class NumericsBlock(_Block):
    tol: float = Field(default=DEFAULT_TOL, gt=0)
    iter_cap: int = Field(default=ITERATION_CAP, ge=1)
    precision: Literal["double", "double-double"] = DEFAULT_PRECISION
    fourier_range: int = Field(default=FOURIER_RANGE, ge=1)
    samples: int = Field(default=FOURIER_SAMPLES, ge=8)
    depth: float = Field(default=FOURIER_DEPTH, gt=0)
    delta: float = Field(default=DEFAULT_DELTA, gt=0)
    mode: Literal["model", "limit", "invariant"] = "invariant"
    monodromy_delta: float = Field(default=MONODROMY_DELTA, gt=0)
    fit_degree: Optional[int] = Field(default=None, ge=1)
    jet_order: int = Field(default=SEPARATRIX_JET_ORDER, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)


class OutputBlock(_Block):
    path: str = "out"
    format: Literal["json", "csv"] = DEFAULT_OUTPUT_FORMAT


class FormalFieldBlock(_Block):
    """ẏ = By + ...，ṫ = t^{k+1} + ... 的稀疏射流，变量 y1..y{n-1}, t"""

    n: int = Field(default=2, ge=2)
    k: int = Field(default=1, ge=1)
    degree: int = Field(default=8, ge=2)
    order: int = Field(default=8, ge=2)
    y: List[List[Term]]
    t: List[Term]

    @model_validator(mode="after")
    def _check(self):
        names = tuple(f"y{i + 1}" for i in range(self.n - 1)) + ("t",)
        if len(self.y) != self.n - 1:
            raise ValueError(f"y 需要 {self.n - 1} 个分量")
        for comp in self.y:
            _check_terms(comp, names)
        _check_terms(self.t, names)
        return self


class ExperimentConfig(_Block):
    family: Optional[FamilyBlock] = None
    eps: Optional[EpsBlock] = None
    numerics: NumericsBlock = Field(default_factory=NumericsBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    formal_field: Optional[FormalFieldBlock] = None

    def eps_values(self) -> List[complex]:
        return [] if self.eps is None else self.eps.samples()

    def canonical(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _format_errors(error: PydanticValidationError) -> str:
    parts = []
    for item in error.errors():
        loc = ".".join(str(p) for p in item.get("loc", ()) if p != "__root__")
        parts.append(f"{loc or '<root>'}: {item.get('msg')}")
    return "; ".join(parts)


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    校验配置字典

    Raises:
        ValidationError: 带字段路径的诊断
    """
    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ValidationError(f"配置无效: {_format_errors(e)}")


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    读取 TOML 配置

    Raises:
        ValidationError: 文件不存在、语法错误（含行列号）或字段无效
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"配置文件不存在: {path}")
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ValidationError(f"{path}: TOML 语法错误: {e}")
    cfg = parse_config(data)
    logger.info("已读取配置 %s（%d 个 ε 样本）", path, len(cfg.eps_values()))
    return cfg


def apply_overrides(cfg: ExperimentConfig, **flags: Any) -> ExperimentConfig:
    """
    用命令行参数覆盖 numerics/output/eps

    识别的键：tol, grid, precision, eps, out, format, threads。
    值为 None 的键被忽略。
    """
    numerics = cfg.numerics.model_dump()
    output = cfg.output.model_dump()
    updates: Dict[str, Any] = {}
    mapping = {"tol": "tol", "grid": "samples", "precision": "precision", "threads": "threads"}
    for flag, key in mapping.items():
        if flags.get(flag) is not None:
            numerics[key] = flags[flag]
    if flags.get("out") is not None:
        output["path"] = flags["out"]
    if flags.get("format") is not None:
        output["format"] = flags["format"]
    updates["numerics"] = numerics
    updates["output"] = output
    data = cfg.canonical()
    if flags.get("eps") is not None:
        eps = complex(flags["eps"])
        updates["eps"] = {"values": [[eps.real, eps.imag]]}
        if cfg.family is not None and cfg.family.roots is not None:
            samples = cfg.eps_values()
            hits = [i for i, e in enumerate(samples) if abs(e - eps) <= 1e-12 * max(abs(eps), 1e-300)]
            if not hits:
                raise ValidationError(f"--eps {eps} 不是配置中的 ε 样本，无法选取显式根")
            data["family"]["roots"] = [data["family"]["roots"][hits[0]]]
    data.update(updates)
    return parse_config(data)


def config_hash(cfg: ExperimentConfig) -> str:
    """规范 JSON（键排序）的 SHA-256"""
    payload = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


__all__ = [
    "FamilyBlock",
    "EpsBlock",
    "NumericsBlock",
    "OutputBlock",
    "FormalFieldBlock",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "apply_overrides",
    "config_hash",
]
