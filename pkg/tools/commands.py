"""
子命令处理函数

每个子命令读取同一份 ExperimentConfig，返回
{"success": True, "message": ..., "data": {...}, "table": {"columns", "rows"}}；
失败时返回 {"success": False, "error": ..., "error_type": ..., "exit_code": ...}。
data 是规范 JSON 产物，table 是它的 CSV 投影。
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from config import MONODROMY_MAP_DEGREE
from tools.fatou_ev import ev_transitions, translation_invariants
from tools.formal_normalform import (
    FormalFieldSpec,
    central_manifold_defect,
    default_working_order,
    divergence_signature,
    formal_central_manifold,
    formal_invariant,
)
from tools.holonomy_2d import (
    LinearPlanarField,
    MonodromyMapFamily,
    PlanarFieldFamily,
    monodromy_germ,
    separatrix_trace,
)
from tools.koenigs_perturbed import (
    SWEEP_COLUMNS,
    GermFamily,
    MapFamily,
    convergence_sweep,
    koenigs_chart,
    koenigs_eval,
    koenigs_residual,
    model_field_check,
    perturbed_times,
    perturbed_transition,
    transition_pairs,
)
from tools.sector_geometry import check_nondegenerate, imaginary_dividing_rays, real_dividing_line_args
from utils.complex_utils import complex_to_pair, pair_to_complex
from utils.experiment_config import ExperimentConfig
from utils.performance import performance_tracking
from utils.precision import precision_mode, to_double
from utils.validation import ComputationError, DegenerateInput, NotConverged, ValidationError, ensure_positive_int

logger = logging.getLogger(__name__)

# 分界线样本沿远离最近邻根的方向，取最近根距离的这些倍数
SEPARATRIX_FRACTIONS = (0.05, 0.15, 0.3, 0.5)


def exit_code_for(error: BaseException) -> int:
    """0 成功；1 配置/参数；2 退化输入；3 不收敛及其他数值错误"""
    if isinstance(error, ValidationError):
        return 1
    if isinstance(error, DegenerateInput):
        return 2
    if isinstance(error, ComputationError):
        return 3
    return 1


def _failure(prefix: str, error: BaseException) -> Dict[str, Any]:
    return {
        "success": False,
        "error": f"{prefix}: {str(error)}",
        "error_type": type(error).__name__,
        "exit_code": exit_code_for(error),
    }


def _success(message: str, data: Dict[str, Any], columns: Sequence[str],
             rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        "success": True,
        "message": message,
        "data": data,
        "table": {"columns": list(columns), "rows": rows},
    }


# ---------------------------------------------------------------------------
# 由配置构造族
# ---------------------------------------------------------------------------

def _family_block(cfg: ExperimentConfig):
    if cfg.family is None:
        raise ValidationError("配置缺少 [family] 段")
    return cfg.family


def build_planar_family(cfg: ExperimentConfig) -> Union[PlanarFieldFamily, LinearPlanarField]:
    """[family] kind = "field2d" 的向量场族；preset = "linear" 给出单个线性场"""
    block = _family_block(cfg)
    if block.kind != "field2d":
        raise ValidationError("该命令需要 kind = \"field2d\" 的向量场族")
    eps = cfg.eps_values()
    if block.preset == "linear":
        return LinearPlanarField(nu=pair_to_complex(block.nu), mu=pair_to_complex(block.mu))
    if block.preset == "normal_form":
        return PlanarFieldFamily.normal_form(block.k, pair_to_complex(block.lam), eps)
    if block.preset == "quadratic":
        return PlanarFieldFamily.quadratic(eps)
    if block.preset is not None:
        raise ValidationError(f"向量场族不支持预设 {block.preset}")
    kwargs: Dict[str, Any] = dict(k=block.k, eps_list=eps, p=block.table("p"),
                                  explicit_roots=block.explicit_roots(), name=block.name)
    for name in ("q", "g"):
        table = block.table(name)
        if table is not None:
            kwargs[name] = table
    return PlanarFieldFamily(**kwargs)


def build_map_family(cfg: ExperimentConfig) -> MapFamily:
    """
    [family] 对应的映射族

    kind = "field2d" 时取向量场族的单值映射族。
    """
    block = _family_block(cfg)
    eps = cfg.eps_values()
    if block.kind == "field2d":
        planar = build_planar_family(cfg)
        if isinstance(planar, LinearPlanarField):
            raise ValidationError("线性向量场没有抛物不动点族")
        degree = cfg.numerics.fit_degree or MONODROMY_MAP_DEGREE
        return MonodromyMapFamily(planar, delta=cfg.numerics.monodromy_delta, degree=degree)
    if block.preset == "moebius":
        return GermFamily.moebius(eps)
    if block.preset == "quadratic":
        return GermFamily.quadratic(eps, c=pair_to_complex(block.c))
    if block.preset is not None:
        raise ValidationError(f"映射族不支持预设 {block.preset}")
    kwargs: Dict[str, Any] = dict(k=block.k, eps_list=eps, p=block.table("p"),
                                  explicit_roots=block.explicit_roots(), name=block.name)
    for name in ("q", "q_den"):
        table = block.table(name)
        if table is not None:
            kwargs[name] = table
    return GermFamily(**kwargs)


def _require_eps(cfg: ExperimentConfig) -> List[complex]:
    eps = cfg.eps_values()
    if not eps:
        raise ValidationError("该命令需要 [eps] 段或 --eps")
    return eps


def _eps_row(eps: complex) -> Dict[str, float]:
    return {"eps_re": eps.real, "eps_im": eps.imag}


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

@performance_tracking("rays")
async def compute_rays(k: int) -> Dict[str, Any]:
    """
    虚分割射线

    Args:
        k: 抛物重数

    Returns:
        射线辐角与实分割直线方向
    """
    try:
        k = ensure_positive_int(k, "k")
        rays = imaginary_dividing_rays(k)
        data = {
            "k": k,
            "rays": [float(a) for a in rays],
            "real_lines": [float(a) for a in real_dividing_line_args(k)],
        }
        rows = [{"j": j, "arg": float(a)} for j, a in enumerate(rays)]
        return _success("计算分割射线成功", data, ("j", "arg"), rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算分割射线失败", e)


@performance_tracking("modulus")
async def compute_modulus(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    未扰动芽 f_0 的 Ecalle–Voronin 模

    Args:
        cfg: 实验配置（[family]，以及 numerics 中的傅里叶参数）

    Returns:
        λ、2k 个转移函数及其平移不变量
    """
    try:
        num = cfg.numerics
        with precision_mode(num.precision):
            fam = build_map_family(cfg)
            germ = fam.unperturbed_germ(num.delta)
            modulus = ev_transitions(germ, num.fourier_range, depth=num.depth, samples=num.samples)
            data = modulus.to_json()
            data["germ"] = germ.to_json()
            data["invariants"] = []
            rows = []
            for i, sample in enumerate(modulus.transitions):
                after = modulus.transitions[(i + 1) % len(modulus.transitions)]
                inv = translation_invariants(sample, after)
                data["invariants"].append(inv)
                for l, c in sorted(sample.fourier.items()):
                    rows.append({"j": sample.j, "l": l, "c_re": c.real, "c_im": c.imag,
                                 "abs_c": abs(c), "noise_floor": sample.noise_floor})
        return _success("计算 Ecalle–Voronin 模成功", data,
                        ("j", "l", "c_re", "c_im", "abs_c", "noise_floor"), rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算 Ecalle–Voronin 模失败", e)


@performance_tracking("koenigs")
async def compute_koenigs(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    各 ε、各不动点的 Koenigs 线性化与复时间图

    Args:
        cfg: 实验配置

    Returns:
        不动点数据、规范化常数和基点射线上的残差
    """
    try:
        num = cfg.numerics
        columns = ("eps_re", "eps_im", "index", "ray", "mu_re", "mu_im", "stability",
                   "constant_re", "constant_im", "residual_koenigs", "model_field_constant")
        rows, charts = [], []
        with precision_mode(num.precision):
            fam = build_map_family(cfg)
            for eps in _require_eps(cfg):
                for i in range(fam.k + 1):
                    chart = koenigs_chart(fam, eps, i, mode=num.mode, delta=num.delta)
                    points = chart.base_point * np.linspace(0.6, 1.0, 5)
                    koenigs_eval(chart, points, cap=num.iter_cap)
                    residual = float(np.nanmax(koenigs_residual(chart, points)))
                    times = perturbed_times(chart, points)
                    check = model_field_check(fam, eps, i, points)
                    rows.append({
                        **_eps_row(eps), "index": i, "ray": chart.ray,
                        "mu_re": chart.fp.mu.real, "mu_im": chart.fp.mu.imag,
                        "stability": chart.fp.stability,
                        "constant_re": chart.constant.real, "constant_im": chart.constant.imag,
                        "residual_koenigs": residual,
                        "model_field_constant": check["constant"],
                    })
                    charts.append({
                        "eps": complex_to_pair(eps),
                        "chart": chart.to_json(),
                        "points": points,
                        "tau": to_double(times.values),
                        "residual_koenigs": residual,
                        "model_field_constant": check["constant"],
                    })
        return _success("计算 Koenigs 图成功", {"mode": num.mode, "charts": charts}, columns, rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算 Koenigs 图失败", e)


def _transition_rows(eps: complex, pair, sample) -> List[Dict[str, Any]]:
    meta = sample.metadata
    return [
        {**_eps_row(eps), "pair": f"{pair[0]}-{pair[1]}", "l": l, "c_re": c.real,
         "c_im": c.imag, "abs_c": abs(c), "residual_abel": meta["residual_abel"],
         "residual_koenigs": meta["residual_koenigs"], "iter_count": meta["iter_count"],
         "precision_mode": meta["precision_mode"]}
        for l, c in sorted(sample.fourier.items())
    ]


@performance_tracking("transition")
async def compute_transition(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    扰动转移函数 τ_{i',ε}∘τ_{i,ε}⁻¹ 的傅里叶系数

    Args:
        cfg: 实验配置；--eps 可选取单个样本

    Returns:
        每个 (ε, 不动点对) 的转移函数样本
    """
    try:
        num = cfg.numerics
        transitions, rows = [], []
        with precision_mode(num.precision):
            fam = build_map_family(cfg)
            pairs = transition_pairs(fam)
            for eps in _require_eps(cfg):
                for pair in pairs:
                    sample = perturbed_transition(fam, eps, pair, num.fourier_range, num.depth,
                                                  num.samples, mode=num.mode, delta=num.delta,
                                                  tol=num.tol)
                    transitions.append({"eps": complex_to_pair(eps), "pair": list(pair),
                                        "transition": sample.to_json()})
                    rows.extend(_transition_rows(eps, pair, sample))
        return _success("计算扰动转移函数成功", {"mode": num.mode, "transitions": transitions},
                        SWEEP_COLUMNS, rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算扰动转移函数失败", e)


@performance_tracking("sweep")
async def run_sweep(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    ε → 0 的收敛扫描

    Args:
        cfg: 实验配置；ε 样本通常由对数等距生成器给出

    Returns:
        逐行傅里叶系数、外推极限与失败的 ε
    """
    try:
        num = cfg.numerics
        observables = ("abs_c", "ratio") if num.fourier_range >= 2 else ("abs_c",)
        with precision_mode(num.precision):
            fam = build_map_family(cfg)
            _require_eps(cfg)
            result = convergence_sweep(fam, observables, num.fourier_range, num.depth,
                                       num.samples, mode=num.mode, delta=num.delta,
                                       threads=num.threads, tol=num.tol)
        if result.errors and not result.rows:
            first = result.errors[0]
            raise NotConverged(f"所有 ε 样本都失败，首个错误 {first['error_type']}: {first['error']}")
        data = result.to_json()
        data["mode"] = num.mode
        return _success("收敛扫描完成", data, SWEEP_COLUMNS, result.rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("收敛扫描失败", e)


@performance_tracking("monodromy")
async def compute_monodromy(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    平面向量场沿 z = δe^{2πis} 的单值映射

    Args:
        cfg: 实验配置（kind = "field2d"）

    Returns:
        各 ε 的网格样本、拟合射流与乘子；ε = 0 时附带拟合射流的形式不变量
    """
    try:
        num = cfg.numerics
        germs, rows = [], []
        fld = build_planar_family(cfg)
        eps_values: List[Optional[complex]]
        if isinstance(fld, LinearPlanarField):
            eps_values = [None]
        else:
            eps_values = cfg.eps_values() or [0j]
        for eps in eps_values:
            germ = monodromy_germ(fld, eps, delta=num.monodromy_delta, degree=num.fit_degree)
            entry = germ.to_json()
            entry["multiplier"] = complex_to_pair(germ.multiplier)
            if isinstance(fld, LinearPlanarField):
                entry["expected_multiplier"] = complex_to_pair(fld.multiplier)
            elif eps == 0 and germ.fitted_jet is not None:
                try:
                    inv = formal_invariant(germ.normalized_jet(), fld.k)
                    entry["lambda"] = complex_to_pair(inv.lam)
                except ComputationError as e:
                    logger.warning("拟合射流的形式不变量不可用: %s", e)
                    entry["lambda"] = None
            germs.append(entry)
            eps_cols = _eps_row(eps) if eps is not None else {"eps_re": None, "eps_im": None}
            rows.extend({**eps_cols, **row} for row in germ.rows())
        columns = ("eps_re", "eps_im", "t0_re", "t0_im", "ft_re", "ft_im", "err_est")
        return _success("计算单值映射成功", {"delta": num.monodromy_delta, "germs": germs},
                        columns, rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算单值映射失败", e)


def separatrix_targets(roots: np.ndarray, i: int,
                       fractions: Sequence[float] = SEPARATRIX_FRACTIONS) -> np.ndarray:
    """沿远离最近邻根的方向取样本点"""
    alpha = roots[i]
    others = np.delete(roots, i)
    gaps = others - alpha
    nearest = gaps[np.argmin(np.abs(gaps))]
    direction = -nearest / abs(nearest)
    return alpha + abs(nearest) * np.asarray(fractions) * direction


@performance_tracking("separatrix")
async def trace_separatrix(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    各奇点 (0, α_i) 处分界线的追踪与不等式认证

    Args:
        cfg: 实验配置（kind = "field2d"，需要 ε 样本）

    Returns:
        每条分界线的样本、斜率与认证比例
    """
    try:
        num = cfg.numerics
        fam = build_planar_family(cfg)
        if isinstance(fam, LinearPlanarField):
            raise ValidationError("线性向量场没有奇点族")
        traces, rows = [], []
        for eps in _require_eps(cfg):
            roots = fam.roots_at(eps).roots
            for i in range(len(roots)):
                trace = separatrix_trace(fam, eps, i, separatrix_targets(roots, i),
                                         jet_order=num.jet_order)
                entry = trace.to_json()
                entry["eps"] = complex_to_pair(eps)
                entry["index"] = i
                entry["certified_fraction"] = float(np.mean(trace.certified))
                traces.append(entry)
                for t, z, dz, ok in zip(trace.t, trace.z, trace.dz, trace.certified):
                    rows.append({**_eps_row(eps), "index": i, "t_re": t.real, "t_im": t.imag,
                                 "z_re": z.real, "z_im": z.imag, "abs_dz": abs(dz),
                                 "certified": bool(ok)})
        columns = ("eps_re", "eps_im", "index", "t_re", "t_im", "z_re", "z_im", "abs_dz",
                   "certified")
        return _success("追踪分界线成功", {"separatrices": traces}, columns, rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("追踪分界线失败", e)


@performance_tracking("central_manifold")
async def compute_central_manifold(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    形式中心流形 y = q̂(t)

    Args:
        cfg: 实验配置（[formal_field] 段）

    Returns:
        各分量的级数、不变性亏量与发散特征
    """
    try:
        block = cfg.formal_field
        if block is None:
            raise ValidationError("配置缺少 [formal_field] 段")
        with precision_mode(cfg.numerics.precision):
            spec = FormalFieldSpec.from_terms(block.n, block.k, block.y, block.t, block.degree)
            manifold = formal_central_manifold(spec, block.order)
            defects = central_manifold_defect(spec, manifold.component_series)
            components, rows = [], []
            for idx, (series, defect) in enumerate(zip(manifold.component_series, defects)):
                coeffs = to_double(series.coeffs)
                components.append({
                    "component": idx + 1,
                    "series": series.to_json(),
                    "defect": float(np.max(np.abs(to_double(defect.coeffs)))),
                    "divergence_signature": divergence_signature(series),
                })
                rows.extend({"component": idx + 1, "m": m, "c_re": c.real, "c_im": c.imag}
                            for m, c in enumerate(coeffs))
        return _success("计算形式中心流形成功", {"n": block.n, "k": block.k, "components": components},
                        ("component", "m", "c_re", "c_im"), rows)

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算形式中心流形失败", e)


@performance_tracking("invariant")
async def compute_invariant(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    未扰动芽的形式不变量 λ，并报告族的非退化余量

    Args:
        cfg: 实验配置

    Returns:
        λ、规范化射流残差；有 ε 样本时附带非退化判据
    """
    try:
        num = cfg.numerics
        with precision_mode(num.precision):
            fam = build_map_family(cfg)
            germ = fam.unperturbed_germ(num.delta)
            result = formal_invariant(germ.jet(default_working_order(fam.k)), fam.k)
            data = result.to_json()
            if cfg.eps_values():
                ok, margin = check_nondegenerate(fam.roots_family(), fam.k)
                data["nondegenerate"] = {"ok": ok, "margin": margin}
        row = {"k": fam.k, "lam_re": result.lam.real, "lam_im": result.lam.imag,
               "residual": result.residual}
        return _success("计算形式不变量成功", data, ("k", "lam_re", "lam_im", "residual"), [row])

    except ValidationError as e:
        return _failure("参数验证失败", e)

    except Exception as e:
        return _failure("计算形式不变量失败", e)


COMMANDS = {
    "modulus": compute_modulus,
    "koenigs": compute_koenigs,
    "transition": compute_transition,
    "sweep": run_sweep,
    "monodromy": compute_monodromy,
    "separatrix": trace_separatrix,
    "central-manifold": compute_central_manifold,
    "invariant": compute_invariant,
}


__all__ = [
    "COMMANDS",
    "exit_code_for",
    "build_map_family",
    "build_planar_family",
    "separatrix_targets",
    "compute_rays",
    "compute_modulus",
    "compute_koenigs",
    "compute_transition",
    "run_sweep",
    "compute_monodromy",
    "trace_separatrix",
    "compute_central_manifold",
    "compute_invariant",
]
