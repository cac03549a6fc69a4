"""
产物输出

规范 JSON（键排序、17 位有效数字、复数为 [re, im]、非有限值为 null）、
CSV 投影，以及原子写入（目标目录内的临时文件 + os.replace）和运行清单。
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from config import CSV_DELIMITER, JSON_SIGNIFICANT_DIGITS, MANIFEST_NAME, PROGRAM_NAME, PROGRAM_VERSION

logger = logging.getLogger(__name__)

RECORDED_PACKAGES = ("numpy", "scipy", "mpmath", "pydantic")


def normalize(value: Any) -> Any:
    """把计算结果转换为可规范序列化的 Python 对象"""
    if isinstance(value, Mapping):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [normalize(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [normalize(float(value.real)), normalize(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(format(value, f".{JSON_SIGNIFICANT_DIGITS}g")) if math.isfinite(value) else None
    if hasattr(value, "to_json"):
        return normalize(value.to_json())
    return value


def dumps_canonical(data: Any) -> str:
    """规范 JSON 文本；相同输入给出逐字节相同的输出"""
    return json.dumps(normalize(data), sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False) + "\n"


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """写入临时文件后 os.replace 到目标路径"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("已写入 %s", path)
    return path


def write_json(path: Union[str, Path], data: Any) -> Path:
    return atomic_write_text(path, dumps_canonical(data))


def _csv_cell(value: Any) -> str:
    value = normalize(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return json.dumps(value)
    return str(value)


def rows_to_csv(rows: Sequence[Mapping[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
    """带表头的 CSV 文本，列顺序由 columns 或第一行决定"""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=CSV_DELIMITER, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], rows: Sequence[Mapping[str, Any]],
              columns: Optional[Sequence[str]] = None) -> Path:
    return atomic_write_text(path, rows_to_csv(rows, columns))


def package_versions(names: Iterable[str] = RECORDED_PACKAGES) -> Dict[str, Optional[str]]:
    out: Dict[str, Optional[str]] = {}
    for name in names:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


def build_manifest(command: str, config_sha256: str, numerics: Mapping[str, Any],
                   stages: List[Dict[str, Any]], precision_modes: Sequence[str],
                   artifacts: Sequence[str], config: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """运行清单；不记录耗时，阶段记录按规范文本排序以消除线程完成顺序"""
    return {
        "config": None if config is None else dict(config),
        "program": PROGRAM_NAME,
        "version": PROGRAM_VERSION,
        "command": command,
        "config_sha256": config_sha256,
        "numerics": dict(numerics),
        "precision_modes": sorted(set(precision_modes)),
        "stages": sorted(stages, key=dumps_canonical),
        "packages": package_versions(),
        "artifacts": sorted(artifacts),
    }


def write_manifest(out_dir: Union[str, Path], manifest: Mapping[str, Any]) -> Path:
    return write_json(Path(out_dir) / MANIFEST_NAME, manifest)


__all__ = [
    "normalize",
    "dumps_canonical",
    "atomic_write_text",
    "write_json",
    "rows_to_csv",
    "write_csv",
    "package_versions",
    "build_manifest",
    "write_manifest",
]
