"""Escritura de resultados: CSV, JSON y matrices en binario plano con cabecera YAML."""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np
import yaml

from .utils import setup_logging

logger = setup_logging()


def _clean(value: Any) -> Any:
    """Convertir tipos numpy/complejos a tipos JSON."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [_clean(float(value.real)), _clean(float(value.imag))]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    """JSON UTF-8 con orden de claves estable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_clean(data), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"JSON escrito: {path}")
    return path


def write_csv(path: Path, columns: List[str], rows: Iterable[Dict[str, Any]]) -> Path:
    """CSV separado por comas, punto decimal, cabecera y fin de línea LF."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(v) for k, v in row.items()})
            count += 1
    logger.info(f"CSV escrito: {path} ({count} filas)")
    return path


def _format_cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_operator(path: Path, matrix: np.ndarray, header: Dict[str, Any]) -> Path:
    """Matriz en orden por filas, little-endian, complejo de 16 bytes, más cabecera YAML."""
    path = Path(path).with_suffix(".bin")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(matrix, dtype="<c16").tofile(path)
    meta = dict(_clean(header))
    meta["shape"] = list(matrix.shape)
    meta["dtype"] = "<c16"
    with open(path.with_suffix(".yaml"), "w", encoding="utf-8") as f:
        yaml.safe_dump(meta, f, allow_unicode=True, default_flow_style=False, sort_keys=True)
    logger.info(f"Operador exportado: {path}")
    return path


def read_operator(path: Path) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Leer una matriz exportada con write_operator."""
    path = Path(path).with_suffix(".bin")
    with open(path.with_suffix(".yaml"), "r", encoding="utf-8") as f:
        meta = yaml.safe_load(f)
    data = np.fromfile(path, dtype="<c16")
    return data.reshape(meta["shape"]), meta
