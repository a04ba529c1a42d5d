"""Utilidades comunes para el banco de trabajo."""

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()

T = TypeVar("T")
R = TypeVar("R")


def get_project_root() -> Path:
    """Obtener la raíz del proyecto."""
    return Path(__file__).parent.parent


def get_data_dir() -> Path:
    """Obtener el directorio de datos (registro de corridas); DSII_DATA_DIR lo reemplaza."""
    override = os.getenv("DSII_DATA_DIR")
    data_dir = Path(override) if override else get_project_root() / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    return data_dir


def get_logs_dir() -> Path:
    """Obtener el directorio de logs."""
    logs_dir = get_project_root() / "logs"
    logs_dir.mkdir(exist_ok=True)
    return logs_dir


def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """Configurar logging."""
    if level is None:
        level = os.getenv("LOG_LEVEL", "INFO")

    log_file = get_logs_dir() / "dsii.log"

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()
        ]
    )

    return logging.getLogger("dsii")


def get_env_int(key: str, default: int = 0) -> int:
    """Obtener variable de entorno como entero."""
    try:
        return int(os.getenv(key, str(default)))
    except ValueError:
        return default


def resolve_workers(configured: int = 1) -> int:
    """Número de workers: DSII_WORKERS tiene prioridad sobre la configuración."""
    workers = get_env_int("DSII_WORKERS", configured)
    return max(1, workers)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Aplicar fn a cada elemento y devolver los resultados en el orden de entrada."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def canonical_json(data: Dict[str, Any]) -> str:
    """Serializar un diccionario con orden de claves estable."""
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def hash_config(data: Dict[str, Any]) -> str:
    """Hash SHA-256 de la configuración canónica."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def parse_complex(value: Any) -> complex:
    """Interpretar un número complejo desde YAML/CLI (número, "1+2j" o [re, im])."""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    raise ValueError(f"No se pudo interpretar como complejo: {value!r}")


def complex_to_json(value: complex) -> List[float]:
    """Representación JSON de un complejo como [re, im]."""
    return [float(value.real), float(value.imag)]
