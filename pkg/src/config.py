"""Configuración de corridas (YAML) con valores por defecto y hash canónico."""

import os
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .determinant import KGrid
from .errors import InvalidConfigError, PotentialError
from .grid import Domain, make_domain, nyquist_limit
from .perturbation import DEFAULT_CUTOFF_RADIUS, ChiConvention
from .potentials import PotentialSpec
from .soliton import SolitonParams
from .utils import complex_to_json, get_project_root, hash_config, parse_complex, resolve_workers, setup_logging

logger = setup_logging()

CONFIG_NAME = "dsii.yaml"
EXAMPLE_NAME = "dsii.example.yaml"


def _complex_field(default):
    return field(default=default, metadata={"complex": True})


@dataclass
class GridConfig:
    L: float = 20.0
    N: int = 48


@dataclass
class SolitonConfig:
    k0: complex = _complex_field(0j)
    mu0: complex = _complex_field(0j)
    nu0: complex = _complex_field(1 + 0j)


@dataclass
class KGridConfig:
    center: Optional[complex] = _complex_field(None)
    half_width: float = 1.5
    nodes_per_side: int = 21


@dataclass
class TransformsConfig:
    near_field_exact: bool = True
    mass_threshold: float = 1e-3


@dataclass
class SolverConfig:
    method: str = "auto"
    tol: float = 1e-8
    zero_threshold: float = 1e-2
    zero_ratio: float = 0.5
    delta: Optional[float] = None
    fd_step: Optional[float] = None
    c_route: str = "a"
    dbar_samples: int = 5


@dataclass
class ContourConfig:
    radius: float = 0.5
    nodes: int = 32
    band: float = 0.02


@dataclass
class PerturbationConfig:
    profile: str = "gauss"
    eps_list: List[float] = field(default_factory=lambda: [0.01, 0.02, 0.05])
    convention: str = ChiConvention.MINUS.value
    cutoff_radius: float = DEFAULT_CUTOFF_RADIUS
    c1: float = 1.0
    fine_nodes: int = 5
    annulus_outer: float = 0.2
    split_tol: float = 1e-2


@dataclass
class RadialConfig:
    T_max: float = 100.0
    n_t: int = 400
    t_min: float = 1e-6
    numeric: bool = False


SECTIONS = {
    "grid": GridConfig,
    "soliton": SolitonConfig,
    "potential": PotentialSpec,
    "kgrid": KGridConfig,
    "transforms": TransformsConfig,
    "solver": SolverConfig,
    "contour": ContourConfig,
    "perturbation": PerturbationConfig,
    "radial": RadialConfig,
}


def _build(cls, data: Optional[Dict[str, Any]], section: str):
    data = dict(data or {})
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise InvalidConfigError(f"Claves desconocidas en '{section}': {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        try:
            if f.metadata.get("complex") and value is not None:
                value = parse_complex(value)
            elif f.default is not MISSING and isinstance(f.default, bool):
                value = bool(value)
            elif f.default is not MISSING and isinstance(f.default, int) and not isinstance(f.default, bool):
                value = int(value)
            elif f.default is not MISSING and isinstance(f.default, float) and value is not None:
                value = float(value)
        except (TypeError, ValueError) as e:
            raise InvalidConfigError(f"{section}.{name}: valor inválido {value!r} ({e})")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError, PotentialError) as e:
        raise InvalidConfigError(f"Sección '{section}' inválida: {e}")


def _json_value(value: Any) -> Any:
    if isinstance(value, complex):
        return complex_to_json(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_value(v) for v in value]
    return value


@dataclass
class RunConfig:
    """Configuración completa de una corrida."""

    grid: GridConfig = field(default_factory=GridConfig)
    soliton: SolitonConfig = field(default_factory=SolitonConfig)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    kgrid: KGridConfig = field(default_factory=KGridConfig)
    transforms: TransformsConfig = field(default_factory=TransformsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    radial: RadialConfig = field(default_factory=RadialConfig)
    output_dir: str = "output"
    workers: int = 1
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            self.domain()
            self.soliton_params()
            self.k_grid()
        except ValueError as e:
            raise InvalidConfigError(str(e))
        if self.solver.method not in ("auto", "direct", "iterative"):
            raise InvalidConfigError(f"solver.method inválido: {self.solver.method}")
        if self.solver.c_route not in ("a", "b"):
            raise InvalidConfigError(f"solver.c_route inválido: {self.solver.c_route}")
        if self.solver.tol <= 0 or self.solver.zero_threshold <= 0:
            raise InvalidConfigError("Las tolerancias deben ser positivas")
        if not 0 < self.solver.zero_ratio < 1:
            raise InvalidConfigError(f"solver.zero_ratio debe estar en (0, 1): {self.solver.zero_ratio}")
        self._check_kgrid_resolution()
        if self.perturbation.convention not in {c.value for c in ChiConvention}:
            raise InvalidConfigError(f"perturbation.convention inválida: {self.perturbation.convention}")
        if self.perturbation.split_tol <= 0:
            raise InvalidConfigError(f"perturbation.split_tol debe ser positivo: {self.perturbation.split_tol}")
        if self.contour.radius <= 0 or self.contour.nodes < 4:
            raise InvalidConfigError("Contorno inválido (radio > 0, al menos 4 nodos)")
        if self.radial.T_max <= 1 or self.radial.n_t < 2 or not 0 < self.radial.t_min < 1:
            raise InvalidConfigError("Parámetros radiales inválidos")
        if self.workers < 1:
            raise InvalidConfigError("workers debe ser >= 1")

    def _check_kgrid_resolution(self):
        """La ventana de k debe quedar dentro del límite de Nyquist alrededor de la portadora."""
        d = self.domain()
        grid = self.k_grid()
        offset = grid.center - self.carrier()
        reach = max(abs(offset.real), abs(offset.imag)) + grid.half_width
        limit = nyquist_limit(d)
        if reach > limit:
            needed = int(np.ceil(4.0 * reach * d.L / np.pi / 2.0)) * 2
            raise InvalidConfigError(
                f"La malla de k llega a {reach:.3g} de la portadora, más allá de pi/(2h)={limit:.3g}; "
                f"D(k) discreto es periódico con período pi/h. Reducir kgrid.half_width o usar N >= {needed}"
            )

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], source: Optional[str] = None) -> "RunConfig":
        data = dict(data or {})
        top = {"output_dir", "workers"}
        unknown = set(data) - set(SECTIONS) - top
        if unknown:
            raise InvalidConfigError(f"Claves desconocidas: {', '.join(sorted(unknown))}")
        kwargs = {name: _build(section, data.get(name), name) for name, section in SECTIONS.items()}
        try:
            workers = int(data.get("workers", 1))
        except (TypeError, ValueError):
            raise InvalidConfigError(f"workers inválido: {data.get('workers')!r}")
        return cls(**kwargs, output_dir=str(data.get("output_dir", "output")), workers=workers, source=source)

    def to_dict(self) -> Dict[str, Any]:
        """Serialización canónica (complejos como [re, im])."""
        out = {name: _json_value(asdict(getattr(self, name))) for name in SECTIONS}
        out["output_dir"] = self.output_dir
        out["workers"] = self.workers
        return out

    def hashed_dict(self) -> Dict[str, Any]:
        """Campos que determinan los resultados (sin directorio de salida ni workers)."""
        out = self.to_dict()
        out.pop("output_dir")
        out.pop("workers")
        return out

    @property
    def config_hash(self) -> str:
        return hash_config(self.hashed_dict())

    @property
    def short_hash(self) -> str:
        return self.config_hash[:12]

    def domain(self) -> Domain:
        return make_domain(self.grid.L, self.grid.N)

    def soliton_params(self) -> SolitonParams:
        return SolitonParams(self.soliton.k0, self.soliton.mu0, self.soliton.nu0)

    def carrier(self) -> complex:
        """Portadora del potencial: k0 si contiene al solitón, 0 en otro caso."""
        return self.soliton.k0 if self.potential.kind.startswith("soliton") else 0j

    def k_grid(self) -> KGrid:
        center = self.kgrid.center if self.kgrid.center is not None else self.soliton.k0
        return KGrid(center, self.kgrid.half_width, self.kgrid.nodes_per_side)

    def exclusion_radius(self) -> float:
        return self.solver.delta if self.solver.delta is not None else 2.0 * self.k_grid().spacing

    def fd_step(self) -> float:
        return self.solver.fd_step if self.solver.fd_step is not None else 0.25 * self.k_grid().spacing

    def output_path(self) -> Path:
        path = Path(self.output_dir)
        return path if path.is_absolute() else get_project_root() / path

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), allow_unicode=True, default_flow_style=False, sort_keys=False)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_yaml())
        logger.info(f"Configuración guardada en: {path}")
        return path


def find_config_path(config_path: Optional[Path] = None) -> Optional[Path]:
    """Ruta explícita, si no dsii.yaml, si no dsii.example.yaml."""
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise InvalidConfigError(f"Archivo de configuración no encontrado: {config_path}")
        return config_path
    for name in (CONFIG_NAME, EXAMPLE_NAME):
        candidate = get_project_root() / name
        if candidate.exists():
            return candidate
    return None


def load_config(config_path: Optional[Path] = None) -> RunConfig:
    """Cargar la configuración y aplicar las variables de entorno."""
    path = find_config_path(config_path)
    if path is None:
        logger.warning("Sin archivo de configuración; usando valores por defecto")
        data: Dict[str, Any] = {}
    else:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise InvalidConfigError(f"YAML inválido en {path}: {e}")
        if not isinstance(data, dict):
            raise InvalidConfigError(f"{path}: se esperaba un mapeo en la raíz")
        logger.info(f"Configuración cargada desde: {path}")

    config = RunConfig.from_dict(data, source=str(path) if path else None)
    config.workers = resolve_workers(config.workers)
    env_output = os.getenv("DSII_OUTPUT_DIR")
    if env_output:
        config.output_dir = env_output
    return config
