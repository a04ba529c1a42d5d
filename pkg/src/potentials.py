"""Potenciales de entrada: solitón, perturbaciones incorporadas y archivos .npy."""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PotentialError
from .grid import Domain, GriddedFunction
from .perturbation import DEFAULT_CUTOFF_RADIUS, PROFILES, builtin_phi
from .soliton import SolitonParams, u0_sample
from .utils import get_project_root, setup_logging

logger = setup_logging()

KINDS = ("zero", "soliton", "gaussian", "bump", "soliton+bump", "file")


@dataclass(frozen=True)
class PotentialSpec:
    """Descriptor de potencial tal como aparece en la configuración."""

    kind: str = "soliton"
    eps: float = 0.0
    profile: str = "mexican"
    amplitude: float = 0.1
    width: float = 1.0
    cutoff_radius: float = DEFAULT_CUTOFF_RADIUS
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PotentialError(f"Tipo de potencial desconocido: {self.kind} (opciones: {', '.join(KINDS)})")
        if self.kind in ("bump", "soliton+bump") and self.profile not in PROFILES:
            raise PotentialError(f"Perfil desconocido: {self.profile}")
        if self.kind == "file" and not self.path:
            raise PotentialError("El potencial 'file' requiere path")

    @property
    def label(self) -> str:
        if self.kind == "soliton+bump":
            return f"soliton+{self.eps:g}*{self.profile}"
        if self.kind == "bump":
            return f"{self.amplitude:g}*{self.profile}"
        if self.kind == "gaussian":
            return f"gaussian(a={self.amplitude:g}, w={self.width:g})"
        if self.kind == "file":
            return f"file:{Path(self.path).name}"
        return self.kind

    def to_dict(self):
        return asdict(self)


def _load_samples(path: str, d: Domain) -> GriddedFunction:
    file_path = Path(path)
    if not file_path.is_absolute():
        file_path = get_project_root() / file_path
    if not file_path.exists():
        raise PotentialError(f"Archivo de potencial no encontrado: {file_path}")
    data = np.load(file_path)
    if data.size != d.size:
        raise PotentialError(f"{file_path.name}: {data.size} muestras, se esperaban N^2={d.size}")
    return d.sample(data.astype(np.complex128).reshape(-1))


def build_potential(
    spec: PotentialSpec, d: Domain, params: Optional[SolitonParams] = None
) -> GriddedFunction:
    """Muestrear el potencial descrito por spec sobre el dominio."""
    params = params or SolitonParams()
    if spec.kind == "zero":
        u = d.zeros()
    elif spec.kind == "soliton":
        u = u0_sample(params, d)
    elif spec.kind == "gaussian":
        u = d.sample(spec.amplitude * np.exp(-np.abs(d.z) ** 2 / spec.width ** 2))
    elif spec.kind == "bump":
        u = spec.amplitude * builtin_phi(spec.profile, d, params, spec.cutoff_radius)
    elif spec.kind == "soliton+bump":
        u = u0_sample(params, d) + spec.eps * builtin_phi(spec.profile, d, params, spec.cutoff_radius)
    else:
        u = _load_samples(spec.path, d)
    logger.debug(f"Potencial {spec.label}: ||u||_2={u.norm(2):.4g}")
    return u
