"""Discretización del plano complejo: dominios, funciones muestreadas y cuadratura.

Malla de puntos medios sobre el cuadrado [-L, L]^2 con N celdas por lado.
El nodo (i, j) está en el centro de la celda, x = -L + (i + 1/2)h, y = -L + (j + 1/2)h,
y el índice plano es i * N + j (orden por filas). Cada nodo pesa h^2.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import DomainMismatchError, UnresolvedPhase
from .utils import setup_logging

logger = setup_logging()

Scalar = Union[int, float, complex]

MIN_POINTS = 8


@dataclass(frozen=True)
class Domain:
    """Caja [-L, L]^2 discretizada con N x N puntos medios."""

    half_width: float
    points_per_side: int

    def __post_init__(self):
        """Validar parámetros."""
        if not self.half_width > 0:
            raise ValueError(f"L debe ser positivo: {self.half_width}")
        if self.points_per_side < 2 or self.points_per_side % 2:
            raise ValueError(f"N debe ser par y >= 2: {self.points_per_side}")

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def N(self) -> int:
        return self.points_per_side

    @property
    def size(self) -> int:
        """Número total de nodos N^2."""
        return self.points_per_side ** 2

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points_per_side

    @property
    def weight(self) -> float:
        """Peso de cuadratura por nodo."""
        return self.h * self.h

    @cached_property
    def axis(self) -> np.ndarray:
        """Coordenadas de los centros de celda sobre un eje."""
        return -self.half_width + (np.arange(self.points_per_side) + 0.5) * self.h

    @cached_property
    def z(self) -> np.ndarray:
        """Nodos complejos en orden por filas."""
        x, y = np.meshgrid(self.axis, self.axis, indexing="ij")
        nodes = (x + 1j * y).ravel()
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def interior(self) -> np.ndarray:
        """Máscara de nodos con |z| <= L/2."""
        return np.abs(self.z) <= 0.5 * self.half_width

    @cached_property
    def frame(self) -> np.ndarray:
        """Máscara del anillo exterior de celdas."""
        idx = np.arange(self.points_per_side)
        edge = (idx == 0) | (idx == self.points_per_side - 1)
        return (edge[:, None] | edge[None, :]).ravel()

    def sample(self, values) -> "GriddedFunction":
        """Envolver un vector (o un escalar) como función muestreada."""
        data = np.broadcast_to(np.asarray(values, dtype=np.complex128), (self.size,))
        return GriddedFunction(self, np.array(data))

    def zeros(self) -> "GriddedFunction":
        return self.sample(0.0)

    def ones(self) -> "GriddedFunction":
        return self.sample(1.0)


@dataclass(frozen=True, eq=False)
class GriddedFunction:
    """Muestras complejas de una función de z sobre un Domain."""

    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        """Validar longitud y finitud, y congelar las muestras."""
        values = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if values.shape[0] != self.domain.size:
            raise ValueError(
                f"Longitud {values.shape[0]} incompatible con N^2={self.domain.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Muestras no finitas (NaN/Inf)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _check(self, other: "GriddedFunction"):
        if other.domain != self.domain:
            raise DomainMismatchError(f"Dominios distintos: {self.domain} vs {other.domain}")

    def _wrap(self, values: np.ndarray) -> "GriddedFunction":
        return GriddedFunction(self.domain, values)

    def _operand(self, other):
        if isinstance(other, GriddedFunction):
            self._check(other)
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - self._operand(other))

    def __rsub__(self, other):
        return self._wrap(self._operand(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / self._operand(other))

    def __neg__(self):
        return self._wrap(-self.values)

    def conj(self) -> "GriddedFunction":
        return self._wrap(np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def grid(self) -> np.ndarray:
        """Vista N x N indexada [i, j] (x, y)."""
        return self.values.reshape(self.domain.N, self.domain.N)

    def norm(self, p: float = 2.0) -> float:
        """Norma L^p discreta."""
        w = self.domain.weight
        if np.isinf(p):
            return float(np.max(np.abs(self.values)))
        return float((w * np.sum(np.abs(self.values) ** p)) ** (1.0 / p))


def make_domain(L: float, N: int) -> Domain:
    """Construir la caja [-L, L]^2 con N x N puntos medios (N par, N >= 8)."""
    if N % 2:
        raise ValueError(f"N debe ser par: {N}")
    if N < MIN_POINTS:
        raise ValueError(f"N={N} demasiado pequeño; se requiere N >= {MIN_POINTS}")
    return Domain(float(L), int(N))


def nyquist_limit(d: Domain) -> float:
    """Mayor |Re kappa|, |Im kappa| que la fase muestreada e_kappa resuelve: pi / (2h).

    La fase exp(2i Re(kappa z)) oscila con frecuencia 2|kappa| por eje, de modo que
    D(k) discreto es periódico en kappa con período pi / h.
    """
    return np.pi / (2.0 * d.h)


def phase_resolution(kappa: complex, d: Domain) -> float:
    """Fracción del límite de Nyquist usada por kappa (<= 1 para estar resuelta)."""
    kappa = complex(kappa)
    return max(abs(kappa.real), abs(kappa.imag)) / nyquist_limit(d)


def check_phase(kappa: complex, d: Domain, what: str = "kappa", warn_above: float = 0.5) -> float:
    """Rechazar fases no resueltas por la malla; avisar cerca del límite."""
    ratio = phase_resolution(kappa, d)
    if ratio > 1.0:
        raise UnresolvedPhase(
            f"{what}={complex(kappa):.4g} excede el límite de Nyquist pi/(2h)={nyquist_limit(d):.4g} "
            f"(L={d.L:g}, N={d.N}); aumentar N"
        )
    if ratio > warn_above:
        logger.warning(f"{what}={complex(kappa):.4g} usa {ratio:.0%} del límite de Nyquist; resolución de fase baja")
    return ratio


def e_k_sample(k: complex, d: Domain) -> GriddedFunction:
    """Fase e_k(z) = exp(i(kz + conj(k z))) = exp(2i Re(kz))."""
    return d.sample(np.exp(2j * np.real(complex(k) * d.z)))


def rho_sample(d: Domain) -> GriddedFunction:
    """rho(z) = (1 + |z|^2)^(1/2)."""
    return d.sample(np.sqrt(1.0 + np.abs(d.z) ** 2))


def integrate(f: GriddedFunction) -> complex:
    """Cuadratura de punto medio: suma de muestras por h^2."""
    return complex(np.sum(f.values) * f.domain.weight)


def pair(f: GriddedFunction, g: GriddedFunction) -> complex:
    """Apareamiento bilineal <f, g> = sum f g h^2 (sin conjugar)."""
    if f.domain != g.domain:
        raise DomainMismatchError(f"Dominios distintos: {f.domain} vs {g.domain}")
    return complex(np.dot(f.values, g.values) * f.domain.weight)


def relative_l2_error(
    approx: GriddedFunction, exact: GriddedFunction, region: str = "interior"
) -> float:
    """Error L^2 relativo sobre el interior (|z| <= L/2) o sobre toda la caja."""
    if approx.domain != exact.domain:
        raise DomainMismatchError("Dominios distintos")
    if region == "interior":
        mask = approx.domain.interior
    elif region == "all":
        mask = np.ones(approx.domain.size, dtype=bool)
    else:
        raise ValueError(f"Región desconocida: {region}")
    diff = np.linalg.norm(approx.values[mask] - exact.values[mask])
    ref = np.linalg.norm(exact.values[mask])
    return float(diff / ref) if ref > 0 else float(diff)
