"""Ensamblado del operador de scattering S_{k,u} y de las familias T(kappa), T(kappa, eps).

    S_{k,u} h = -(1/4) C(u e_{-k} C̄(e_k conj(u) h)) = W_{k,u} V_{k,u} h

con W = -(1/2) C diag(u e_{-k}) y V = (1/2) C̄ diag(e_k conj(u)). Con este signo
la ecuación CGO es (I - S) m1 = 1 y las autofunciones del solitón cumplen
T(0) psi = psi. Las matrices incluyen la cuadratura (pesos h^2).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy.linalg import svdvals

from .errors import DomainMismatchError, PotentialError
from .export import write_operator
from .grid import Domain, GriddedFunction, e_k_sample
from .transforms import cauchy_matrix
from .utils import setup_logging

logger = setup_logging()

# Margen para excluir la frontera en las desigualdades estrictas
_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Representación matricial N^2 x N^2 de un operador integral."""

    domain: Domain
    matrix: np.ndarray = field(repr=False)
    k: complex = 0j
    label: str = ""

    def __post_init__(self):
        if self.matrix.shape != (self.domain.size, self.domain.size):
            raise ValueError(f"Forma {self.matrix.shape} incompatible con el dominio")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError(f"Entradas no finitas en {self.label}")

    def apply(self, f: GriddedFunction) -> GriddedFunction:
        if f.domain != self.domain:
            raise DomainMismatchError("Operador y función en dominios distintos")
        return self.domain.sample(self.matrix @ f.values)

    def transpose(self) -> "DenseOperator":
        """Traspuesto respecto del apareamiento bilineal (pesos uniformes)."""
        return DenseOperator(self.domain, self.matrix.T, self.k, f"{self.label}'")

    def kernel(self) -> np.ndarray:
        """Núcleo puntual a(z_i, w_j): la matriz sin los pesos de cuadratura."""
        return self.matrix / self.domain.weight

    def export(self, path: Path) -> Path:
        return write_operator(
            path,
            self.matrix,
            {"L": self.domain.L, "N": self.domain.N, "k": [self.k.real, self.k.imag], "label": self.label},
        )


@dataclass(frozen=True)
class AdmissiblePair:
    """Par de exponentes (p, t) con S_{k,u} en E_p para u en L^t ∩ L^t'."""

    p: float
    t: float

    def __post_init__(self):
        if not is_admissible(self.p, self.t):
            raise ValueError(f"(p={self.p}, t={self.t}) no es admisible")

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def t_dual(self) -> float:
        return self.t / (self.t - 1.0)


def _bilinear_factors(
    k: complex, a: GriddedFunction, b: GriddedFunction, near_field_exact: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Factores W(a) y V(b) del término bilineal -(1/4) C a e_{-k} C̄ e_k conj(b)."""
    if a.domain != b.domain:
        raise DomainMismatchError("Potenciales en dominios distintos")
    cm = cauchy_matrix(a.domain, near_field_exact)
    left = (a * e_k_sample(-k, a.domain)).values
    right = (e_k_sample(k, a.domain) * b.conj()).values
    w = -0.5 * cm.matrix * left[None, :]
    v = 0.5 * cm.conj_matrix * right[None, :]
    return w, v


def assemble_factors(
    k: complex, u: GriddedFunction, near_field_exact: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Factores W_{k,u}, V_{k,u} con S_{k,u} = W V."""
    return _bilinear_factors(k, u, u, near_field_exact)


def assemble_s(k: complex, u: GriddedFunction, near_field_exact: bool = False) -> DenseOperator:
    """Matriz de S_{k,u}."""
    w, v = assemble_factors(k, u, near_field_exact)
    return DenseOperator(u.domain, w @ v, complex(k), f"S[k={complex(k):.4g}]")


def assemble_t(
    kappa: complex,
    domain: Domain,
    params=None,
    near_field_exact: bool = False,
) -> DenseOperator:
    """T(kappa) = S_{k0 + kappa, u0}; las fases e_{k0} se cancelan."""
    from .soliton import SolitonParams, u0_sample

    params = params or SolitonParams()
    u0 = u0_sample(params, domain)
    op = assemble_s(params.k0 + kappa, u0, near_field_exact)
    return DenseOperator(domain, op.matrix, op.k, f"T[kappa={complex(kappa):.4g}]")


def check_compact_support(phi: GriddedFunction, tol: float = 1e-10) -> None:
    """Rechazar perturbaciones cuyo soporte toca el borde de la caja."""
    scale = float(np.max(np.abs(phi.values))) if phi.values.size else 0.0
    if scale == 0.0:
        return
    edge = float(np.max(np.abs(phi.values[phi.domain.frame])))
    if edge > tol * scale:
        raise PotentialError(f"La perturbación toca el borde de la caja (|phi| borde={edge:.2e})")


def assemble_blocks(
    kappa: complex,
    phi: GriddedFunction,
    params=None,
    near_field_exact: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bloques de T(kappa, eps) = B0 + eps B1 + eps^2 B2."""
    from .soliton import SolitonParams, u0_sample

    params = params or SolitonParams()
    check_compact_support(phi)
    u0 = u0_sample(params, phi.domain)
    k = params.k0 + kappa

    def block(a, b):
        w, v = _bilinear_factors(k, a, b, near_field_exact)
        return w @ v

    b0 = block(u0, u0)
    b1 = block(u0, phi) + block(phi, u0)
    b2 = block(phi, phi)
    return b0, b1, b2


def assemble_t_perturbed(
    kappa: complex,
    eps: float,
    phi: GriddedFunction,
    params=None,
    near_field_exact: bool = False,
) -> DenseOperator:
    """T(kappa, eps) = S_{k0 + kappa, u0 + eps phi}, ensamblado directamente."""
    from .soliton import SolitonParams, u0_sample

    params = params or SolitonParams()
    check_compact_support(phi)
    u = u0_sample(params, phi.domain) + eps * phi
    op = assemble_s(params.k0 + kappa, u, near_field_exact)
    return DenseOperator(phi.domain, op.matrix, op.k, f"T[kappa={complex(kappa):.4g}, eps={eps:g}]")


def _mixed(kernel: np.ndarray, weight: float, outer_p: float, inner_q: float) -> float:
    mod = np.abs(kernel)
    if np.isinf(inner_q):
        inner = mod.max(axis=1)
    else:
        inner = (weight * np.sum(mod ** inner_q, axis=1)) ** (1.0 / inner_q)
    if np.isinf(outer_p):
        return float(inner.max())
    return float((weight * np.sum(inner ** outer_p)) ** (1.0 / outer_p))


def mixed_norm(kernel: DenseOperator, outer_p: float, inner_q: float) -> float:
    """Norma ||a||_{L^p(L^q)} del núcleo puntual: (int (int |a(z,w)|^q dw)^{p/q} dz)^{1/p}."""
    if outer_p < 1 or inner_q < 1:
        raise ValueError("Se requiere p, q >= 1")
    return _mixed(kernel.kernel(), kernel.domain.weight, outer_p, inner_q)


def mixed_norm_adjoint(kernel: DenseOperator, outer_p: float, inner_q: float) -> float:
    """Norma mixta de a*(z, w) = conj(a(w, z))."""
    if outer_p < 1 or inner_q < 1:
        raise ValueError("Se requiere p, q >= 1")
    return _mixed(np.conj(kernel.kernel()).T, kernel.domain.weight, outer_p, inner_q)


def e_p_norms(op: DenseOperator, p: float) -> Tuple[float, float]:
    """(||a||_{L^p(L^p')}, ||a*||_{L^p'(L^p)}) de la definición de E_p."""
    p_dual = p / (p - 1.0)
    return mixed_norm(op, p, p_dual), mixed_norm_adjoint(op, p_dual, p)


def is_admissible(p: float, t: float) -> bool:
    """p > 2, 1 < t < 2, 1/2 + 1/p < 1/t y 1/p + 1/t > 1 (fronteras excluidas)."""
    if p <= 0 or t <= 0:
        raise ValueError("Se requiere p, t > 0")
    if not (p > 2 and 1 < t < 2):
        return False
    x, y = 1.0 / p, 1.0 / t
    return (0.5 + x < y - _EPS) and (x + y > 1.0 + _EPS)


def lebesgue_norm(u: GriddedFunction, t: float) -> float:
    """||u||_{L^t ∩ L^t'} = max de ambas normas."""
    t_dual = t / (t - 1.0)
    return max(u.norm(t), u.norm(t_dual))


def sigma_max(op: DenseOperator, shift_identity: bool = False) -> float:
    """Mayor valor singular (de la matriz o de I - matriz)."""
    matrix = op.matrix
    if shift_identity:
        matrix = np.eye(matrix.shape[0]) - matrix
    return float(svdvals(matrix)[0])


def operator_distance(a: DenseOperator, b: DenseOperator) -> float:
    """||A - B|| en norma espectral."""
    return float(svdvals(a.matrix - b.matrix)[0])

