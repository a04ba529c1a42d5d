"""Objetos exactos del solitón: potencial, soluciones CGO, bases espectrales y modelo radial.

    u0(z) = 2 conj(nu0) e_{k0}(z) / (|z + mu0|^2 + |nu0|^2)

El miembro normalizado (mu0 = 0, nu0 = 1) es 2 e_{k0} rho^{-2}; sus autofunciones
de T(0) son psi1 = conj(z) rho^{-2}, psi2 = rho^{-2}, con base dual
chi1 = (2/pi) z rho^{-4}, chi2 = (2/pi) rho^{-4}.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sint
from scipy import special
from scipy.linalg import eigvals

from .cgo import c_route_a
from .determinant import renormalized_det
from .errors import QuadratureFailure
from .grid import Domain, GriddedFunction, e_k_sample, pair, phase_resolution, relative_l2_error, rho_sample
from .operators import assemble_t
from .utils import parallel_map, setup_logging

logger = setup_logging()


@dataclass(frozen=True)
class SolitonParams:
    """Parámetros (k0, mu0, nu0) de la familia de un solitón."""

    k0: complex = 0j
    mu0: complex = 0j
    nu0: complex = 1 + 0j

    def __post_init__(self):
        if self.nu0 == 0:
            raise ValueError("nu0 debe ser no nulo")
        object.__setattr__(self, "k0", complex(self.k0))
        object.__setattr__(self, "mu0", complex(self.mu0))
        object.__setattr__(self, "nu0", complex(self.nu0))

    @property
    def normalized(self) -> bool:
        return self.mu0 == 0 and self.nu0 == 1

    def to_dict(self):
        return {k: [v.real, v.imag] for k, v in (("k0", self.k0), ("mu0", self.mu0), ("nu0", self.nu0))}


def u0_sample(params: SolitonParams, d: Domain) -> GriddedFunction:
    """Muestras del potencial del solitón."""
    den = np.abs(d.z + params.mu0) ** 2 + abs(params.nu0) ** 2
    return e_k_sample(params.k0, d) * (2.0 * np.conj(params.nu0) / den)


def _require_normalized(params: SolitonParams):
    if not params.normalized:
        raise ValueError("Las fórmulas exactas valen sólo para mu0 = 0, nu0 = 1")


def exact_m(
    kappa: complex, d: Domain, params: Optional[SolitonParams] = None
) -> Tuple[GriddedFunction, GriddedFunction]:
    """m1 = 1 + (i/kappa) conj(z) rho^{-2},  m2 = (i/kappa) e_{-k0} rho^{-2}."""
    params = params or SolitonParams()
    _require_normalized(params)
    if kappa == 0:
        raise ValueError("kappa = 0 es el punto excepcional")
    coef = 1j / complex(kappa)
    rho2 = rho_sample(d) * rho_sample(d)
    m1 = d.ones() + coef * d.sample(np.conj(d.z)) / rho2
    m2 = coef * e_k_sample(-params.k0, d) / rho2
    return m1, m2


def exact_s(kappa: complex) -> complex:
    """s(k0 + kappa) = 2i / kappa."""
    if kappa == 0:
        raise ValueError("kappa = 0 es el punto excepcional")
    return 2j / complex(kappa)


@dataclass(frozen=True, eq=False)
class Eigenbasis:
    """Autofunciones de T(0) y su base dual respecto del apareamiento bilineal."""

    psi1: GriddedFunction = field(repr=False)
    psi2: GriddedFunction = field(repr=False)
    chi1: GriddedFunction = field(repr=False)
    chi2: GriddedFunction = field(repr=False)

    @property
    def psis(self) -> Tuple[GriddedFunction, GriddedFunction]:
        return self.psi1, self.psi2

    @property
    def chis(self) -> Tuple[GriddedFunction, GriddedFunction]:
        return self.chi1, self.chi2

    def gram(self) -> np.ndarray:
        """Matriz <chi_i, psi_j>."""
        return np.array([[pair(c, p) for p in self.psis] for c in self.chis])

    def project(self, f: GriddedFunction) -> GriddedFunction:
        """F f = sum_i <chi_i, f> psi_i."""
        return pair(self.chi1, f) * self.psi1 + pair(self.chi2, f) * self.psi2


def eigenbasis(d: Domain) -> Eigenbasis:
    rho2 = (rho_sample(d) * rho_sample(d)).values
    z = d.z
    return Eigenbasis(
        psi1=d.sample(np.conj(z) / rho2),
        psi2=d.sample(1.0 / rho2),
        chi1=d.sample(2.0 / np.pi * z / rho2 ** 2),
        chi2=d.sample(2.0 / np.pi / rho2 ** 2),
    )


def normalized_pair(d: Domain) -> np.ndarray:
    """Par ortonormal en L^2(C; C^2): Psi1 = pi^{-1/2} rho^{-3} (conj z, 1), Psi2 = pi^{-1/2} rho^{-3} (1, -z).

    Forma (2, 2, N^2): [vector, componente, nodo].
    """
    scale = 1.0 / (np.sqrt(np.pi) * rho_sample(d).values ** 3)
    z = d.z
    one = np.ones_like(z)
    return np.array([[np.conj(z) * scale, one * scale], [one * scale, -z * scale]])


def reduced_matrix(
    kappa: complex,
    d: Domain,
    params: Optional[SolitonParams] = None,
    near_field_exact: bool = False,
) -> np.ndarray:
    """M_ij = <chi_i, T(kappa) psi_j>."""
    if abs(kappa) > 1:
        raise ValueError(f"|kappa| = {abs(kappa):.3g} > 1")
    basis = eigenbasis(d)
    op = assemble_t(kappa, d, params, near_field_exact)
    images = [op.apply(p) for p in basis.psis]
    return np.array([[pair(c, img) for img in images] for c in basis.chis])


def reduced_family(
    d: Domain, params: Optional[SolitonParams] = None, near_field_exact: bool = False
) -> Callable[[complex], np.ndarray]:
    """kappa -> I + M(kappa) - M(0): familia 2x2 cuyo determinante aísla el cero doble del piso de malla."""
    base = reduced_matrix(0j, d, params, near_field_exact)

    def family(kappa: complex) -> np.ndarray:
        return np.eye(2) + reduced_matrix(kappa, d, params, near_field_exact) - base

    return family


def fit_reduced_coefficients(kappas: Sequence[complex], m11: Sequence[complex]) -> Tuple[complex, complex, complex]:
    """Ajuste por mínimos cuadrados M11 ~ a + b kappa + c conj(kappa)."""
    kappas = np.asarray(kappas, dtype=np.complex128)
    design = np.column_stack([np.ones_like(kappas), kappas, np.conj(kappas)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(m11, dtype=np.complex128), rcond=None)
    return complex(coef[0]), complex(coef[1]), complex(coef[2])


@dataclass
class SpectralReport:
    """Estructura espectral de T(0) y matrices reducidas."""

    grid: dict
    eigenvalues: np.ndarray
    radius: float
    eigen_residuals: Tuple[float, float]
    dual_residuals: Tuple[float, float]
    biorthogonality: np.ndarray
    gram_condition: float
    reduced: List[Tuple[complex, np.ndarray]] = field(default_factory=list)

    @property
    def near_one(self) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues - 1.0) < self.radius]

    @property
    def multiplicity(self) -> int:
        return int(self.near_one.size)

    @property
    def gap(self) -> float:
        """Distancia a 1 del tercer autovalor más cercano."""
        dist = np.sort(np.abs(self.eigenvalues - 1.0))
        return float(dist[2]) if dist.size > 2 else float("inf")

    def to_dict(self):
        return {
            "grid": self.grid,
            "radius": self.radius,
            "multiplicity": self.multiplicity,
            "eigenvalues_near_one": self.near_one,
            "gap": self.gap,
            "eigen_residuals": list(self.eigen_residuals),
            "dual_residuals": list(self.dual_residuals),
            "biorthogonality": self.biorthogonality,
            "gram_condition": self.gram_condition,
            "reduced": [{"kappa": k, "matrix": m} for k, m in self.reduced],
        }


def spectral_report(
    d: Domain,
    params: Optional[SolitonParams] = None,
    radius: float = 0.05,
    kappas: Sequence[complex] = (),
    near_field_exact: bool = False,
    workers: int = 1,
) -> SpectralReport:
    """Autovalores de T(0) cerca de 1, residuos de psi_i y chi_i, biortogonalidad y matrices reducidas."""
    params = params or SolitonParams()
    t0 = assemble_t(0j, d, params, near_field_exact)
    basis = eigenbasis(d)
    logger.info(f"Autovalores de T(0) ({d.size}x{d.size})")
    values = eigvals(t0.matrix, check_finite=False)

    residuals = tuple(relative_l2_error(t0.apply(p), p) for p in basis.psis)
    t0_dual = t0.transpose()
    dual = tuple(relative_l2_error(t0_dual.apply(c), c) for c in basis.chis)
    gram = basis.gram()

    reduced = parallel_map(
        lambda k: (complex(k), reduced_matrix(k, d, params, near_field_exact)), list(kappas), workers
    )
    report = SpectralReport(
        grid={"L": d.L, "N": d.N, "near_field_exact": near_field_exact},
        eigenvalues=values,
        radius=radius,
        eigen_residuals=residuals,
        dual_residuals=dual,
        biorthogonality=gram,
        gram_condition=float(np.linalg.cond(gram)),
        reduced=reduced,
    )
    logger.info(f"Multiplicidad cerca de 1: {report.multiplicity}, gap={report.gap:.3f}")
    return report


def radial_log_derivative(t: np.ndarray) -> np.ndarray:
    """d/dt log H = 1/t - h(t) = 4 (K1(2 sqrt t)^2 - K0(2 sqrt t)^2) para el solitón."""
    x = 2.0 * np.sqrt(np.asarray(t, dtype=float))
    return 4.0 * (special.k1(x) ** 2 - special.k0(x) ** 2)


def soliton_h(t: np.ndarray) -> np.ndarray:
    """Densidad radial h(t) = gamma(kappa)/kappa con |kappa|^2 = t."""
    t = np.asarray(t, dtype=float)
    return 1.0 / t - radial_log_derivative(t)


def soliton_dbar_value(kappa: complex) -> complex:
    """dbar log D(k0 + kappa) = 1/conj(kappa) - kappa h(|kappa|^2) para el solitón.

    Igual a 4 t (K1^2 - K0^2) / conj(kappa) con t = |kappa|^2: exponencialmente
    pequeño para |kappa| >~ 1.
    """
    kappa = complex(kappa)
    if kappa == 0:
        raise ValueError("kappa = 0 es el punto excepcional")
    t = abs(kappa) ** 2
    return complex(t * float(radial_log_derivative(t)) / np.conj(kappa))


def soliton_h_quadrature(
    t: np.ndarray, d: Domain, params: Optional[SolitonParams] = None, workers: int = 1
) -> np.ndarray:
    """h(t) por la ruta A de c(k) sobre el solitón muestreado."""
    params = params or SolitonParams()
    u0 = u0_sample(params, d)

    def one(tt: float) -> float:
        kappa = np.sqrt(tt)
        gamma = c_route_a(params.k0 + kappa, u0, carrier=params.k0)
        return float((gamma / kappa).real)

    return np.array(parallel_map(one, list(np.asarray(t, dtype=float)), workers))


def radial_constant() -> float:
    """c = exp(int_0^1 h - int_1^inf (1/t - h)) por cuadratura adaptativa."""
    head, err_head = sint.quad(soliton_h, 0.0, 1.0, limit=200)
    tail, err_tail = sint.quad(radial_log_derivative, 1.0, np.inf, limit=200)
    if not (np.isfinite(head) and np.isfinite(tail)) or max(err_head, err_tail) > 1e-6:
        raise QuadratureFailure(f"Cuadratura imprecisa (errores {err_head:.1e}, {err_tail:.1e})")
    return float(np.exp(head - tail))


@dataclass
class RadialDetModel:
    """H(t) en una malla logarítmica de (0, T_max], con H(T_max) = 1."""

    t: np.ndarray
    h: np.ndarray
    H: np.ndarray
    c: float
    c_reference: float
    source: str

    def rows(self, config_hash: str = ""):
        return [
            {"t": float(t), "h": float(h), "H": float(H), "config_hash": config_hash}
            for t, h, H in zip(self.t, self.h, self.H)
        ]

    def drift_last_decade(self) -> float:
        """Variación relativa de H(t)/t sobre la década más pequeña de t."""
        mask = self.t <= 10.0 * self.t[0]
        ratio = self.H[mask] / self.t[mask]
        return float((ratio.max() - ratio.min()) / ratio.mean())

    def H_at(self, t: float) -> float:
        return float(np.exp(np.interp(np.log(t), np.log(self.t), np.log(self.H))))


def radial_det_model(
    T_max: float = 100.0,
    n_t: int = 400,
    t_min: float = 1e-6,
    domain: Optional[Domain] = None,
    params: Optional[SolitonParams] = None,
    workers: int = 1,
) -> RadialDetModel:
    """Integrar d/dt log H = 1/t - h(t) hacia atrás desde H(T_max) = 1 (trapecios en log t)."""
    if T_max <= 1.0:
        raise ValueError("Se requiere T_max >> 1")
    t = np.logspace(np.log10(t_min), np.log10(T_max), n_t)
    if domain is None:
        h = soliton_h(t)
        g = radial_log_derivative(t)
        source = "closed-form"
    else:
        h = soliton_h_quadrature(t, domain, params, workers)
        g = 1.0 / t - h
        source = "route-a"
    if not np.all(np.isfinite(g)):
        raise QuadratureFailure("h(t) no finito en la malla")

    s = np.log(t)
    cumulative = sint.cumulative_trapezoid(t * g, s, initial=0.0)
    log_H = -(cumulative[-1] - cumulative)
    H = np.exp(log_H)

    # c = H(t)/t en el extremo inferior, corregido por int_0^{t_min} h ~ 0
    c = float(H[0] / t[0])
    model = RadialDetModel(t, h, H, c, radial_constant(), source)
    logger.info(f"Modelo radial ({source}): c={model.c:.5f}, referencia={model.c_reference:.5f}")
    return model


def radiality_check(
    d: Domain,
    params: Optional[SolitonParams] = None,
    radius: float = 1.0,
    phases: int = 8,
    near_field_exact: bool = False,
    workers: int = 1,
) -> float:
    """Dispersión relativa de |D(k0 + r e^{i theta})| sobre fases equiespaciadas."""
    thetas = 2.0 * np.pi * np.arange(phases) / phases

    def one(theta: float) -> float:
        return renormalized_det(assemble_t(radius * np.exp(1j * theta), d, params, near_field_exact)).abs

    values = np.array(parallel_map(one, list(thetas), workers))
    return float((values.max() - values.min()) / values.mean())


RADIAL_CHECK_RADII = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


def det_vs_radial_model(
    d: Domain,
    model: RadialDetModel,
    params: Optional[SolitonParams] = None,
    radii: Sequence[float] = RADIAL_CHECK_RADII,
    phase: float = 0.0,
    max_resolution: float = 0.75,
    near_field_exact: bool = False,
    workers: int = 1,
) -> List[dict]:
    """|D(k0 + kappa)| frente a H(|kappa|^2) sobre los radios que la malla resuelve.

    Los radios con kappa por encima de max_resolution veces el límite de Nyquist
    se omiten (D discreto allí repite valores de otra zona).
    """
    params = params or SolitonParams()
    kappas = [r * np.exp(1j * phase) for r in radii]
    kept = [k for k in kappas if phase_resolution(k, d) <= max_resolution]
    skipped = len(kappas) - len(kept)
    if skipped:
        logger.info(f"Radios omitidos por resolución de fase: {skipped} de {len(kappas)} (N={d.N})")

    def one(kappa: complex) -> dict:
        value = renormalized_det(assemble_t(kappa, d, params, near_field_exact)).abs
        expected = model.H_at(abs(kappa) ** 2)
        return {
            "radius": float(abs(kappa)),
            "abs_D": value,
            "H": expected,
            "relative": abs(value - expected) / expected,
        }

    return parallel_map(one, kept, workers)


@dataclass(frozen=True)
class LaurentCheck:
    """c(k0 + kappa) conj(kappa) sobre un círculo grande; debe tender a 1."""

    radius: float
    values: np.ndarray

    @property
    def deviation(self) -> float:
        return float(np.abs(self.values - 1.0).max())

    def to_dict(self):
        return {"radius": self.radius, "values": self.values, "deviation": self.deviation}


def laurent_check(
    d: Domain, params: Optional[SolitonParams] = None, radius: float = 10.0, phases: int = 4
) -> LaurentCheck:
    """c(k) (conj(k) - conj(k0)) -> 1 para |k - k0| grande, por la ruta A."""
    params = params or SolitonParams()
    u0 = u0_sample(params, d)
    thetas = 2.0 * np.pi * (np.arange(phases) + 0.5) / phases
    kappas = radius * np.exp(1j * thetas)
    values = np.array([c_route_a(params.k0 + kappa, u0, carrier=params.k0) * np.conj(kappa) for kappa in kappas])
    check = LaurentCheck(radius, values)
    logger.info(f"Laurent en |k - k0| = {radius:g}: max |c conj(kappa) - 1| = {check.deviation:.2e}")
    return check
