"""Maquinaria de inestabilidad: proyecciones de Riesz, similaridad de Sz.-Nagy,
funcionales alpha/beta, determinante de desdoblamiento 2x2 y veredicto de estabilidad.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate as sint
from scipy import optimize
from scipy.linalg import eigvals, orth, solve, svdvals

from .determinant import (
    DEFAULT_ZERO_RATIO,
    KGrid,
    det_evaluator,
    det_scan,
    find_zeros,
    refine_minimum,
    renormalized_det,
)
from .errors import EigenvalueOnContour, GapTooLarge, NoConvergence, PotentialError
from .grid import Domain, GriddedFunction, e_k_sample, integrate, pair, rho_sample
from .operators import (
    DenseOperator,
    assemble_blocks,
    assemble_t,
    assemble_t_perturbed,
    check_compact_support,
)
from .soliton import SolitonParams, eigenbasis, u0_sample
from .utils import parallel_map, setup_logging

logger = setup_logging()

Matrix = Union[DenseOperator, np.ndarray]

DEFAULT_CUTOFF_RADIUS = 4.0
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 2000
IDEMPOTENCY_TOL = 1e-6


class ChiConvention(str, Enum):
    """Relación entre la perturbación phi y la función chi de los funcionales."""

    PLUS = "plus"  # chi = e_{k0} phi
    MINUS = "minus"  # chi = e_{-k0} phi


def _matrix(a: Matrix) -> np.ndarray:
    return a.matrix if isinstance(a, DenseOperator) else np.asarray(a, dtype=np.complex128)


# Perfiles de prueba


def cutoff(r: np.ndarray, radius: float = DEFAULT_CUTOFF_RADIUS) -> np.ndarray:
    """Corte C^inf exp(1 - 1/(1 - (r/R)^2)) para r < R, cero fuera."""
    r = np.asarray(r, dtype=float)
    x = np.clip((r / radius) ** 2, 0.0, 1.0)
    inside = x < 1.0
    safe = np.where(inside, 1.0 - x, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)


def _ring(r: np.ndarray, center: float) -> np.ndarray:
    return np.exp(-((r * r - center * center) ** 2))


def _degenerate_integrand(r: float, center: float, radius: float) -> float:
    return float(_ring(r, center) * cutoff(r, radius) * (1.0 - r * r) / (1.0 + r * r) ** 2 * r)


@lru_cache(maxsize=8)
def degenerate_center(radius: float = DEFAULT_CUTOFF_RADIUS) -> float:
    """Centro c del anillo exp(-(|z|^2 - c^2)^2) con int chi (1 - |z|^2) rho^{-4} = 0 (Brent)."""

    def moment(center: float) -> float:
        value, _ = sint.quad(_degenerate_integrand, 0.0, radius, args=(center, radius), limit=200)
        return value

    hi = 0.65 * radius
    if moment(0.0) * moment(hi) >= 0:
        raise PotentialError(f"Sin cambio de signo para el perfil degenerado con R={radius}")
    center = optimize.brentq(moment, 0.0, hi, xtol=1e-12)
    logger.debug(f"Perfil degenerado: c={center:.8f} (R={radius})")
    return float(center)


PROFILES: Dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "gauss": lambda r, R: np.exp(-r * r) * cutoff(r, R),
    "mexican": lambda r, R: (1.0 - r * r) * np.exp(-r * r) * cutoff(r, R),
    "degenerate": lambda r, R: _ring(r, degenerate_center(R)) * cutoff(r, R),
}


def profile_chi(name: str, d: Domain, radius: float = DEFAULT_CUTOFF_RADIUS) -> GriddedFunction:
    """Perfil real y radial chi muestreado."""
    if name not in PROFILES:
        raise PotentialError(f"Perfil desconocido: {name} (disponibles: {', '.join(PROFILES)})")
    return d.sample(PROFILES[name](np.abs(d.z), radius))


def builtin_phi(
    name: str,
    d: Domain,
    params: Optional[SolitonParams] = None,
    radius: float = DEFAULT_CUTOFF_RADIUS,
) -> GriddedFunction:
    """phi = e_{k0} chi para un perfil incorporado."""
    params = params or SolitonParams()
    phi = e_k_sample(params.k0, d) * profile_chi(name, d, radius)
    check_compact_support(phi)
    return phi


# Funcionales alpha, beta


@dataclass(frozen=True)
class AlphaBeta:
    """Funcionales de la perturbación bajo una convención para chi.

    alpha, beta: -(2/pi) int (chi - conj(chi)|z|^2) rho^{-4}, (2/pi) int (chi - conj(chi)) z rho^{-4}
    functional: int (chi - |z|^2 conj(chi)) rho^{-4}
    block_alpha, block_beta: entradas del bloque lineal en eps que produce el operador ensamblado
    orthogonality: int chi rho^{-2} (sólo informativo)
    """

    convention: ChiConvention
    alpha: complex
    beta: complex
    functional: complex
    block_alpha: complex
    block_beta: complex
    orthogonality: complex

    def degenerate(self, tol: float = 1e-4) -> bool:
        return abs(self.alpha) < tol and abs(self.beta) < tol

    def to_dict(self):
        return {
            "convention": self.convention.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "functional": self.functional,
            "block_alpha": self.block_alpha,
            "block_beta": self.block_beta,
            "orthogonality": self.orthogonality,
        }


def chi_from_phi(phi: GriddedFunction, params: SolitonParams, convention: ChiConvention) -> GriddedFunction:
    sign = 1.0 if ChiConvention(convention) is ChiConvention.PLUS else -1.0
    return e_k_sample(sign * params.k0, phi.domain) * phi


def alpha_beta(
    phi: GriddedFunction,
    params: Optional[SolitonParams] = None,
    convention: ChiConvention = ChiConvention.MINUS,
) -> AlphaBeta:
    """Evaluar alpha, beta y el funcional de no degeneración por cuadratura."""
    params = params or SolitonParams()
    convention = ChiConvention(convention)
    check_compact_support(phi)
    d = phi.domain
    chi = chi_from_phi(phi, params, convention)
    chib = chi.conj()
    rho2 = rho_sample(d) * rho_sample(d)
    rho4 = rho2 * rho2
    z = d.sample(d.z)
    abs_z2 = d.sample(np.abs(d.z) ** 2)

    functional = integrate((chi - chib * abs_z2) / rho4)
    odd = integrate((chi - chib) * z / rho4)
    return AlphaBeta(
        convention=convention,
        alpha=-2.0 / np.pi * functional,
        beta=2.0 / np.pi * odd,
        functional=functional,
        block_alpha=integrate((chi + chib * abs_z2) / rho4) / np.pi,
        block_beta=-odd / np.pi,
        orthogonality=integrate(chi / rho2),
    )


def alpha_beta_all(phi: GriddedFunction, params: Optional[SolitonParams] = None) -> Dict[str, AlphaBeta]:
    return {c.value: alpha_beta(phi, params, c) for c in ChiConvention}


# Proyecciones de Riesz y similaridad


@dataclass
class ProjectionPair:
    """P en (kappa, eps), P0 en (0, 0), y la distancia entre ambas."""

    P: np.ndarray = field(repr=False)
    P0: np.ndarray = field(repr=False)
    radius: float
    nodes: int

    @property
    def gap(self) -> float:
        return float(svdvals(self.P - self.P0)[0])

    @property
    def ranks(self):
        return int(round(np.trace(self.P).real)), int(round(np.trace(self.P0).real))

    def idempotency(self) -> float:
        return max(float(svdvals(m @ m - m)[0]) for m in (self.P, self.P0))


def riesz_projection(
    a: Matrix,
    center: complex = 1.0,
    radius: float = 0.5,
    nodes: int = 32,
    band: float = 0.02,
    workers: int = 1,
) -> np.ndarray:
    """P = -(1/(2 pi i)) int_{|lambda - c| = r} (A - lambda)^{-1} d lambda, por trapecios."""
    matrix = _matrix(a)
    n = matrix.shape[0]
    spectrum = eigvals(matrix, check_finite=False)
    on_contour = np.abs(np.abs(spectrum - center) - radius) < band
    if np.any(on_contour):
        worst = spectrum[on_contour][0]
        raise EigenvalueOnContour(f"Autovalor {worst:.4g} a menos de {band} del contorno |lambda - {center}| = {radius}")

    thetas = 2.0 * np.pi * np.arange(nodes) / nodes
    identity = np.eye(n, dtype=np.complex128)

    def term(theta: float) -> np.ndarray:
        step = radius * np.exp(1j * theta)
        return step * solve(matrix - (center + step) * identity, identity, check_finite=False)

    terms = parallel_map(term, list(thetas), workers)
    proj = -sum(terms) / nodes
    defect = float(svdvals(proj @ proj - proj)[0])
    if defect > IDEMPOTENCY_TOL:
        logger.warning(f"Proyección poco idempotente: ||P^2 - P|| = {defect:.2e}")
    return proj


def projection_pair(
    kappa: complex,
    eps: float,
    phi: GriddedFunction,
    params: Optional[SolitonParams] = None,
    radius: float = 0.5,
    nodes: int = 32,
    band: float = 0.02,
    near_field_exact: bool = False,
    workers: int = 1,
) -> ProjectionPair:
    """Proyecciones de Riesz de T(kappa, eps) y T(0, 0) sobre el mismo contorno."""
    d = phi.domain
    t = assemble_t_perturbed(kappa, eps, phi, params, near_field_exact)
    t0 = assemble_t(0j, d, params, near_field_exact)
    return ProjectionPair(
        P=riesz_projection(t, radius=radius, nodes=nodes, band=band, workers=workers),
        P0=riesz_projection(t0, radius=radius, nodes=nodes, band=band, workers=workers),
        radius=radius,
        nodes=nodes,
    )


def sznagy_similarity(p: np.ndarray, p0: np.ndarray) -> np.ndarray:
    """V = (I - (P - P0)^2)^{-1/2} [P P0 + (I - P)(I - P0)], con P V = V P0."""
    p = np.asarray(p, dtype=np.complex128)
    p0 = np.asarray(p0, dtype=np.complex128)
    diff = p - p0
    gap = float(svdvals(diff)[0])
    if gap >= 0.5:
        raise GapTooLarge(f"||P - P0|| = {gap:.3f} >= 1/2")

    n = p.shape[0]
    identity = np.eye(n, dtype=np.complex128)
    x = diff @ diff
    term = identity
    root = identity.copy()
    for m in range(SERIES_MAX_TERMS):
        term = term @ x * ((2 * m + 1) / (2 * m + 2))
        root += term
        if np.linalg.norm(term, 2) < SERIES_TOL:
            break
    else:
        raise NoConvergence("Serie binomial sin converger")
    return root @ (p @ p0 + (identity - p) @ (identity - p0))


# Determinante de desdoblamiento


def linear_block_model(ab: AlphaBeta) -> np.ndarray:
    """Bloque lineal en eps esperado: [[a, b], [-conj(b), conj(a)]] con a, b = block_alpha, block_beta."""
    a, b = ab.block_alpha, ab.block_beta
    return np.array([[a, b], [-np.conj(b), np.conj(a)]], dtype=np.complex128)


def predicted_split(kappa: complex, eps: float, ab: AlphaBeta) -> float:
    """|2i conj(kappa) + eps b|^2 + eps^2 |a|^2: determinante del bloque kappa [[0, 2i conj(kappa)], [2i kappa, 0]] más eps M1."""
    kappa = complex(kappa)
    return float(abs(2j * np.conj(kappa) + eps * ab.block_beta) ** 2 + eps * eps * abs(ab.block_alpha) ** 2)


@dataclass(frozen=True)
class SplittingResult:
    """Determinante reducido 2x2 en (kappa, eps) y sus modelos asintóticos."""

    kappa: complex
    eps: float
    matrix: np.ndarray = field(repr=False)
    reduced_det: float
    asymptotic: float
    closed_form: float
    predicted: float
    full_det: float
    alpha_m: complex
    beta_m: complex
    ell: complex

    @property
    def ratio(self) -> float:
        return self.reduced_det / self.asymptotic if self.asymptotic > 0 else float("nan")

    @property
    def predicted_ratio(self) -> float:
        return self.reduced_det / self.predicted if self.predicted > 0 else float("nan")

    def row(self):
        return {
            "re_kappa": self.kappa.real,
            "im_kappa": self.kappa.imag,
            "eps": self.eps,
            "reduced_det": self.reduced_det,
            "asymptotic": self.asymptotic,
            "closed_form": self.closed_form,
            "predicted": self.predicted,
            "full_det": self.full_det,
        }


TABLE_COLUMNS = [
    "re_kappa", "im_kappa", "eps", "reduced_det", "asymptotic", "closed_form", "predicted", "full_det", "config_hash",
]


class SplittingModel:
    """Datos fijos para una perturbación: base espectral, T(0,0) y bloque lineal M1.

    M1 usa chi = e_{-k0} phi, que es la convención del operador ensamblado.
    """

    def __init__(
        self,
        phi: GriddedFunction,
        params: Optional[SolitonParams] = None,
        near_field_exact: bool = False,
    ):
        self.phi = phi
        self.params = params or SolitonParams()
        self.near_field_exact = near_field_exact
        self.domain = phi.domain
        self.basis = eigenbasis(self.domain)
        self.functionals = alpha_beta(phi, self.params, ChiConvention.MINUS)
        self.t00 = assemble_t(0j, self.domain, self.params, near_field_exact).matrix
        _, b1, _ = assemble_blocks(0j, phi, self.params, near_field_exact)
        self.m1 = self._reduce(b1)

    def _reduce(self, matrix: np.ndarray) -> np.ndarray:
        images = [self.domain.sample(matrix @ p.values) for p in self.basis.psis]
        return np.array([[pair(c, img) for img in images] for c in self.basis.chis])

    def kappa_block(self, kappa: complex) -> np.ndarray:
        """<chi_i, (T(kappa, 0) - T(0, 0)) psi_j>."""
        t = assemble_t(kappa, self.domain, self.params, self.near_field_exact).matrix
        return self._reduce(t - self.t00)

    def m1_structure(self) -> float:
        """Desviación relativa de M1 respecto de [[a, b], [-conj(b), conj(a)]]."""
        model = linear_block_model(self.functionals)
        scale = max(float(np.linalg.norm(model, 2)), float(np.linalg.norm(self.m1, 2)))
        if scale == 0:
            return 0.0
        return float(np.linalg.norm(self.m1 - model, 2) / scale)

    def split_abs_det(self, kappa: complex, eps: float) -> float:
        """|det(eps M1 + bloque kappa)|."""
        return float(abs(np.linalg.det(eps * self.m1 + self.kappa_block(complex(kappa)))))

    def evaluate(self, kappa: complex, eps: float) -> SplittingResult:
        kappa = complex(kappa)
        if abs(kappa) > 0.2 or abs(eps) > 0.2:
            raise ValueError(f"Fuera del régimen perturbativo: |kappa|={abs(kappa):.3g}, eps={eps}")
        op = assemble_t_perturbed(kappa, eps, self.phi, self.params, self.near_field_exact)
        reduced = self._reduce(op.matrix - self.t00)
        k_block = self.kappa_block(kappa)
        linear = eps * self.m1 + k_block
        alpha_m, beta_m, ell = self.m1[0, 0], self.m1[0, 1], k_block[0, 1]
        closed = eps * eps * abs(alpha_m) ** 2 + abs(ell + eps * beta_m) ** 2
        return SplittingResult(
            kappa=kappa,
            eps=float(eps),
            matrix=reduced,
            reduced_det=float(abs(np.linalg.det(reduced))),
            asymptotic=float(abs(np.linalg.det(linear))),
            closed_form=float(closed),
            predicted=predicted_split(kappa, eps, self.functionals),
            full_det=renormalized_det(op).abs,
            alpha_m=complex(alpha_m),
            beta_m=complex(beta_m),
            ell=complex(ell),
        )

    def full_abs_det(self, kappa: complex, eps: float) -> float:
        return renormalized_det(
            assemble_t_perturbed(kappa, eps, self.phi, self.params, self.near_field_exact)
        ).abs

    def resolvent_product(self, kappa: complex, eps: float) -> float:
        """|kappa| ||(I - T(kappa, eps))^{-1}|| por el menor valor singular."""
        op = assemble_t_perturbed(kappa, eps, self.phi, self.params, self.near_field_exact)
        smallest = svdvals(np.eye(self.domain.size) - op.matrix)[-1]
        return float(abs(kappa) / smallest) if smallest > 0 else float("inf")


def splitting_determinant(
    kappa: complex,
    eps: float,
    phi: GriddedFunction,
    params: Optional[SolitonParams] = None,
    near_field_exact: bool = False,
) -> SplittingResult:
    """Determinante de <chi_i, (T(kappa, eps) - T(0, 0)) psi_j> y sus modelos."""
    return SplittingModel(phi, params, near_field_exact).evaluate(kappa, eps)


# Barrido de estabilidad


@dataclass
class EpsilonSummary:
    eps: float
    scan_min_abs_D: float
    zeros: List[complex]
    fine_min_reduced: float
    fine_min_full: float
    split_min: float
    split_kappa: complex
    split_level: float
    annulus_min_abs_D: float
    resolvent_bound: float
    has_zero: bool = False

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class PerturbationReport:
    """Resultado de stability_scan."""

    alpha_beta: Dict[str, AlphaBeta]
    convention: ChiConvention
    eps_list: List[float]
    kgrid: KGrid
    floor: float
    m1_structure: float
    summaries: List[EpsilonSummary]
    table: List[SplittingResult] = field(default_factory=list)
    verdict: str = "inconclusive"

    def split_exponents(self) -> List[float]:
        """Pendientes log-log de split_min entre eps consecutivos (2 si escala como eps^2)."""
        out = []
        for prev, cur in zip(self.summaries, self.summaries[1:]):
            if prev.split_min > 0 and cur.split_min > 0 and cur.eps != prev.eps:
                out.append(float(np.log(cur.split_min / prev.split_min) / np.log(cur.eps / prev.eps)))
            else:
                out.append(float("nan"))
        return out

    def rows(self, config_hash: str = ""):
        return [dict(r.row(), config_hash=config_hash) for r in self.table]

    def verdict_line(self) -> str:
        ab = self.alpha_beta[self.convention.value]
        return (
            f"verdict={self.verdict} alpha={ab.alpha:.4g} beta={ab.beta:.4g} "
            f"eps={','.join(f'{e:g}' for e in self.eps_list)}"
        )

    def to_dict(self, config_hash: str = ""):
        return {
            "config_hash": config_hash,
            "verdict": self.verdict,
            "convention": self.convention.value,
            "alpha_beta": {k: v.to_dict() for k, v in self.alpha_beta.items()},
            "eps": self.eps_list,
            "k_grid": self.kgrid.to_dict(),
            "floor": self.floor,
            "m1_structure": self.m1_structure,
            "split_exponents": self.split_exponents(),
            "summaries": [s.to_dict() for s in self.summaries],
            "table": [r.row() for r in self.table],
        }


def _fine_kappas(radius: float, nodes: int) -> np.ndarray:
    axis = np.linspace(-radius, radius, nodes)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    kappas = (re + 1j * im).ravel()
    return kappas[np.abs(kappas) <= radius + 1e-15]


def _annulus_kappas(inner: float, outer: float, radii: int, phases: int) -> np.ndarray:
    if inner >= outer:
        return np.array([], dtype=np.complex128)
    rs = np.geomspace(inner, outer, radii)
    thetas = 2.0 * np.pi * (np.arange(phases) + 0.5) / phases
    return (rs[:, None] * np.exp(1j * thetas[None, :])).ravel()


def stability_scan(
    phi: GriddedFunction,
    eps_list: Sequence[float],
    kgrid: KGrid,
    params: Optional[SolitonParams] = None,
    convention: ChiConvention = ChiConvention.MINUS,
    c1: float = 1.0,
    fine_nodes: int = 5,
    annulus_outer: float = 0.2,
    annulus_radii: int = 3,
    annulus_phases: int = 8,
    split_tol: float = 1e-2,
    zero_ratio: float = DEFAULT_ZERO_RATIO,
    near_field_exact: bool = False,
    workers: int = 1,
) -> PerturbationReport:
    """Veredicto sobre el conjunto excepcional de u0 + eps phi.

    Lejos de k0 (fuera del disco de radio annulus_outer) los ceros salen de
    find_zeros sobre el barrido de |D(k; u0 + eps phi)|. Cerca de k0 el |D| completo
    arrastra el piso de discretización |D(k0; u0)|, así que se decide con el
    determinante reducido |det(eps M1 + bloque kappa)|: su mínimo refinado cuenta
    como cero si no supera split_tol eps^2 ||M1||^2 (o 1e-14 si M1 = 0).
    El |D| completo en el disco fino y en el anillo queda como diagnóstico.
    """
    params = params or SolitonParams()
    convention = ChiConvention(convention)
    d = phi.domain
    functionals = alpha_beta_all(phi, params)
    chosen = functionals[convention.value]
    logger.info(f"alpha={chosen.alpha:.4g}, beta={chosen.beta:.4g} ({convention.value})")
    if chosen.degenerate():
        logger.warning("alpha = beta = 0: el criterio de desdoblamiento no decide")

    model = SplittingModel(phi, params, near_field_exact)
    structure = model.m1_structure()
    floor = renormalized_det(assemble_t(0j, d, params, near_field_exact)).abs
    linear_size = float(np.linalg.norm(model.m1, 2))
    logger.info(f"Piso de discretización |D(k0; u0)| = {floor:.3e}, ||M1|| = {linear_size:.4g}")
    if structure > 0.1:
        logger.warning(f"M1 se aparta de [[a, b], [-conj(b), conj(a)]]: desviación relativa {structure:.2e}")

    summaries, table = [], []
    for eps in eps_list:
        eps = float(eps)
        u = u0_sample(params, d) + eps * phi
        scan = det_scan(u, kgrid, near_field_exact, workers, potential=f"soliton+{eps:g}*phi", carrier=params.k0)
        finite = scan.abs_grid()[np.isfinite(scan.abs_grid())]
        scan_min = float(finite.min()) if finite.size else float("nan")
        far = find_zeros(
            scan, det_evaluator(u, near_field_exact), zero_ratio=zero_ratio,
            exclusions=[(params.k0, annulus_outer)],
        )
        scan.zeros = far

        radius = 2.0 * c1 * max(eps, 1e-3)
        fine = parallel_map(lambda k: model.evaluate(k, eps), list(_fine_kappas(radius, fine_nodes)), workers)
        table.extend(fine)
        best = min(fine, key=lambda r: r.asymptotic)
        split_kappa, split_min = refine_minimum(
            lambda k: model.split_abs_det(k, eps), best.kappa, 0.25 * radius, maxiter=60
        )
        split_min = min(split_min, best.asymptotic)
        split_level = max(split_tol * eps * eps * linear_size ** 2, 1e-14)

        ring = list(_annulus_kappas(c1 * eps, annulus_outer, annulus_radii, annulus_phases))
        annulus_min, bound = float("nan"), float("nan")
        if ring:
            annulus_min = min(parallel_map(lambda k: model.full_abs_det(k, eps), ring, workers))
            bound = max(parallel_map(lambda k: model.resolvent_product(k, eps), ring, workers))

        summary = EpsilonSummary(
            eps=eps,
            scan_min_abs_D=scan_min,
            zeros=[z.k for z in far],
            fine_min_reduced=min(r.reduced_det for r in fine),
            fine_min_full=min(r.full_det for r in fine),
            split_min=split_min,
            split_kappa=split_kappa,
            split_level=split_level,
            annulus_min_abs_D=annulus_min,
            resolvent_bound=bound,
        )
        summary.has_zero = bool(far) or split_min <= split_level
        summaries.append(summary)
        logger.info(
            f"eps={eps:g}: ceros lejanos={len(far)}, min reducido={split_min:.3e} "
            f"(nivel {split_level:.3e}), min|D| anillo={annulus_min:.3e}"
        )

    if any(s.has_zero for s in summaries):
        verdict = "nonempty"
    elif chosen.degenerate():
        verdict = "inconclusive"
    else:
        verdict = "empty"
    logger.info(f"Veredicto: {verdict}")
    return PerturbationReport(
        alpha_beta=functionals,
        convention=convention,
        eps_list=[float(e) for e in eps_list],
        kgrid=kgrid,
        floor=floor,
        m1_structure=structure,
        summaries=summaries,
        table=table,
        verdict=verdict,
    )


# Multiplicidad y comprobaciones por bloques


@dataclass(frozen=True)
class MultiplicityResult:
    m_fit: float
    n_kernel: int
    n_alg: int

    @property
    def consistent(self) -> bool:
        """N <= m (con tolerancia de ajuste)."""
        return self.n_kernel <= self.m_fit + 0.1

    def to_dict(self):
        return {"m_fit": self.m_fit, "N_kernel": self.n_kernel, "N_alg": self.n_alg}


def multiplicity_check(
    family: Callable[[complex], Matrix],
    radii: Sequence[float] = (1e-3, 2e-3, 5e-3, 1e-2, 2e-2),
    phase: float = 0.7,
    kernel_tol: float = 1e-2,
    alg_radius: float = 0.05,
) -> MultiplicityResult:
    """Orden m de Det(I - A(kappa)) en kappa = 0 frente a la dimensión del núcleo de I - A(0)."""
    radii = np.asarray(radii, dtype=float)
    logs = [renormalized_det(_matrix(family(r * np.exp(1j * phase)))).log_abs for r in radii]
    m_fit = float(np.polyfit(np.log(radii), logs, 1)[0])

    a0 = _matrix(family(0j))
    n = a0.shape[0]
    sv = svdvals(np.eye(n) - a0)
    n_kernel = int(np.count_nonzero(sv < kernel_tol * max(sv[0], 1.0)))
    n_alg = int(np.count_nonzero(np.abs(eigvals(a0) - 1.0) < alg_radius))
    result = MultiplicityResult(m_fit, n_kernel, n_alg)
    logger.info(f"Multiplicidad: m_fit={m_fit:.3f}, N_kernel={n_kernel}, N_alg={n_alg}")
    return result


def defective_family(eps: complex) -> np.ndarray:
    """Familia 3x3 con autovalor unidad defectivo en eps = 0; det(I - A) = -eps - eps^3."""
    return np.array([[1.0, 1.0, eps], [eps, 1.0, 1.0], [eps, eps, 1.0]], dtype=np.complex128)


def block_factorization_check(a: Matrix, p: np.ndarray) -> float:
    """Diferencia relativa entre Det(I - PAP - QAQ) y Det(I - PAP) Det(I - QAQ)."""
    matrix = _matrix(a)
    q = np.eye(matrix.shape[0]) - p
    pap = p @ matrix @ p
    qaq = q @ matrix @ q
    whole = renormalized_det(pap + qaq).value
    split = renormalized_det(pap).value * renormalized_det(qaq).value
    scale = max(abs(whole), abs(split))
    return float(abs(whole - split) / scale) if scale > 0 else 0.0


def restricted_singular_values(a: Matrix, p: np.ndarray) -> Dict[str, float]:
    """Menores valores singulares de I - A, y de I - PAP e I - QAQ restringidos a ran P y ran Q."""
    matrix = _matrix(a)
    n = matrix.shape[0]
    identity = np.eye(n)
    q = identity - p
    out = {"full": float(svdvals(identity - matrix)[-1])}
    for name, proj in (("range_p", p), ("range_q", q)):
        basis = orth(proj)
        if basis.shape[1] == 0:
            out[name] = float("inf")
            continue
        restricted = basis.conj().T @ (identity - proj @ matrix @ proj) @ basis
        out[name] = float(svdvals(restricted)[-1])
    return out
