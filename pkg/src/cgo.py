"""Soluciones CGO, datos de scattering s, r, c y verificación de la ecuación dbar.

La ecuación escalar es (I - S_{k,u}) m1 = 1 y m2 = -(1/2) e_{-k} C̄(e_k conj(u) m1).
Los datos de scattering:

    s(k) =  (1/pi) int u m2 dm
    r(k) = -(1/pi) int e_{-k} u conj(m1) dm
    c(k) = -(i/(4 pi)) int e_k conj(u) C(e_{-k} u) dm          (ruta B)
         =  (1/(4 pi)) int |F u(-zeta)|^2 / (conj(k) - conj(zeta)) dm(zeta)   (ruta A)

y dbar_k log D(k) = (i/2) conj(s(k)) - c(k).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from .determinant import DEFAULT_ZERO_THRESHOLD, DetValue, factor_and_det, renormalized_det
from .errors import NearExceptional, NoConvergence
from .export import write_json, write_operator
from .grid import GriddedFunction, check_phase, e_k_sample, integrate
from .operators import assemble_s
from .transforms import (
    cauchy_apply,
    cauchy_apply_fast,
    cauchy_conj_apply,
    cauchy_conj_apply_fast,
    exact_cell_integral,
    fourier,
)
from .utils import setup_logging

logger = setup_logging()

ITERATIVE_MIN_N = 64
NEAR_CELLS = 3


@dataclass(frozen=True, eq=False)
class CgoSolution:
    """Solución (m1, m2) en k con diagnósticos del solver."""

    k: complex
    m1: GriddedFunction = field(repr=False)
    m2: GriddedFunction = field(repr=False)
    residual: float
    direct: bool
    iterations: Optional[int] = None
    det: Optional[DetValue] = None


@dataclass(frozen=True)
class ScatteringDatum:
    """s(k), r(k) por cuadratura, s por el límite en el marco, y c(k) si se pidió."""

    k: complex
    s: complex
    r: complex
    s_limit: complex
    c: complex = complex(np.nan, np.nan)


@dataclass(frozen=True)
class CRoutes:
    """c(k) por las dos rutas."""

    route_a: complex
    route_b: complex

    @property
    def agreement(self) -> float:
        scale = max(abs(self.route_a), abs(self.route_b))
        return abs(self.route_a - self.route_b) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class DbarCheck:
    """Comparación de dbar log D por diferencias finitas contra (i/2) conj(s) - c."""

    k: complex
    finite_difference: complex
    predicted: complex
    s: complex
    c: complex

    @property
    def residual(self) -> float:
        return float(abs(self.finite_difference - self.predicted))

    @property
    def relative(self) -> float:
        scale = abs(self.predicted)
        return self.residual / scale if scale > 0 else self.residual


def _apply_s_fast(k: complex, u: GriddedFunction, near_field_exact: bool):
    d = u.domain
    left = u * e_k_sample(-k, d)
    right = e_k_sample(k, d) * u.conj()

    def matvec(x: np.ndarray) -> np.ndarray:
        inner = cauchy_conj_apply_fast(d.sample(right.values * x), near_field_exact)
        return -0.25 * cauchy_apply_fast(left * inner, near_field_exact).values

    return matvec


def _check_exclusion(k: complex, zeros: Optional[Sequence[complex]], delta: Optional[float]):
    if not zeros or delta is None:
        return
    nearest = min(abs(k - z) for z in zeros)
    if nearest < delta:
        raise NearExceptional(k, float("nan"), f"k={k:.4g} a distancia {nearest:.3g} < delta={delta:.3g} de un cero")


def solve_m(
    k: complex,
    u: GriddedFunction,
    method: str = "auto",
    tol: float = 1e-8,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
    zeros: Optional[Sequence[complex]] = None,
    delta: Optional[float] = None,
    near_field_exact: bool = False,
    restart: int = 50,
    maxiter: int = 200,
    carrier: complex = 0j,
) -> CgoSolution:
    """Resolver (I - S_{k,u}) m1 = 1 y reconstruir m2.

    k - carrier debe quedar dentro del límite de Nyquist de la malla.
    """
    k = complex(k)
    d = u.domain
    _check_exclusion(k, zeros, delta)
    _check_resolution(k, u, carrier)
    if method == "auto":
        method = "iterative" if d.N > ITERATIVE_MIN_N else "direct"
    ones = np.ones(d.size, dtype=np.complex128)

    if method == "direct":
        op = assemble_s(k, u, near_field_exact)
        det, lu = factor_and_det(op)
        if det.abs < zero_threshold:
            raise NearExceptional(k, det.abs)
        m1 = lu_solve(lu, ones)
        residual = float(np.linalg.norm(m1 - op.matrix @ m1 - ones) / np.linalg.norm(ones))
        if residual > tol:
            raise NoConvergence(f"Residuo directo {residual:.2e} > {tol:.0e} en k={k:.4g}")
        m1_fn = d.sample(m1)
        inner = cauchy_conj_apply(e_k_sample(k, d) * u.conj() * m1_fn, near_field_exact)
        iterations = None
    elif method == "iterative":
        det = None
        s_apply = _apply_s_fast(k, u, near_field_exact)
        system = LinearOperator((d.size, d.size), matvec=lambda x: x - s_apply(x), dtype=np.complex128)
        counter = {"n": 0}

        def count(_):
            counter["n"] += 1

        m1, info = gmres(
            system, ones, rtol=tol, restart=restart, maxiter=maxiter,
            callback=count, callback_type="pr_norm",
        )
        residual = float(np.linalg.norm(system.matvec(m1) - ones) / np.linalg.norm(ones))
        if info != 0 or residual > 10 * tol:
            raise NoConvergence(f"GMRES sin convergencia en k={k:.4g} (info={info}, residuo={residual:.2e})")
        m1_fn = d.sample(m1)
        inner = cauchy_conj_apply_fast(e_k_sample(k, d) * u.conj() * m1_fn, near_field_exact)
        iterations = counter["n"]
    else:
        raise ValueError(f"Método desconocido: {method}")

    m2 = -0.5 * e_k_sample(-k, d) * inner
    logger.debug(f"CGO resuelto en k={k:.4g} ({method}), residuo={residual:.2e}")
    return CgoSolution(k, m1_fn, m2, residual, method == "direct", iterations, det)


def scattering_data(
    k: complex, u: GriddedFunction, sol: CgoSolution, c: Optional[complex] = None
) -> ScatteringDatum:
    """s(k), r(k) por cuadratura y el control por límite en el marco de la caja.

    Como m1 - 1 = (1/2) C(u m2), z (m1 - 1) tiende a s/2 cuando |z| crece.
    """
    d = u.domain
    k = complex(k)
    s = integrate(u * sol.m2) / np.pi
    r = -integrate(e_k_sample(-k, d) * u * sol.m1.conj()) / np.pi
    frame = d.frame
    s_limit = complex(2.0 * np.mean(d.z[frame] * (sol.m1.values[frame] - 1.0)))
    return ScatteringDatum(k, s, r, s_limit, complex(np.nan, np.nan) if c is None else complex(c))


def _check_resolution(k: complex, u: GriddedFunction, carrier: complex, what: str = "k - portadora") -> None:
    if np.any(u.values != 0):
        check_phase(complex(k) - complex(carrier), u.domain, what=what)


def c_route_a(k: complex, u: GriddedFunction, carrier: complex = 0j) -> complex:
    """Ruta A: (1/(4 pi)) int |F u(zeta)|^2 / (conj(k) - conj(zeta)) dm(zeta).

    El espectro se centra con e_{-carrier} para que quede dentro de la malla dual.
    Las celdas duales a menos de NEAR_CELLS de k se integran contra el núcleo
    exacto (densidad constante por celda); el resto por punto medio.
    """
    k = complex(k)
    v = e_k_sample(-carrier, u.domain) * u
    spectrum = fourier(v)
    step = spectrum.spacing
    offset = (k - complex(carrier) - spectrum.k) / step
    near = (np.abs(offset.real) <= NEAR_CELLS) & (np.abs(offset.imag) <= NEAR_CELLS)

    kernel = np.empty(offset.shape, dtype=np.complex128)
    far = ~near
    kernel[far] = spectrum.measure / np.conj(offset[far] * step)
    kernel[near] = np.conj(np.pi * exact_cell_integral(offset[near].real, offset[near].imag, step))
    dens = np.abs(spectrum.values) ** 2
    return complex(np.sum(dens * kernel) / (4.0 * np.pi))


def c_route_b(
    k: complex, u: GriddedFunction, near_field_exact: bool = False, carrier: complex = 0j
) -> complex:
    """Ruta B: -(i/(4 pi)) int e_k conj(u) C(e_{-k} u) dm.

    Muestrea e_{-k} u directamente: sólo es fiable con |k - carrier| muy por
    debajo de pi/(2h).
    """
    d = u.domain
    k = complex(k)
    _check_resolution(k, u, carrier)
    apply = cauchy_apply_fast if d.N > ITERATIVE_MIN_N else cauchy_apply
    inner = apply(e_k_sample(-k, d) * u, near_field_exact)
    return complex(-1j / (4.0 * np.pi) * integrate(e_k_sample(k, d) * u.conj() * inner))


def c_of_k(
    k: complex, u: GriddedFunction, carrier: complex = 0j, near_field_exact: bool = False
) -> CRoutes:
    """c(k) por ambas rutas."""
    return CRoutes(c_route_a(k, u, carrier), c_route_b(k, u, near_field_exact, carrier))


def dbar_check(
    u: GriddedFunction,
    k: complex,
    step: float,
    carrier: complex = 0j,
    c_route: str = "a",
    near_field_exact: bool = False,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
) -> DbarCheck:
    """dbar_k log D por diferencias centradas de semiancho step en Re k e Im k."""
    k = complex(k)
    if c_route not in ("a", "b"):
        raise ValueError(f"Ruta desconocida para c(k): {c_route}")
    logs = {}
    for name, shift in (("+x", step), ("-x", -step), ("+y", 1j * step), ("-y", -1j * step)):
        _check_resolution(k + shift, u, carrier)
        det = renormalized_det(assemble_s(k + shift, u, near_field_exact))
        if det.abs < zero_threshold:
            raise NearExceptional(k + shift, det.abs)
        logs[name] = det

    def diff(a: DetValue, b: DetValue) -> complex:
        return complex(a.log_abs - b.log_abs, np.angle(np.exp(1j * (a.phase - b.phase)))) / (2 * step)

    d_x = diff(logs["+x"], logs["-x"])
    d_y = diff(logs["+y"], logs["-y"])
    fd = 0.5 * (d_x + 1j * d_y)

    sol = solve_m(k, u, method="direct", zero_threshold=zero_threshold, near_field_exact=near_field_exact,
                  carrier=carrier)
    s = scattering_data(k, u, sol).s
    if c_route == "a":
        c = c_route_a(k, u, carrier)
    else:
        c = c_route_b(k, u, near_field_exact, carrier)
    predicted = 0.5j * np.conj(s) - c
    return DbarCheck(k, fd, complex(predicted), s, c)


def dbar_residual(u: GriddedFunction, k: complex, step: float, **kwargs) -> float:
    """|dbar log D (diferencias) - ((i/2) conj(s) - c)|."""
    return dbar_check(u, k, step, **kwargs).residual


def export_solution(sol: CgoSolution, path: Path, config_hash: str = "") -> Path:
    """m1 y m2 en binario plano (2 x N^2) más metadatos JSON."""
    d = sol.m1.domain
    path = Path(path)
    stacked = np.vstack([sol.m1.values, sol.m2.values])
    write_operator(path, stacked, {"L": d.L, "N": d.N, "k": sol.k, "label": "m1,m2"})
    return write_json(
        path.with_suffix(".json"),
        {
            "config_hash": config_hash,
            "k": sol.k,
            "L": d.L,
            "N": d.N,
            "residual": sol.residual,
            "direct": sol.direct,
            "iterations": sol.iterations,
            "abs_D": None if sol.det is None else sol.det.abs,
        },
    )
