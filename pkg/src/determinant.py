"""Determinante de Fredholm renormalizado y barridos del conjunto excepcional.

Det(I - A) = det(I - A) * exp(tr A), calculado por LU con pivoteo parcial y
acumulado en escala logarítmica. Los ceros son mínimos locales refinados que
caen muy por debajo de su entorno; nunca se reporta un cero exacto.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize
from scipy.linalg import LinAlgError, lu_factor, lu_solve, svdvals

from .errors import NonFiniteDeterminant, NumericalError, SingularFamily
from .grid import GriddedFunction, check_phase
from .operators import DenseOperator, assemble_s
from .utils import parallel_map, setup_logging

logger = setup_logging()

DEFAULT_ZERO_THRESHOLD = 1e-2
DEFAULT_ZERO_RATIO = 0.5
DEFAULT_FIT_RADII = (0.005, 0.02)

Matrix = Union[DenseOperator, np.ndarray]


def _wrap_phase(phase: float) -> float:
    return float(np.angle(np.exp(1j * phase)))


@dataclass(frozen=True)
class DetValue:
    """Valor de Det(I - A) con su logaritmo y el menor pivote de la LU."""

    log_abs: float
    phase: float
    min_pivot: float

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log_abs + 1j * self.phase))

    @property
    def abs(self) -> float:
        return float(np.exp(self.log_abs))

    @property
    def log(self) -> complex:
        return complex(self.log_abs, self.phase)


def _as_matrix(a: Matrix) -> np.ndarray:
    return a.matrix if isinstance(a, DenseOperator) else np.asarray(a, dtype=np.complex128)


def factor_and_det(a: Matrix) -> Tuple[DetValue, Tuple[np.ndarray, np.ndarray]]:
    """LU de I - A y determinante renormalizado (la LU se reutiliza en los solves)."""
    matrix = _as_matrix(a)
    n = matrix.shape[0]
    trace = complex(np.trace(matrix))
    if not np.isfinite(trace):
        raise NonFiniteDeterminant("Traza no finita")

    lu, piv = lu_factor(np.eye(n) - matrix, check_finite=False)
    pivots = np.diag(lu)
    mods = np.abs(pivots)
    if not np.all(np.isfinite(pivots)) or np.any(mods == 0):
        raise NonFiniteDeterminant("Pivote nulo o no finito en la LU de I - A")

    swaps = int(np.count_nonzero(piv != np.arange(n)))
    log_abs = float(np.sum(np.log(mods)) + trace.real)
    phase = _wrap_phase(float(np.sum(np.angle(pivots))) + np.pi * swaps + trace.imag)
    if not np.isfinite(log_abs):
        raise NonFiniteDeterminant(f"log|Det| no finito: {log_abs}")
    return DetValue(log_abs, phase, float(mods.min())), (lu, piv)


def renormalized_det(a: Matrix) -> DetValue:
    """Det(I - A) = det(I - A) exp(tr A)."""
    det, _ = factor_and_det(a)
    return det


def dense_determinant_oracle(a: Matrix) -> complex:
    """Referencia directa con numpy (sólo matrices pequeñas)."""
    matrix = _as_matrix(a)
    return complex(np.linalg.det(np.eye(matrix.shape[0]) - matrix) * np.exp(np.trace(matrix)))


@dataclass(frozen=True)
class KGrid:
    """Rectángulo de k: centro, semiancho y nodos por lado (Re exterior, Im interior)."""

    center: complex
    half_width: float
    nodes_per_side: int

    def __post_init__(self):
        if self.nodes_per_side < 2:
            raise ValueError("Se requieren al menos 2 nodos por lado")
        if not self.half_width > 0:
            raise ValueError("El semiancho debe ser positivo")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.nodes_per_side - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.nodes_per_side)

    def nodes(self) -> np.ndarray:
        offs = self.axis()
        re, im = np.meshgrid(offs, offs, indexing="ij")
        return (complex(self.center) + re + 1j * im).ravel()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": [complex(self.center).real, complex(self.center).imag],
            "half_width": self.half_width,
            "nodes_per_side": self.nodes_per_side,
        }


@dataclass
class ScanRecord:
    """Registro por nodo del barrido."""

    index: int
    k: complex
    D: complex = complex(np.nan, np.nan)
    log_abs_D: float = float("nan")
    s: complex = complex(np.nan, np.nan)
    r: complex = complex(np.nan, np.nan)
    c: complex = complex(np.nan, np.nan)
    dbar_residual: float = float("nan")
    error: Optional[str] = None

    @property
    def abs_D(self) -> float:
        return float(np.exp(self.log_abs_D)) if np.isfinite(self.log_abs_D) else float("nan")

    def row(self) -> Dict[str, Any]:
        return {
            "re_k": self.k.real,
            "im_k": self.k.imag,
            "re_D": self.D.real,
            "im_D": self.D.imag,
            "abs_D": self.abs_D,
            "re_s": self.s.real,
            "im_s": self.s.imag,
            "re_r": self.r.real,
            "im_r": self.r.imag,
            "re_c": self.c.real,
            "im_c": self.c.imag,
            "dbar_residual": self.dbar_residual,
        }


SCAN_COLUMNS = [
    "re_k", "im_k", "re_D", "im_D", "abs_D", "re_s", "im_s",
    "re_r", "im_r", "re_c", "im_c", "dbar_residual",
]


@dataclass(frozen=True)
class ZeroCandidate:
    """Cero detectado con su orden local ajustado."""

    k: complex
    abs_D: float
    fitted_order: float
    fit_window: Tuple[float, float]
    fit_points: int


@dataclass
class ScatteringScan:
    """Barrido de D(k) (y datos de scattering) sobre un KGrid."""

    kgrid: KGrid
    records: List[ScanRecord]
    grid_params: Dict[str, Any]
    potential: str = ""
    zeros: List[ZeroCandidate] = field(default_factory=list)

    def abs_grid(self) -> np.ndarray:
        n = self.kgrid.nodes_per_side
        return np.array([rec.abs_D for rec in self.records]).reshape(n, n)

    def k_grid(self) -> np.ndarray:
        n = self.kgrid.nodes_per_side
        return np.array([rec.k for rec in self.records]).reshape(n, n)

    def failures(self) -> List[ScanRecord]:
        return [rec for rec in self.records if rec.error]

    def rows(self, config_hash: str = "") -> List[Dict[str, Any]]:
        rows = []
        for rec in self.records:
            row = rec.row()
            row["config_hash"] = config_hash
            rows.append(row)
        return rows

    def to_dict(self, config_hash: str = "") -> Dict[str, Any]:
        return {
            "config_hash": config_hash,
            "grid": self.grid_params,
            "k_grid": self.kgrid.to_dict(),
            "potential": self.potential,
            "records": [dict(rec.row(), error=rec.error) for rec in self.records],
            "zeros": [
                {
                    "k": z.k,
                    "abs_D": z.abs_D,
                    "fitted_order": z.fitted_order,
                    "fit_window": list(z.fit_window),
                    "fit_points": z.fit_points,
                }
                for z in self.zeros
            ],
        }


def _scan_node(
    u: GriddedFunction, near_field_exact: bool
) -> Callable[[Tuple[int, complex]], ScanRecord]:
    def run(item: Tuple[int, complex]) -> ScanRecord:
        index, k = item
        record = ScanRecord(index=index, k=complex(k))
        try:
            det = renormalized_det(assemble_s(k, u, near_field_exact))
            record.D = det.value
            record.log_abs_D = det.log_abs
        except (NumericalError, LinAlgError, ValueError) as e:
            record.error = str(e)
            logger.warning(f"Nodo {index} (k={k:.4g}) falló: {e}")
        return record

    return run


def det_scan(
    u: GriddedFunction,
    kgrid: KGrid,
    near_field_exact: bool = False,
    workers: int = 1,
    potential: str = "",
    carrier: Optional[complex] = None,
) -> ScatteringScan:
    """Evaluar D(k, u) en cada nodo del KGrid (en paralelo, orden fijo).

    Los nodos deben quedar a menos de pi/(2h) de la portadora del potencial
    (por defecto el centro del KGrid); más allá D discreto repite valores.
    """
    nodes = kgrid.nodes()
    center = complex(kgrid.center if carrier is None else carrier)
    worst = max(nodes, key=lambda k: max(abs((k - center).real), abs((k - center).imag)))
    check_phase(worst - center, u.domain, what="k - portadora")
    logger.info(
        f"Barrido de determinante: {len(nodes)} nodos, h_k={kgrid.spacing:.3g}, workers={workers}"
    )
    records = parallel_map(_scan_node(u, near_field_exact), list(enumerate(nodes)), workers)

    scan = ScatteringScan(
        kgrid=kgrid,
        records=records,
        grid_params={"L": u.domain.L, "N": u.domain.N, "near_field_exact": near_field_exact},
        potential=potential,
    )
    _far_field_check(scan)
    failed = len(scan.failures())
    logger.info(f"Barrido completado: {len(records) - failed} nodos, {failed} fallos")
    return scan


def _far_field_check(scan: ScatteringScan) -> None:
    grid = scan.abs_grid()
    corners = [grid[0, 0], grid[0, -1], grid[-1, 0], grid[-1, -1]]
    for value in corners:
        if np.isfinite(value) and not 0.8 <= value <= 1.2:
            logger.warning(f"|D| en una esquina del barrido = {value:.3f}; lejos de 1")


def det_evaluator(u: GriddedFunction, near_field_exact: bool = False) -> Callable[[complex], float]:
    """|D(k, u)| como función de k; inf donde la evaluación falla."""

    def evaluate(k: complex) -> float:
        try:
            return renormalized_det(assemble_s(complex(k), u, near_field_exact)).abs
        except (NumericalError, LinAlgError, ValueError):
            return float("inf")

    return evaluate


def refine_minimum(
    f: Callable[[complex], float], start: complex, scale: float, maxiter: int = 80
) -> Tuple[complex, float]:
    """Minimizar f(k) con Nelder-Mead desde start (símplex inicial de tamaño scale)."""
    x0 = np.array([complex(start).real, complex(start).imag])
    simplex = np.array([x0, x0 + [scale, 0.0], x0 + [0.0, scale]])
    result = optimize.minimize(
        lambda x: f(complex(x[0], x[1])),
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "maxiter": maxiter, "xatol": 1e-4 * scale, "fatol": 1e-12},
    )
    k = complex(result.x[0], result.x[1])
    return k, float(result.fun)


def _ring(grid: np.ndarray, a: int, b: int, distance: int) -> np.ndarray:
    """Valores finitos a distancia de Chebyshev exacta `distance` del nodo (a, b)."""
    n, m = grid.shape
    values = []
    for i in range(max(a - distance, 0), min(a + distance, n - 1) + 1):
        for j in range(max(b - distance, 0), min(b + distance, m - 1) + 1):
            if max(abs(i - a), abs(j - b)) == distance and np.isfinite(grid[i, j]):
                values.append(grid[i, j])
    return np.array(values)


def fit_order(
    f: Callable[[complex], float],
    k_star: complex,
    floor: float,
    radii: Sequence[float],
    phases: int = 4,
) -> float:
    """Pendiente de log(media angular de |D(k* + r e^{i theta})| - |D(k*)|) contra log r."""
    thetas = 2.0 * np.pi * np.arange(phases) / phases + np.pi / (2 * phases)
    lifts = []
    for r in radii:
        ring = np.mean([f(k_star + r * np.exp(1j * t)) for t in thetas])
        lifts.append(ring - floor)
    lifts = np.array(lifts)
    ok = np.isfinite(lifts) & (lifts > 0)
    if np.count_nonzero(ok) < 3:
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(radii)[ok]), np.log(lifts[ok]), 1)[0])


def find_zeros(
    scan: ScatteringScan,
    evaluate: Callable[[complex], float],
    zero_ratio: float = DEFAULT_ZERO_RATIO,
    fit_radii: Tuple[float, float] = DEFAULT_FIT_RADII,
    fit_points: int = 6,
    phases: int = 4,
    exclusions: Sequence[Tuple[complex, float]] = (),
) -> List[ZeroCandidate]:
    """Ceros de D(k) como mínimos locales refinados que caen muy por debajo de su entorno.

    Candidatos: mínimos estrictos de la vecindad 3x3 con |D| < 0.9 veces la media
    del anillo de Chebyshev a dos nodos. Cada candidato se refina con Nelder-Mead
    y se acepta si el mínimo refinado es menor que zero_ratio veces esa media.
    El orden se ajusta sobre radios geométricos en fit_radii alrededor del mínimo.
    """
    grid = scan.abs_grid()
    ks = scan.k_grid()
    h_k = scan.kgrid.spacing
    padded = np.pad(np.where(np.isfinite(grid), grid, np.inf), 1, constant_values=np.inf)
    radii = np.geomspace(fit_radii[0], fit_radii[1], fit_points)
    n = grid.shape[0]
    zeros = []
    for a in range(n):
        for b in range(n):
            value = grid[a, b]
            if not np.isfinite(value):
                continue
            block = padded[a:a + 3, b:b + 3].copy()
            block[1, 1] = np.inf
            if value >= block.min():
                continue
            k_node = complex(ks[a, b])
            if any(abs(k_node - c) <= r for c, r in exclusions):
                continue
            ring = _ring(grid, a, b, 2)
            if ring.size == 0:
                ring = _ring(grid, a, b, 1)
            if ring.size == 0:
                continue
            level = float(np.mean(ring))
            if value >= 0.9 * level:
                continue

            k_star, refined = refine_minimum(evaluate, k_node, 0.5 * h_k)
            if not np.isfinite(refined) or abs(k_star - k_node) > 2 * h_k:
                logger.debug(f"Refinamiento desde k={k_node:.4g} descartado")
                continue
            if refined >= zero_ratio * level:
                logger.debug(f"Mínimo en k={k_star:.4g} no aislado ({refined:.2e} vs anillo {level:.2e})")
                continue
            order = fit_order(evaluate, k_star, refined, radii, phases)
            zeros.append(ZeroCandidate(k_star, refined, order, (float(radii[0]), float(radii[-1])), len(radii)))
            logger.info(f"Cero detectado en k={k_star:.4g} (|D|={refined:.2e}, orden={order:.2f})")
    return zeros


def logdet_derivative_check(
    family: Callable[[float], np.ndarray],
    ts: Sequence[float],
    step: float = 1e-4,
    derivative: Optional[Callable[[float], np.ndarray]] = None,
) -> float:
    """Máxima desviación entre d/dt log Det(I - A(t)) por diferencias centradas y
    tr((I - A)^{-1}(-A')) - tr(-A')."""
    worst = 0.0
    for t in ts:
        a = np.asarray(family(t), dtype=np.complex128)
        n = a.shape[0]
        sv = svdvals(np.eye(n) - a)
        if sv[-1] < 1e-12 * max(1.0, sv[0]):
            raise SingularFamily(f"I - A(t) singular en t={t}")

        plus = renormalized_det(family(t + step))
        minus = renormalized_det(family(t - step))
        fd = complex(plus.log_abs - minus.log_abs, _wrap_phase(plus.phase - minus.phase)) / (2 * step)

        if derivative is not None:
            da = np.asarray(derivative(t), dtype=np.complex128)
        else:
            da = (np.asarray(family(t + step)) - np.asarray(family(t - step))) / (2 * step)
        lu = lu_factor(np.eye(n) - a)
        formula = -np.trace(lu_solve(lu, da)) + np.trace(da)
        worst = max(worst, abs(fd - formula))
    return float(worst)
