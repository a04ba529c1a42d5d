"""Interfaz de línea de comandos (CLI)."""

import dataclasses
import logging
import shutil
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List

import click
import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .cgo import c_of_k, dbar_check, export_solution, scattering_data, solve_m
from .config import CONFIG_NAME, EXAMPLE_NAME, RunConfig, load_config
from .determinant import SCAN_COLUMNS, ScatteringScan, det_evaluator, det_scan, find_zeros
from .errors import InvalidConfigError, NearExceptional, NumericalError, PotentialError
from .export import write_csv, write_json
from .grid import relative_l2_error
from .operators import assemble_t
from .perturbation import TABLE_COLUMNS, builtin_phi, multiplicity_check, riesz_projection, stability_scan
from .potentials import build_potential
from .soliton import (
    det_vs_radial_model,
    exact_m,
    fit_reduced_coefficients,
    laurent_check,
    radial_det_model,
    radiality_check,
    reduced_family,
    soliton_h,
    soliton_h_quadrature,
    spectral_report,
)
from .transforms import boundary_mass_fraction
from .store import RunStore
from .utils import get_project_root, parallel_map, parse_complex, setup_logging

logger = setup_logging()
console = Console()

REDUCED_KAPPAS = (0.05, 0.05j, -0.05, -0.05j, 0.1 + 0.1j)
CROSS_T = (0.25, 1.0, 4.0)
RADIAL_COLUMNS = ["t", "h", "H", "config_hash"]
CROSS_COLUMNS = ["t", "h_closed", "h_quadrature", "relative", "config_hash"]
RADIAL_CHECK_COLUMNS = ["radius", "abs_D", "H", "relative", "config_hash"]


class ComplexParam(click.ParamType):
    """Número complejo desde la línea de comandos: 0.5, 1+2j, 1+2i."""

    name = "complex"

    def convert(self, value, param, ctx):
        try:
            return parse_complex(value)
        except ValueError:
            self.fail(f"{value!r} no es un número complejo", param, ctx)


COMPLEX = ComplexParam()


@dataclass
class ResultBundle:
    """Eco de configuración, resultados del comando y tiempos."""

    command: str
    config: RunConfig
    summary: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config_hash": self.config.config_hash,
            "config": self.config.to_dict(),
            "summary": self.summary,
            "timings": self.timings,
            "outputs": self.outputs,
        }


class Runner:
    """Contexto de ejecución de un comando: fases medidas y archivos de salida."""

    def __init__(self, command: str, config: RunConfig, store: RunStore, run_id: int):
        self.bundle = ResultBundle(command, config)
        self.config = config
        self.store = store
        self.run_id = run_id

    @property
    def tag(self) -> str:
        return self.config.short_hash

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        with self.store.phase(self.run_id, name):
            yield
        self.bundle.timings[name] = time.perf_counter() - start

    def path(self, stem: str, suffix: str) -> Path:
        return self.config.output_path() / f"{stem}_{self.tag}{suffix}"

    def record(self, path: Path) -> Path:
        self.bundle.outputs.append(str(path))
        return path


def _execute(command: str, config: RunConfig, work: Callable[[Runner], None]):
    """Ejecutar un comando con registro, manejo de errores y códigos de salida."""
    store = RunStore()
    run_id = store.start_run(command, config.config_hash, config.to_yaml())
    runner = Runner(command, config, store, run_id)
    try:
        work(runner)
        bundle_path = runner.path(command, ".json")
        runner.record(bundle_path)
        write_json(bundle_path, runner.bundle.to_dict())
        store.finish_run(run_id, "ok", 0, runner.bundle.outputs)
        console.print(f"[green]✓ Resultados en {config.output_path()} (hash {runner.tag})[/green]")
    except (InvalidConfigError, PotentialError) as e:
        store.finish_run(run_id, "invalid-config", 2, runner.bundle.outputs, str(e))
        console.print(f"[red]Error de configuración: {e}[/red]")
        sys.exit(2)
    except NumericalError as e:
        store.finish_run(run_id, "numerical-failure", 3, runner.bundle.outputs, str(e))
        console.print(f"[red]Error numérico: {e}[/red]")
        sys.exit(3)
    except OSError as e:
        store.finish_run(run_id, "io-error", 1, runner.bundle.outputs, str(e))
        console.print(f"[red]Error de E/S: {e}[/red]")
        sys.exit(1)
    finally:
        store.close()


def common_options(fn):
    """Opciones compartidas por los comandos de cálculo."""
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(), help="Archivo de configuración YAML"),
        click.option("--L", "L", type=float, help="Semiancho de la caja [-L, L]^2"),
        click.option("--N", "N", type=int, help="Puntos por lado (par)"),
        click.option("--workers", "-w", type=int, help="Número de workers"),
        click.option("--output", "-o", "output_dir", type=click.Path(), help="Directorio de salida"),
        click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False)),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _prepare(config_path, L, N, workers, output_dir, log_level, **potential) -> RunConfig:
    """Cargar la configuración y aplicar las opciones de la línea de comandos."""
    if log_level:
        logging.getLogger().setLevel(log_level.upper())
    try:
        config = load_config(Path(config_path) if config_path else None)
        if L is not None:
            config.grid.L = L
        if N is not None:
            config.grid.N = N
        if workers is not None:
            config.workers = workers
        if output_dir is not None:
            config.output_dir = output_dir
        overrides = {k: v for k, v in potential.items() if v is not None}
        if overrides:
            config.potential = dataclasses.replace(config.potential, **overrides)
        config.validate()
    except (InvalidConfigError, PotentialError) as e:
        console.print(f"[red]Error de configuración: {e}[/red]")
        sys.exit(2)
    return config


@click.group()
@click.version_option(version=__version__)
def cli():
    """
    DSII - Banco de trabajo numérico para el problema de scattering de Davey-Stewartson II

    Barridos del determinante de Fredholm, soluciones CGO, estructura espectral del
    solitón y estabilidad del conjunto excepcional bajo perturbaciones.
    """
    pass


def _scattering_for_scan(scan: ScatteringScan, u, config: RunConfig, runner: Runner):
    """Completar s, r, c y muestras del residuo dbar en los nodos del barrido."""
    zeros = [z.k for z in scan.zeros]
    delta = config.exclusion_radius()
    nfe = config.transforms.near_field_exact
    threshold = config.solver.zero_threshold

    def usable(rec) -> bool:
        if rec.error or not np.isfinite(rec.log_abs_D) or rec.abs_D < threshold:
            return False
        return all(abs(rec.k - z) >= delta for z in zeros)

    def fill(rec):
        try:
            sol = solve_m(rec.k, u, method=config.solver.method, tol=config.solver.tol,
                          zero_threshold=threshold, zeros=zeros, delta=delta, near_field_exact=nfe,
                          carrier=config.carrier())
            routes = c_of_k(rec.k, u, config.carrier(), nfe)
            c = routes.route_a if config.solver.c_route == "a" else routes.route_b
            datum = scattering_data(rec.k, u, sol, c)
            rec.s, rec.r, rec.c = datum.s, datum.r, datum.c
        except NumericalError as e:
            rec.error = str(e)
            logger.warning(f"Datos de scattering en k={rec.k:.4g} fallaron: {e}")

    candidates = [rec for rec in scan.records if usable(rec)]
    with runner.phase("scattering"):
        parallel_map(fill, candidates, config.workers)

    samples = config.solver.dbar_samples
    if samples > 0 and candidates:
        picks = [candidates[i] for i in np.linspace(0, len(candidates) - 1, min(samples, len(candidates))).astype(int)]
        with runner.phase("dbar"):
            for rec in picks:
                try:
                    check = dbar_check(u, rec.k, config.fd_step(), carrier=config.carrier(),
                                       c_route=config.solver.c_route, near_field_exact=nfe,
                                       zero_threshold=threshold)
                    rec.dbar_residual = check.residual
                except NearExceptional as e:
                    logger.warning(f"Residuo dbar omitido en k={rec.k:.4g}: {e}")


@cli.command()
@common_options
@click.option("--potential", "kind", type=click.Choice(["zero", "soliton", "gaussian", "bump", "soliton+bump", "file"]))
@click.option("--eps", type=float, help="Amplitud de la perturbación (soliton+bump)")
@click.option("--profile", type=str, help="Perfil incorporado (gauss, mexican, degenerate)")
@click.option("--scattering/--no-scattering", default=True, help="Calcular s, r, c en cada nodo")
def detscan(config_path, L, N, workers, output_dir, log_level, kind, eps, profile, scattering):
    """Barrido del determinante D(k) y detección de ceros."""
    config = _prepare(config_path, L, N, workers, output_dir, log_level, kind=kind, eps=eps, profile=profile)

    def work(runner: Runner):
        d = config.domain()
        u = build_potential(config.potential, d, config.soliton_params())
        mass = boundary_mass_fraction(u)
        if mass > config.transforms.mass_threshold:
            logger.warning(f"Potencial con masa en el borde {mass:.2e}; ampliar L")
        with runner.phase("det_scan"):
            scan = det_scan(u, config.k_grid(), config.transforms.near_field_exact, config.workers,
                            potential=config.potential.label, carrier=config.carrier())
        with runner.phase("zeros"):
            scan.zeros = find_zeros(scan, det_evaluator(u, config.transforms.near_field_exact),
                                    zero_ratio=config.solver.zero_ratio)
        if scattering:
            _scattering_for_scan(scan, u, config, runner)

        runner.record(write_csv(runner.path("detscan", ".csv"), SCAN_COLUMNS + ["config_hash"],
                                scan.rows(config.config_hash)))
        runner.bundle.summary = scan.to_dict(config.config_hash)

        grid = scan.abs_grid()
        console.print(Panel(
            f"Potencial: {config.potential.label}\n"
            f"Malla: L={d.L:g}, N={d.N}, nodos k={grid.size}\n"
            f"min |D| = {np.nanmin(grid):.3e}, max |D| = {np.nanmax(grid):.3e}\n"
            f"Fallos: {len(scan.failures())}",
            title="Barrido del determinante",
        ))
        if scan.zeros:
            table = Table(title=f"Ceros ({len(scan.zeros)})")
            table.add_column("k", style="cyan")
            table.add_column("|D|", style="yellow")
            table.add_column("orden", style="magenta")
            for z in scan.zeros:
                table.add_row(f"{z.k:.4f}", f"{z.abs_D:.2e}", f"{z.fitted_order:.2f}")
            console.print(table)
        else:
            console.print("[yellow]No se detectaron ceros[/yellow]")

    _execute("detscan", config, work)


@cli.command("soliton-verify")
@common_options
@click.option("--radius", default=0.05, help="Radio alrededor de 1 para contar autovalores")
def soliton_verify(config_path, L, N, workers, output_dir, log_level, radius):
    """Estructura espectral de T(0), matrices reducidas y modelo radial."""
    config = _prepare(config_path, L, N, workers, output_dir, log_level)

    def work(runner: Runner):
        d = config.domain()
        params = config.soliton_params()
        nfe = config.transforms.near_field_exact
        with runner.phase("spectral"):
            report = spectral_report(d, params, radius, REDUCED_KAPPAS, nfe, config.workers)
        coeffs = fit_reduced_coefficients([k for k, _ in report.reduced], [m[0, 0] for _, m in report.reduced])
        with runner.phase("multiplicity"):
            mult = multiplicity_check(reduced_family(d, params, nfe), radii=(1e-3, 2e-3, 5e-3, 1e-2))
        with runner.phase("riesz"):
            cconf = config.contour
            p0 = riesz_projection(assemble_t(0j, d, params, nfe), radius=cconf.radius, nodes=cconf.nodes,
                                  band=cconf.band, workers=config.workers)
            rank = float(np.trace(p0).real)
        with runner.phase("radial"):
            model = radial_det_model(config.radial.T_max, config.radial.n_t, config.radial.t_min)
            quadrature = soliton_h_quadrature(np.array(CROSS_T), d, params, config.workers)
            spread = radiality_check(d, params, near_field_exact=nfe, workers=config.workers)
            det_rows = det_vs_radial_model(d, model, params, near_field_exact=nfe, workers=config.workers)
            laurent = laurent_check(d, params)

        closed = soliton_h(np.array(CROSS_T))
        cross = [
            {"t": t, "h_closed": hc, "h_quadrature": hq, "relative": abs(hq - hc) / abs(hc),
             "config_hash": config.config_hash}
            for t, hc, hq in zip(CROSS_T, closed, quadrature)
        ]
        runner.record(write_csv(runner.path("soliton_cross", ".csv"), CROSS_COLUMNS, cross))
        det_rows = [dict(row, config_hash=config.config_hash) for row in det_rows]
        runner.record(write_csv(runner.path("soliton_radial_det", ".csv"), RADIAL_CHECK_COLUMNS, det_rows))
        runner.bundle.summary = {
            "config_hash": config.config_hash,
            "spectral": report.to_dict(),
            "reduced_fit": {"a": coeffs[0], "b": coeffs[1], "c": coeffs[2]},
            "multiplicity": mult.to_dict(),
            "riesz_rank": rank,
            "radial": {"c": model.c, "c_reference": model.c_reference, "drift": model.drift_last_decade()},
            "radiality_spread": spread,
            "cross_validation": cross,
            "det_vs_radial": det_rows,
            "laurent": laurent.to_dict(),
        }

        table = Table(title="Solitón: verificación espectral")
        table.add_column("Cantidad", style="cyan")
        table.add_column("Valor", style="white")
        table.add_row("Multiplicidad cerca de 1", str(report.multiplicity))
        table.add_row("Gap", f"{report.gap:.3f}")
        table.add_row("Residuos T(0)psi", ", ".join(f"{r:.2e}" for r in report.eigen_residuals))
        table.add_row("Residuos T(0)'chi", ", ".join(f"{r:.2e}" for r in report.dual_residuals))
        table.add_row("|<chi,psi> - I|", f"{np.abs(report.biorthogonality - np.eye(2)).max():.2e}")
        table.add_row("Rango de Riesz (traza)", f"{rank:.6f}")
        table.add_row("m ajustado / N núcleo", f"{mult.m_fit:.2f} / {mult.n_kernel}")
        table.add_row("c (modelo radial)", f"{model.c:.5f}")
        table.add_row("Dispersión radial de |D|", f"{spread:.2e}")
        for row in det_rows:
            table.add_row(f"|D| vs H en |kappa|={row['radius']:g}", f"{row['abs_D']:.4f} / {row['H']:.4f}")
        table.add_row("max |c conj(kappa) - 1| (Laurent)", f"{laurent.deviation:.2e}")
        console.print(table)

    _execute("soliton-verify", config, work)


@cli.command()
@common_options
@click.option("--profile", type=str, help="Perfil de perturbación (gauss, mexican, degenerate, zero)")
@click.option("--eps", "eps_list", type=float, multiple=True, help="Valores de eps (repetible)")
def perturb(config_path, L, N, workers, output_dir, log_level, profile, eps_list):
    """Funcionales alpha/beta, tabla de desdoblamiento y veredicto de estabilidad."""
    config = _prepare(config_path, L, N, workers, output_dir, log_level)
    if profile:
        config.perturbation.profile = profile
    if eps_list:
        config.perturbation.eps_list = list(eps_list)

    def work(runner: Runner):
        d = config.domain()
        params = config.soliton_params()
        pconf = config.perturbation
        if pconf.profile == "zero":
            phi = d.zeros()
        else:
            phi = builtin_phi(pconf.profile, d, params, pconf.cutoff_radius)

        with runner.phase("stability_scan"):
            report = stability_scan(
                phi, pconf.eps_list, config.k_grid(), params,
                convention=pconf.convention, c1=pconf.c1, fine_nodes=pconf.fine_nodes,
                annulus_outer=pconf.annulus_outer, split_tol=pconf.split_tol,
                zero_ratio=config.solver.zero_ratio,
                near_field_exact=config.transforms.near_field_exact, workers=config.workers,
            )
        runner.record(write_csv(runner.path("perturb", ".csv"), TABLE_COLUMNS, report.rows(config.config_hash)))
        runner.bundle.summary = report.to_dict(config.config_hash)

        table = Table(title=f"Funcionales ({pconf.profile})")
        table.add_column("Convención", style="cyan")
        table.add_column("alpha", style="white")
        table.add_column("beta", style="white")
        table.add_column("int chi rho^-2", style="yellow")
        for name, ab in report.alpha_beta.items():
            table.add_row(name, f"{ab.alpha:.4g}", f"{ab.beta:.4g}", f"{ab.orthogonality:.4g}")
        console.print(table)
        console.print(report.verdict_line())

    _execute("perturb", config, work)


@cli.command("cgo-solve")
@common_options
@click.option("--k", "k", type=COMPLEX, required=True, help="Punto espectral k (ej: 1+0.5j)")
@click.option("--method", type=click.Choice(["auto", "direct", "iterative"]), help="Solver")
@click.option("--potential", "kind", type=click.Choice(["zero", "soliton", "gaussian", "bump", "soliton+bump", "file"]))
def cgo_solve(config_path, L, N, workers, output_dir, log_level, k, method, kind):
    """Resolver la ecuación CGO en un k y exportar m1, m2."""
    config = _prepare(config_path, L, N, workers, output_dir, log_level, kind=kind)
    if method:
        config.solver.method = method

    def work(runner: Runner):
        d = config.domain()
        params = config.soliton_params()
        nfe = config.transforms.near_field_exact
        u = build_potential(config.potential, d, params)
        with runner.phase("solve"):
            sol = solve_m(k, u, method=config.solver.method, tol=config.solver.tol,
                          zero_threshold=config.solver.zero_threshold, near_field_exact=nfe,
                          carrier=config.carrier())
        routes = c_of_k(k, u, config.carrier(), nfe)
        datum = scattering_data(k, u, sol, routes.route_a if config.solver.c_route == "a" else routes.route_b)
        stem = f"cgo_{k.real:+.3f}{k.imag:+.3f}j"
        path = export_solution(sol, runner.path(stem, ".bin"), config.config_hash)
        runner.record(path.with_suffix(".bin"))
        runner.record(path)

        summary = {
            "k": k,
            "s": datum.s,
            "r": datum.r,
            "s_limit": datum.s_limit,
            "c_route_a": routes.route_a,
            "c_route_b": routes.route_b,
            "residual": sol.residual,
            "iterations": sol.iterations,
        }
        if config.potential.kind == "soliton" and params.normalized and k != params.k0:
            m1, m2 = exact_m(k - params.k0, d, params)
            summary["m1_error"] = relative_l2_error(sol.m1, m1)
            summary["m2_error"] = relative_l2_error(sol.m2, m2)
        runner.bundle.summary = summary

        table = Table(title=f"CGO en k={k:.4g}")
        table.add_column("Cantidad", style="cyan")
        table.add_column("Valor", style="white")
        for key, value in summary.items():
            table.add_row(key, f"{value:.6g}" if isinstance(value, (float, complex)) else str(value))
        console.print(table)

    _execute("cgo-solve", config, work)


@cli.command()
@common_options
@click.option("--numeric/--closed-form", default=None, help="h(t) por cuadratura de la ruta A o forma cerrada")
def radial(config_path, L, N, workers, output_dir, log_level, numeric):
    """Modelo radial H(t) del determinante del solitón."""
    config = _prepare(config_path, L, N, workers, output_dir, log_level)
    if numeric is not None:
        config.radial.numeric = numeric

    def work(runner: Runner):
        rconf = config.radial
        domain = config.domain() if rconf.numeric else None
        with runner.phase("radial"):
            model = radial_det_model(rconf.T_max, rconf.n_t, rconf.t_min, domain,
                                     config.soliton_params(), config.workers)
        runner.record(write_csv(runner.path("radial", ".csv"), RADIAL_COLUMNS, model.rows(config.config_hash)))
        runner.bundle.summary = {
            "config_hash": config.config_hash,
            "source": model.source,
            "c": model.c,
            "c_reference": model.c_reference,
            "drift_last_decade": model.drift_last_decade(),
        }
        console.print(f"c = {model.c:.6f} (referencia {model.c_reference:.6f}, fuente {model.source})")

    _execute("radial", config, work)


@cli.command("init-config")
@click.option("--output", "-o", type=click.Path(), help="Destino (por defecto dsii.yaml en la raíz)")
@click.option("--force", is_flag=True, help="Sobrescribir si existe")
def init_config(output, force):
    """Crear dsii.yaml a partir del ejemplo."""
    dest = Path(output) if output else get_project_root() / CONFIG_NAME
    if dest.exists() and not force:
        console.print(f"[red]Error: {dest} ya existe (usar --force)[/red]")
        sys.exit(1)
    example = get_project_root() / EXAMPLE_NAME
    if example.exists():
        shutil.copy(example, dest)
    else:
        RunConfig().save(dest)
    console.print(f"[green]✓ Configuración creada: {dest}[/green]")


@cli.command()
@click.option("--limit", "-l", default=20, help="Número de corridas a mostrar")
def runs(limit):
    """Listar corridas registradas."""
    with RunStore() as store:
        rows = store.recent_runs(limit)

    if not rows:
        console.print("[yellow]No hay corridas registradas[/yellow]")
        return

    table = Table(title=f"Corridas ({len(rows)})")
    table.add_column("ID", style="cyan")
    table.add_column("Comando", style="white")
    table.add_column("Hash", style="magenta")
    table.add_column("Estado", style="green")
    table.add_column("Salida", style="yellow")
    table.add_column("Inicio", style="white")
    table.add_column("Segundos", style="white")
    for row in rows:
        wall = row.get("wall_seconds")
        table.add_row(
            str(row["id"]),
            row["command"],
            row["config_hash"][:12],
            row["status"],
            "" if row["exit_code"] is None else str(row["exit_code"]),
            row["started_at"],
            "" if wall is None else f"{wall:.2f}",
        )
    console.print(table)


if __name__ == "__main__":
    cli()
