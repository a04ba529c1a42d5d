import numpy as np
import pytest

from src.cgo import (
    CRoutes,
    c_of_k,
    c_route_a,
    c_route_b,
    dbar_check,
    dbar_residual,
    export_solution,
    scattering_data,
    solve_m,
)
from src.errors import InvalidConfigError, NearExceptional
from src.export import read_operator
from src.grid import make_domain, relative_l2_error
from src.soliton import SolitonParams, exact_m, exact_s, soliton_dbar_value, soliton_h, u0_sample


def small_gaussian(d, amplitude=0.5):
    return d.sample(amplitude * np.exp(-np.abs(d.z) ** 2))


def test_zero_potential(small_domain):
    u = small_domain.zeros()
    sol = solve_m(1 + 1j, u, method="direct")
    np.testing.assert_allclose(sol.m1.values, 1.0)
    np.testing.assert_allclose(sol.m2.values, 0.0)
    assert sol.det.abs == pytest.approx(1.0)
    datum = scattering_data(1 + 1j, u, sol)
    assert datum.s == 0 and datum.r == 0
    assert np.isnan(datum.c)


def test_direct_and_iterative_agree(small_domain):
    u = small_gaussian(small_domain)
    direct = solve_m(0.7, u, method="direct", tol=1e-10)
    iterative = solve_m(0.7, u, method="iterative", tol=1e-10)
    assert direct.direct and not iterative.direct
    assert iterative.iterations > 0
    assert relative_l2_error(iterative.m1, direct.m1, region="all") < 1e-6
    assert relative_l2_error(iterative.m2, direct.m2, region="all") < 1e-6


def test_auto_method_uses_direct_on_small_grids(small_domain):
    sol = solve_m(0.7, small_gaussian(small_domain))
    assert sol.direct


def test_exclusion_radius(small_domain):
    with pytest.raises(NearExceptional):
        solve_m(0.1, small_gaussian(small_domain), zeros=[0j], delta=0.5)


def test_unknown_method(small_domain):
    with pytest.raises(ValueError):
        solve_m(0.7, small_gaussian(small_domain), method="jacobi")


def test_near_exceptional_by_determinant(small_domain):
    with pytest.raises(NearExceptional):
        solve_m(0.7, small_gaussian(small_domain), method="direct", zero_threshold=10.0)


def test_c_routes_vanish_for_zero_potential(small_domain):
    routes = c_of_k(0.5, small_domain.zeros())
    assert routes.route_a == 0 and routes.route_b == 0
    assert routes.agreement == 0.0


def test_route_agreement_metric():
    routes = CRoutes(1.0 + 0j, 1.1 + 0j)
    assert routes.agreement == pytest.approx(0.1 / 1.1)


def test_c_is_quadratic_in_potential(small_domain):
    u = small_gaussian(small_domain)
    assert c_route_b(0.9j, 2.0 * u) == pytest.approx(4.0 * c_route_b(0.9j, u), rel=1e-12)
    assert c_route_a(0.9j, 2.0 * u) == pytest.approx(4.0 * c_route_a(0.9j, u), rel=1e-12)


def test_dbar_check_rejects_unknown_route(small_domain):
    with pytest.raises(ValueError):
        dbar_check(small_gaussian(small_domain), 1.0 + 0.5j, 0.05, c_route="z")


def test_dbar_residual_matches_check(small_domain):
    u = small_gaussian(small_domain)
    check = dbar_check(u, 1.0 + 0.5j, 0.05)
    assert np.isfinite(check.residual)
    assert dbar_residual(u, 1.0 + 0.5j, 0.05) == pytest.approx(check.residual, rel=1e-12)


def test_export_solution(small_domain, tmp_path):
    sol = solve_m(0.7, small_gaussian(small_domain))
    meta_path = export_solution(sol, tmp_path / "cgo.bin", config_hash="abc")
    assert meta_path.suffix == ".json"
    stacked, header = read_operator(tmp_path / "cgo.bin")
    assert stacked.shape == (2, small_domain.size)
    np.testing.assert_array_equal(stacked[0], sol.m1.values)
    assert header["N"] == small_domain.N


def test_route_a_matches_soliton_density():
    # c(k0 + kappa) = kappa h(|kappa|^2) para el solitón
    d = make_domain(20.0, 48)
    params = SolitonParams()
    u0 = u0_sample(params, d)
    for kappa in (2.0, 1j, 1 + 1j):
        expected = kappa * float(soliton_h(abs(kappa) ** 2))
        assert abs(c_route_a(params.k0 + kappa, u0, carrier=params.k0) - expected) < 0.02 * abs(expected)


def test_route_a_follows_the_carrier():
    d = make_domain(20.0, 48)
    k0 = 0.4 - 0.3j
    shifted = c_route_a(k0 + 1j, u0_sample(SolitonParams(k0=k0), d), carrier=k0)
    centered = c_route_a(1j, u0_sample(SolitonParams(), d))
    assert shifted == pytest.approx(centered, rel=1e-6)


def test_solver_refuses_unresolved_phase():
    d = make_domain(20.0, 48)
    u0 = u0_sample(SolitonParams(), d)
    with pytest.raises(InvalidConfigError):
        solve_m(2.5, u0, method="iterative")
    with pytest.raises(InvalidConfigError):
        c_route_b(2.5j, u0)
    # el potencial nulo no tiene fase que resolver
    assert solve_m(2.5, d.zeros(), method="iterative").residual < 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("kappa", [1j, 2.0, 1 + 1j])
def test_soliton_against_exact_solution(kappa):
    d = make_domain(20.0, 256)
    params = SolitonParams()
    u0 = u0_sample(params, d)
    sol = solve_m(params.k0 + kappa, u0, method="iterative", tol=1e-8, near_field_exact=True,
                  carrier=params.k0)
    m1, m2 = exact_m(kappa, d, params)
    assert relative_l2_error(sol.m1, m1) < 0.02
    assert relative_l2_error(sol.m2, m2) < 0.03
    datum = scattering_data(params.k0 + kappa, u0, sol)
    s = exact_s(kappa)
    assert abs(datum.s - s) < 0.03 * abs(s)
    assert abs(datum.r) < 0.03 * abs(s)


@pytest.mark.slow
def test_c_routes_agree_for_soliton():
    d = make_domain(20.0, 128)
    params = SolitonParams()
    u0 = u0_sample(params, d)
    for kappa in (1.0, 1j, 0.5 + 0.5j):
        routes = c_of_k(params.k0 + kappa, u0, carrier=params.k0, near_field_exact=True)
        assert routes.agreement < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("kappa", [0.5, 0.5j])
def test_dbar_identity_for_soliton(kappa):
    d = make_domain(20.0, 48)
    params = SolitonParams()
    check = dbar_check(u0_sample(params, d), params.k0 + kappa, 0.02, carrier=params.k0,
                       near_field_exact=True)
    expected = soliton_dbar_value(kappa)
    assert abs(check.finite_difference - expected) < 0.05 * abs(expected)
    assert abs(check.predicted - expected) < 0.05 * abs(expected)


@pytest.mark.slow
@pytest.mark.parametrize("route", ["a", "b"])
def test_dbar_identity_for_gaussian(route):
    d = make_domain(6.0, 48)
    u = small_gaussian(d, amplitude=1.0)
    for k in (0.6, 0.6j, -0.4 - 0.4j):
        check = dbar_check(u, k, 0.02, c_route=route, near_field_exact=True)
        assert check.relative < 0.05


@pytest.mark.slow
def test_dbar_identity_far_from_the_origin():
    # el lado izquierdo es diminuto: se compara contra el tamaño de cada término
    d = make_domain(6.0, 64)
    u = small_gaussian(d, amplitude=1.0)
    for k in (2.0, 3j, -2 - 2j):
        check = dbar_check(u, k, 0.02, c_route="b", near_field_exact=True)
        scale = max(abs(0.5 * check.s), abs(check.c))
        assert check.residual < 0.05 * scale
