import numpy as np
import pytest

from src.errors import DomainMismatchError, InvalidConfigError
from src.grid import (
    Domain,
    check_phase,
    e_k_sample,
    integrate,
    make_domain,
    nyquist_limit,
    pair,
    phase_resolution,
    relative_l2_error,
    rho_sample,
)


def test_domain_geometry():
    d = Domain(3.0, 6)
    assert d.h == pytest.approx(1.0)
    assert d.size == 36
    assert d.weight == pytest.approx(1.0)
    np.testing.assert_allclose(d.axis, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    # orden por filas: i recorre x, j recorre y
    assert d.z[1 * 6 + 4] == pytest.approx(d.axis[1] + 1j * d.axis[4])


def test_domain_rejects_bad_parameters():
    with pytest.raises(ValueError):
        make_domain(2.0, 7)
    with pytest.raises(ValueError):
        make_domain(2.0, 4)
    with pytest.raises(ValueError):
        Domain(0.0, 4)
    with pytest.raises(ValueError):
        Domain(1.0, 0)


def test_frame_and_interior_masks():
    d = make_domain(4.0, 10)
    assert d.frame.sum() == 4 * 10 - 4
    assert np.all(np.abs(d.z[d.interior]) <= 2.0)


def test_nodes_are_read_only(tiny_domain):
    with pytest.raises(ValueError):
        tiny_domain.z[0] = 0


def test_gaussian_integral():
    d = make_domain(6.0, 48)
    g = d.sample(np.exp(-np.abs(d.z) ** 2))
    assert integrate(g) == pytest.approx(np.pi, rel=1e-10)


def test_norms_of_constant():
    d = Domain(1.0, 4)
    one = d.ones()
    assert one.norm(2) == pytest.approx(2.0)
    assert one.norm(1) == pytest.approx(4.0)
    assert one.norm(np.inf) == pytest.approx(1.0)


def test_pair_is_bilinear(tiny_domain):
    f = tiny_domain.sample(1j)
    area = (2 * tiny_domain.L) ** 2
    assert pair(f, f) == pytest.approx(-area)


def test_arithmetic_checks_domains(tiny_domain):
    other = make_domain(5.0, 8)
    with pytest.raises(DomainMismatchError):
        tiny_domain.ones() + other.ones()
    with pytest.raises(DomainMismatchError):
        pair(tiny_domain.ones(), other.ones())


def test_rejects_non_finite_samples(tiny_domain):
    values = np.ones(tiny_domain.size)
    values[3] = np.nan
    with pytest.raises(ValueError):
        tiny_domain.sample(values)


def test_rejects_wrong_length(tiny_domain):
    with pytest.raises(ValueError):
        tiny_domain.sample(np.ones(tiny_domain.size + 1))


def test_phase_and_rho(tiny_domain):
    e = e_k_sample(0.7 - 0.2j, tiny_domain)
    np.testing.assert_allclose(e.abs(), 1.0)
    product = e * e_k_sample(-(0.7 - 0.2j), tiny_domain)
    np.testing.assert_allclose(product.values, 1.0)
    rho = rho_sample(tiny_domain)
    np.testing.assert_allclose(rho.values ** 2, 1.0 + np.abs(tiny_domain.z) ** 2)


def test_relative_error_regions(tiny_domain):
    exact = tiny_domain.ones()
    approx = exact * 1.01
    assert relative_l2_error(approx, exact) == pytest.approx(0.01)
    assert relative_l2_error(approx, exact, region="all") == pytest.approx(0.01)
    with pytest.raises(ValueError):
        relative_l2_error(approx, exact, region="borde")


def test_nyquist_limit_of_default_grid():
    d = make_domain(20.0, 48)
    assert nyquist_limit(d) == pytest.approx(np.pi / (2 * d.h))
    assert nyquist_limit(d) == pytest.approx(1.885, abs=1e-3)
    assert phase_resolution(1.5 + 0.5j, d) == pytest.approx(1.5 / nyquist_limit(d))


def test_phase_samples_are_periodic_in_kappa(tiny_domain):
    # e_kappa y e_(kappa + pi/h) coinciden en los nodos de punto medio salvo un signo global
    period = np.pi / tiny_domain.h
    for kappa in (0.3, 0.2 + 0.4j):
        a = e_k_sample(kappa, tiny_domain).values
        for shift in (period, 1j * period):
            b = e_k_sample(kappa + shift, tiny_domain).values
            ratio = b / a
            np.testing.assert_allclose(ratio, ratio[0])
            assert abs(ratio[0]) == pytest.approx(1.0)


def test_check_phase_rejects_unresolved_kappa():
    d = make_domain(20.0, 48)
    assert check_phase(1.0, d) < 1.0
    with pytest.raises(InvalidConfigError):
        check_phase(5.0, d)
    with pytest.raises(InvalidConfigError):
        check_phase(1.0 - 2.0j, d)
