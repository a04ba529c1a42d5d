import logging

import numpy as np
import pytest

from src.grid import e_k_sample, make_domain, relative_l2_error
from src.transforms import (
    beurling_apply,
    boundary_mass_fraction,
    cauchy_apply,
    cauchy_apply_fast,
    cauchy_conj_apply,
    cauchy_conj_apply_fast,
    cauchy_matrix,
    d_apply,
    dbar_apply,
    exact_cell_integral,
    fourier,
    fourier_inv,
    holder_constant,
    singular_cell_coefficient,
)


def gaussian(d):
    return d.sample(np.exp(-np.abs(d.z) ** 2))


@pytest.mark.parametrize("near_field_exact", [False, True])
def test_cauchy_matrix_is_antisymmetric(small_domain, near_field_exact):
    c = cauchy_matrix(small_domain, near_field_exact).matrix
    np.testing.assert_allclose(c.T, -c, atol=1e-14)
    assert np.all(np.diag(c) == 0)


@pytest.mark.parametrize("near_field_exact", [False, True])
def test_fast_path_matches_dense(small_domain, random_function, near_field_exact):
    f = random_function(small_domain)
    dense = cauchy_apply(f, near_field_exact)
    fast = cauchy_apply_fast(f, near_field_exact)
    assert relative_l2_error(fast, dense, region="all") < 1e-10
    dense_conj = cauchy_conj_apply(f, near_field_exact)
    fast_conj = cauchy_conj_apply_fast(f, near_field_exact)
    assert relative_l2_error(fast_conj, dense_conj, region="all") < 1e-10


def test_conjugate_transform_of_real_function(small_domain):
    g = gaussian(small_domain)
    np.testing.assert_allclose(cauchy_conj_apply(g).values, np.conj(cauchy_apply(g).values), atol=1e-14)


def test_cauchy_of_gaussian_converges():
    """C(exp(-|z|^2)) = (1 - exp(-|z|^2)) / z."""
    errors = []
    for n in (40, 80):
        d = make_domain(5.0, n)
        exact = d.sample((1.0 - np.exp(-np.abs(d.z) ** 2)) / d.z)
        errors.append(relative_l2_error(cauchy_apply_fast(gaussian(d)), exact))
    assert errors[1] < 5e-2
    assert errors[1] < errors[0]


def test_exact_cell_integral_against_subdivision():
    h = 0.3
    a, b = 1.0, 0.0
    sub = 400
    s = (np.arange(sub) + 0.5) / sub - 0.5
    x, y = np.meshgrid((a + s) * h, (b + s) * h, indexing="ij")
    reference = np.sum(1.0 / (x + 1j * y)) * (h / sub) ** 2 / np.pi
    value = exact_cell_integral(np.array(a), np.array(b), h)
    assert abs(value - reference) < 1e-4 * abs(reference)


def test_exact_cell_integral_limits():
    h = 0.1
    assert abs(exact_cell_integral(np.array(0.0), np.array(0.0), h)) < 1e-14
    far = exact_cell_integral(np.array(5.0), np.array(3.0), h)
    point = h * h / (np.pi * (5.0 + 3.0j) * h)
    assert abs(far - point) < 1e-2 * abs(point)


def test_beurling_and_derivatives_of_gaussian():
    d = make_domain(8.0, 64)
    g = gaussian(d)
    envelope = np.exp(-np.abs(d.z) ** 2)
    dbar_exact = d.sample(-d.z * envelope)
    d_exact = d.sample(-np.conj(d.z) * envelope)
    np.testing.assert_allclose(dbar_apply(g).values, dbar_exact.values, atol=1e-6)
    np.testing.assert_allclose(d_apply(g).values, d_exact.values, atol=1e-6)
    np.testing.assert_allclose(beurling_apply(dbar_exact).values, d_exact.values, atol=1e-6)


def test_fourier_of_gaussian():
    d = make_domain(8.0, 64)
    spectrum = fourier(gaussian(d))
    np.testing.assert_allclose(spectrum.values, np.exp(-np.abs(spectrum.k) ** 2), atol=1e-8)


def test_fourier_is_unitary(small_domain, random_function):
    f = random_function(small_domain)
    spectrum = fourier(f)
    assert spectrum.norm() == pytest.approx(f.norm(2), rel=1e-12)
    back = fourier_inv(spectrum)
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)


def test_boundary_mass_warning(small_domain, caplog):
    with caplog.at_level(logging.WARNING, logger="dsii"):
        dbar_apply(small_domain.ones())
    assert "riesgo de aliasing" in caplog.text
    assert boundary_mass_fraction(small_domain.zeros()) == 0.0
    assert boundary_mass_fraction(small_domain.ones()) == pytest.approx(60 / 256)


def test_holder_constant_is_finite(small_domain):
    value = holder_constant(gaussian(small_domain), q=4.0, pairs=50)
    assert np.isfinite(value) and value > 0


def test_near_field_removes_the_singular_cell_error():
    """C(exp(-|z|^2)) con y sin el término de primer orden de la celda singular."""
    d = make_domain(5.0, 40)
    exact = d.sample((1.0 - np.exp(-np.abs(d.z) ** 2)) / d.z)
    plain = relative_l2_error(cauchy_apply_fast(gaussian(d)), exact)
    near = relative_l2_error(cauchy_apply_fast(gaussian(d), near_field_exact=True), exact)
    assert near < 0.25 * plain


def test_near_field_handles_plane_waves():
    # C(e^{i w x} g): el error del punto medio crece como (w h)^2 y el modo cercano lo absorbe
    d = make_domain(6.0, 64)
    omega = 2.0
    g = d.sample(np.exp(1j * omega * d.z.real - np.abs(d.z) ** 2))
    fine = make_domain(6.0, 192)
    g_fine = fine.sample(np.exp(1j * omega * fine.z.real - np.abs(fine.z) ** 2))
    reference = cauchy_apply_fast(g_fine, near_field_exact=True).grid()[1::3, 1::3].ravel()
    reference = d.sample(reference)
    plain = relative_l2_error(cauchy_apply_fast(g), reference)
    near = relative_l2_error(cauchy_apply_fast(g, near_field_exact=True), reference)
    assert near < 0.3 * plain


def test_singular_cell_coefficient():
    assert singular_cell_coefficient(False) == pytest.approx(1.0 / np.pi)
    assert 0.0 < singular_cell_coefficient(True) < 2.0 / np.pi


def _rho4_identities(d):
    """Pares (transformada, densidad, exacta) de C y C conjugada sobre rho^{-4}, con la cola fuera de la caja."""
    z = d.z
    rho2 = 1.0 + np.abs(z) ** 2
    # (1/pi) int fuera de la caja de rho^{-4}: desplazamiento constante de las dos identidades pares
    offset = 1.0 - np.sum(rho2 ** -2) * d.weight / np.pi
    return [
        (cauchy_apply_fast, rho2 ** -2, np.conj(z) / rho2),
        (cauchy_conj_apply_fast, rho2 ** -2, z / rho2),
        (cauchy_conj_apply_fast, np.conj(z) * rho2 ** -2, -1.0 / rho2 + offset),
        (cauchy_apply_fast, z * rho2 ** -2, -1.0 / rho2 + offset),
    ]


def test_cauchy_identities_at_default_resolution():
    d = make_domain(20.0, 48)
    for transform, density, exact in _rho4_identities(d):
        approx = transform(d.sample(density), near_field_exact=True)
        assert relative_l2_error(approx, d.sample(exact)) < 0.02


@pytest.mark.slow
def test_cauchy_identities_converge_at_second_order():
    coarse, fine = make_domain(10.0, 48), make_domain(10.0, 96)
    for (transform, density_c, exact_c), (_, density_f, exact_f) in zip(
        _rho4_identities(coarse), _rho4_identities(fine)
    ):
        error_c = relative_l2_error(transform(coarse.sample(density_c)), coarse.sample(exact_c))
        error_f = relative_l2_error(transform(fine.sample(density_f)), fine.sample(exact_f))
        assert 3.0 < error_c / error_f < 5.0


def test_fourier_shifts_with_the_carrier():
    """F(e_{k0} exp(-|z|^2))(xi) = exp(-|xi - k0|^2)."""
    d = make_domain(8.0, 64)
    k0 = 0.75 - 0.5j
    spectrum = fourier(e_k_sample(k0, d) * gaussian(d))
    exact = np.exp(-np.abs(spectrum.k - k0) ** 2)
    np.testing.assert_allclose(spectrum.values, exact, atol=1e-2)
    assert spectrum.norm() == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-3)
