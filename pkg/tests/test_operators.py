import numpy as np
import pytest

from src.errors import DomainMismatchError, PotentialError
from src.grid import e_k_sample, make_domain, relative_l2_error
from src.operators import (
    AdmissiblePair,
    DenseOperator,
    assemble_blocks,
    assemble_s,
    assemble_t,
    assemble_t_perturbed,
    check_compact_support,
    e_p_norms,
    is_admissible,
    lebesgue_norm,
    mixed_norm,
    mixed_norm_adjoint,
    operator_distance,
    sigma_max,
)
from src.perturbation import builtin_phi
from src.soliton import SolitonParams, eigenbasis, u0_sample
from src.transforms import cauchy_apply, cauchy_apply_fast, cauchy_conj_apply, cauchy_conj_apply_fast


def test_s_matches_composed_transforms(small_domain, random_function):
    d = small_domain
    u = d.sample(0.5 * np.exp(-np.abs(d.z) ** 2 / 2))
    h = random_function(d)
    k = 0.4 - 0.3j
    op = assemble_s(k, u)
    inner = cauchy_conj_apply(e_k_sample(k, d) * u.conj() * h)
    expected = -0.25 * cauchy_apply(u * e_k_sample(-k, d) * inner)
    np.testing.assert_allclose(op.apply(h).values, expected.values, atol=1e-12)


def test_s_is_quadratic_in_potential(small_domain):
    d = small_domain
    u = d.sample(np.exp(-np.abs(d.z) ** 2))
    s1 = assemble_s(0.3j, u).matrix
    s2 = assemble_s(0.3j, 2.0 * u).matrix
    np.testing.assert_allclose(s2, 4.0 * s1, atol=1e-12)
    assert np.all(assemble_s(1.0, d.zeros()).matrix == 0)


def test_blocks_reproduce_perturbed_operator(small_domain):
    params = SolitonParams(k0=0.3)
    phi = builtin_phi("gauss", small_domain, params)
    eps = 0.07
    b0, b1, b2 = assemble_blocks(0.05 + 0.02j, phi, params)
    direct = assemble_t_perturbed(0.05 + 0.02j, eps, phi, params).matrix
    np.testing.assert_allclose(b0 + eps * b1 + eps ** 2 * b2, direct, atol=1e-12)
    np.testing.assert_allclose(b0, assemble_t(0.05 + 0.02j, small_domain, params).matrix, atol=1e-12)


def test_perturbation_must_vanish_on_frame(small_domain):
    with pytest.raises(PotentialError):
        check_compact_support(small_domain.ones())
    check_compact_support(small_domain.zeros())
    with pytest.raises(PotentialError):
        assemble_blocks(0j, small_domain.ones())


def test_t0_is_similar_to_positive_matrix():
    """rho^{-1} T(0) rho = B B^H."""
    d = make_domain(6.0, 16)
    t0 = assemble_t(0j, d, SolitonParams(k0=0.5)).matrix
    rho = np.sqrt(1.0 + np.abs(d.z) ** 2)
    similar = t0 * (rho[None, :] / rho[:, None])
    np.testing.assert_allclose(similar, similar.conj().T, atol=1e-12)
    eigenvalues = np.linalg.eigvalsh(0.5 * (similar + similar.conj().T))
    assert eigenvalues.min() > -1e-10


def test_soliton_eigenfunctions_of_t0():
    d = make_domain(12.0, 192)
    params = SolitonParams()
    u0 = u0_sample(params, d)
    for psi in eigenbasis(d).psis:
        inner = cauchy_conj_apply_fast(u0.conj() * psi)
        image = -0.25 * cauchy_apply_fast(u0 * inner)
        assert relative_l2_error(image, psi) < 0.05


def test_dense_operator_checks(tiny_domain):
    with pytest.raises(ValueError):
        DenseOperator(tiny_domain, np.zeros((3, 3)))
    op = DenseOperator(tiny_domain, np.eye(tiny_domain.size), label="I")
    with pytest.raises(DomainMismatchError):
        op.apply(make_domain(5.0, 8).ones())
    assert op.transpose().label == "I'"
    np.testing.assert_allclose(op.kernel(), np.eye(tiny_domain.size) / tiny_domain.weight)


def test_mixed_norms_of_separable_kernel(small_domain):
    d = small_domain
    f = d.sample(np.exp(-np.abs(d.z) ** 2))
    g = d.sample((1 + 1j) / (1.0 + np.abs(d.z) ** 4))
    op = DenseOperator(d, d.weight * np.outer(f.values, g.values))
    assert mixed_norm(op, 3.0, 1.5) == pytest.approx(f.norm(3.0) * g.norm(1.5), rel=1e-10)
    assert mixed_norm_adjoint(op, 3.0, 1.5) == pytest.approx(g.norm(3.0) * f.norm(1.5), rel=1e-10)
    assert mixed_norm(op, np.inf, np.inf) == pytest.approx(f.norm(np.inf) * g.norm(np.inf), rel=1e-10)
    first, second = e_p_norms(op, 4.0)
    assert first == pytest.approx(f.norm(4.0) * g.norm(4.0 / 3.0), rel=1e-10)
    assert second == pytest.approx(g.norm(4.0 / 3.0) * f.norm(4.0), rel=1e-10)
    with pytest.raises(ValueError):
        mixed_norm(op, 0.5, 2.0)


def _inside_triangle(x, y):
    # vértices (0, 1), (1/2, 1), (1/4, 3/4)
    return y < 1.0 and y > 0.5 + x and y > 1.0 - x


def test_admissible_region_is_the_triangle():
    for i in range(100):
        x = (i + 0.25) / 100
        for j in range(100):
            y = (j + 0.6) / 100
            assert is_admissible(1.0 / x, 1.0 / y) == _inside_triangle(x, y), (x, y)


def test_admissible_pair():
    pair = AdmissiblePair(5.0, 1.15)
    assert pair.p_dual == pytest.approx(1.25)
    assert pair.t_dual == pytest.approx(1.15 / 0.15)
    with pytest.raises(ValueError):
        AdmissiblePair(3.0, 1.5)
    with pytest.raises(ValueError):
        is_admissible(-1.0, 1.5)


def test_norm_helpers(small_domain):
    d = small_domain
    u = d.sample(np.exp(-np.abs(d.z) ** 2))
    assert lebesgue_norm(u, 1.5) == pytest.approx(max(u.norm(1.5), u.norm(3.0)))
    op = DenseOperator(d, 0.5 * np.eye(d.size))
    assert sigma_max(op) == pytest.approx(0.5)
    assert sigma_max(op, shift_identity=True) == pytest.approx(0.5)
    assert operator_distance(op, DenseOperator(d, np.zeros((d.size, d.size)))) == pytest.approx(0.5)


def test_perturbed_operator_moves_linearly_in_eps(small_domain):
    params = SolitonParams()
    phi = builtin_phi("gauss", small_domain, params)
    base = assemble_t_perturbed(0.05j, 0.0, phi, params)
    slopes = [operator_distance(assemble_t_perturbed(0.05j, eps, phi, params), base) / eps for eps in (0.01, 0.02, 0.04)]
    assert slopes[0] > 0
    assert max(slopes) / min(slopes) < 1.1


@pytest.mark.slow
def test_kernel_norms_decay_with_k():
    d = make_domain(4.0, 48)
    u = d.sample(np.exp(-np.abs(d.z) ** 2))
    ks = (0.0, 2.0, 4.0, 6.0)
    mixed = [e_p_norms(assemble_s(k, u, near_field_exact=True), 4.0)[0] for k in ks]
    assert all(later < earlier for earlier, later in zip(mixed, mixed[1:]))
    assert mixed[-1] < mixed[0] / 3.0

    sigmas = [sigma_max(assemble_s(k, u, near_field_exact=True)) for k in ks[1:]]
    products = [k * s for k, s in zip(ks[1:], sigmas)]
    assert all(later < earlier for earlier, later in zip(sigmas, sigmas[1:]))
    assert max(products) / min(products) < 3.0


@pytest.mark.slow
def test_spectrum_is_covariant_under_rotation():
    d = make_domain(10.0, 40)
    kappa = 0.1
    first = np.linalg.eigvals(assemble_t(kappa, d).matrix)
    turned = np.linalg.eigvals(assemble_t(kappa * np.exp(1j * np.pi / 3.0), d).matrix)
    # los dos autovalores que nacen del autovalor doble 1
    pair_a = first[np.argsort(np.abs(first - 1.0))][:2]
    pair_b = turned[np.argsort(np.abs(turned - 1.0))][:2]
    np.testing.assert_allclose(np.sort(np.abs(pair_a)), np.sort(np.abs(pair_b)), atol=2e-2)
    np.testing.assert_allclose(np.sort(pair_a.imag), np.sort(pair_b.imag), atol=2e-2)
