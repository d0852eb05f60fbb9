import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epival import convexfn as cf
from epival import geometry as geo
from epival.convexfn import CellPA
from epival.decompose import (
    component_oracle,
    dual_decompose,
    homogeneous_components,
    multinomial,
    polarize,
    polynomial_fit,
    vandermonde_coeffs,
    verify_homogeneity,
)
from epival.errors import ArityMismatch, RankDeficient
from epival.geometry import Polyhedron
from epival.harness import constant_oracle, default_zeta, gen_max_affine
from epival.repro import mixed_degree_oracle
from epival.valuations import ValuationOracle, dual_wrap, dual_zeta_valuation, zeta_oracle, zeta_valuation

seeds = st.integers(0, 2 ** 31 - 1)


def random_u(seed, n=2, m=5):
    return cf.conjugate(gen_max_affine(seed, n, m))


def test_vandermonde_small():
    assert np.allclose(vandermonde_coeffs(0).alpha, [[1.0]])
    M = vandermonde_coeffs(1)
    assert np.allclose(M.vandermonde(), [[1, 0], [1, 1]])
    assert np.allclose(M.alpha, [[1, 0], [-1, 1]])


@pytest.mark.parametrize("n", [2, 4, 6])
def test_vandermonde_inverse(n):
    M = vandermonde_coeffs(n)
    assert np.max(np.abs(M.vandermonde() @ M.alpha - np.eye(n + 1))) <= 1e-12


def test_refuses_high_degree_without_exact():
    u = CellPA.indicator(Polyhedron.box([0], [1]))
    with pytest.raises(ValueError):
        homogeneous_components(constant_oracle(), u, 8)
    comps = homogeneous_components(constant_oracle(2.0), u, 8, exact=True)
    assert comps[0] == pytest.approx(2.0) and np.allclose(comps[1:], 0, atol=1e-9)


@given(seeds, st.sampled_from([1, 2]))
def test_zeta_components(seed, n):
    Z = zeta_oracle(default_zeta(n))
    u = random_u(seed, n)
    comps = homogeneous_components(Z, u, n)
    direct = Z(u)
    assert np.all(np.abs(comps[:n]) <= 1e-8 * max(1.0, abs(direct)))
    assert comps[n] == pytest.approx(direct, abs=1e-12)


def test_constant_components():
    comps = homogeneous_components(constant_oracle(3.5), random_u(0), 2)
    assert comps[0] == pytest.approx(3.5) and np.allclose(comps[1:], 0, atol=1e-12)


@given(seeds)
def test_mixed_degree_linearity(seed):
    Zz = zeta_oracle(default_zeta(2))
    Z = ValuationOracle(lambda u: 2 * Zz(u) + 5.0, name="2zeta+5")
    u = random_u(seed)
    comps = homogeneous_components(Z, u, 2)
    assert np.allclose(comps, [5.0, 0.0, 2 * Zz(u)], atol=1e-10)


def test_middle_degree_component():
    z = default_zeta(2)
    u1 = random_u(99)
    Z = mixed_degree_oracle(z, u1)
    u = random_u(7)
    comps = homogeneous_components(Z, u, 2)
    # degree-1 part is 2 * mixed value of (u, u1)
    assert comps.sum() == pytest.approx(Z(u), abs=1e-12)
    assert abs(comps[1]) > 1e-6


@pytest.mark.parametrize("n", [1, 2])
def test_verify_homogeneity(n):
    Z = zeta_oracle(default_zeta(n))
    u = random_u(3, n)
    Zn = component_oracle(Z, n, n)
    lams = [0.5, 1.5, 2.0, 3.0]
    assert verify_homogeneity(Zn, u, n, lams) <= 1e-9
    assert verify_homogeneity(constant_oracle(), u, 0, lams) == 0.0
    assert verify_homogeneity(Zn, u, n - 1, lams) > 1e-2


def test_polarize_diagonal():
    Z = zeta_oracle(default_zeta(2))
    u = random_u(5)
    assert polarize(Z, [u, u]) == pytest.approx(Z(u), rel=1e-9)


def test_polarize_degree_one_is_additive():
    # zeta valuation in dimension one is 1-homogeneous and epi-additive
    Z = zeta_oracle(default_zeta(1))
    u, v = random_u(1, 1), random_u(2, 1)
    assert polarize(Z, [u]) == pytest.approx(Z(u))
    assert Z(cf.inf_convolve([1, 1], [u, v])) == pytest.approx(Z(u) + Z(v), abs=1e-12)


def test_polarize_arity_check():
    with pytest.raises(ArityMismatch):
        polarize(zeta_oracle(default_zeta(2)), [random_u(1)])


def test_fit_single_argument():
    Z = zeta_oracle(default_zeta(2))
    u = random_u(4)
    fit = polynomial_fit(Z, [u], [0.5, 1.0, 1.5, 2.0])
    assert fit.exponents == [(2,)]
    assert fit.coeffs[0] == pytest.approx(Z(u), rel=1e-9)
    assert fit.residual <= 1e-9 * fit.max_abs_sample


def test_fit_mixed_volume():
    K = Polyhedron.from_points([[0, 0], [1, 0], [0.3, 0.8]])
    L = Polyhedron.box([0, 0], [0.5, 1.2])
    z = default_zeta(2)
    fit = polynomial_fit(zeta_oracle(z), [CellPA.indicator(K), CellPA.indicator(L)], [0.5, 1.0, 1.5, 2.0])
    mixed = (geo.volume(geo.minkowski_sum(K, L)) - geo.volume(K) - geo.volume(L)) / 2
    z0 = z(np.zeros(2))
    assert fit.table.value((2, 0)) == pytest.approx(z0 * geo.volume(K))
    assert fit.table.value((1, 1)) == pytest.approx(z0 * mixed)
    assert fit.table.value((0, 2)) == pytest.approx(z0 * geo.volume(L))
    assert fit.residual <= 1e-9 * fit.max_abs_sample


@settings(max_examples=10)
@given(seeds)
def test_fit_agrees_with_polarization(seed):
    Z = zeta_oracle(default_zeta(2))
    u, v = random_u(seed), random_u(seed + 1)
    fit = polynomial_fit(Z, [u, v], [0.5, 1.0, 1.5, 2.0])
    pol = polarize(Z, [u, v])
    assert fit.table.value((1, 1)) == pytest.approx(pol, rel=1e-7, abs=1e-12)


def test_fit_needs_enough_nodes():
    with pytest.raises(RankDeficient):
        polynomial_fit(zeta_oracle(default_zeta(2)), [random_u(1)], [1.0, 2.0])


def test_multinomial():
    assert multinomial((2, 0)) == 1
    assert multinomial((1, 1)) == 2
    assert multinomial((1, 1, 2)) == 12


def test_dual_decompose():
    z = default_zeta(2)
    Zd = ValuationOracle(lambda v: dual_zeta_valuation(z, v), domain="maxaffine", name="dual-zeta")
    v = gen_max_affine(6, 2, 5)
    dec = dual_decompose(Zd, v, 2, crosscheck=True)
    assert np.allclose(dec.components[:2], 0, atol=1e-10)
    assert dec.components[2] == pytest.approx(zeta_valuation(z, cf.conjugate(v)))
    assert dec.discrepancy <= 1e-9
    const = dual_decompose(ValuationOracle(lambda v: 1.5, domain="maxaffine"), v, 2)
    assert np.allclose(const.components, [1.5, 0, 0])
    wrapped = dual_decompose(dual_wrap(zeta_oracle(z)), v, 2)
    assert np.allclose(wrapped.components, dec.components, atol=1e-9)
