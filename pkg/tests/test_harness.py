import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epival import convexfn as cf
from epival import geometry as geo
from epival import harness
from epival.convexfn import NOT_CONVEX, CellPA
from epival.errors import DegenerateInput, ZeroWeight
from epival.geometry import Polyhedron
from epival.valuations import TestFunction, zeta_oracle


def test_gen_max_affine_deterministic():
    a, b = harness.gen_max_affine(17, 2, 5), harness.gen_max_affine(17, 2, 5)
    assert np.array_equal(a.slopes, b.slopes) and np.array_equal(a.intercepts, b.intercepts)
    assert not np.array_equal(a.slopes, harness.gen_max_affine(17, 2, 5, task=1).slopes)


def test_gen_single_piece():
    v = harness.gen_max_affine(0, 2, 1)
    assert len(v) == 1
    assert cf.conjugate(v).dom_dim == 0


@given(st.integers(0, 10_000))
def test_gen_cell_bound(seed):
    v = harness.gen_max_affine(seed, 2, 5)
    u = cf.conjugate(v)
    assert len(u.cells) <= 5
    assert len(u.dom.vertices) <= 5


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_lattice_pair_certified(seed, n):
    pair = harness.gen_lattice_pair(seed, n)
    assert cf.guarded_min(pair.u, pair.v) is not NOT_CONVEX
    assert cf.convexity_defect(pair.minimum) < 1e-9
    assert cf.convexity_defect(pair.maximum) < 1e-9


def test_overlapping_boxes_family():
    y = [0.3, -0.2]
    u = CellPA.linear_on(y, Polyhedron.box([0, 0], [1, 1]))
    v = CellPA.linear_on(y, Polyhedron.box([0.5, 0], [1.5, 1]))
    Z = zeta_oracle(harness.default_zeta(2))
    lhs = Z(cf.pointwise_max(u, v)) + Z(cf.guarded_min(u, v))
    assert lhs == pytest.approx(Z(u) + Z(v), rel=1e-12)
    assert cf.same_function(cf.guarded_min(u, u), u)


def test_valuation_suite_passes():
    Z = {n: zeta_oracle(harness.default_zeta(n)) for n in (1, 2)}
    rep = harness.valuation_identity_suite(Z, 25, seed=3)
    assert rep.passed and rep.max_defect <= 1e-9 and rep.cases == 50


def test_valuation_suite_negative_control():
    rep = harness.valuation_identity_suite(harness.squared_volume_oracle(), 10, seed=3, negative_control=True)
    assert rep.failures and rep.passed
    assert rep.max_defect >= 1e-3


def test_valuation_suite_constant():
    assert harness.valuation_identity_suite(harness.constant_oracle(), 10, seed=0).passed


def test_suite_reports_record_seeds():
    rep = harness.valuation_identity_suite(harness.squared_volume_oracle(), 3, seed=9, dims=(2,),
                                           negative_control=True)
    assert rep.seed == 9
    assert {f["seed"]["task"] for f in rep.failures} <= {2000, 2001, 2002}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_inclusion_exclusion(m):
    Z = {n: zeta_oracle(harness.default_zeta(n)) for n in (1, 2)}
    assert harness.inclusion_exclusion_suite(Z, m, 5, seed=1).passed


def test_inclusion_exclusion_three_intervals():
    z = harness.default_zeta(1)
    Z = zeta_oracle(z)
    fam = [CellPA.indicator(Polyhedron.box([a], [a + 1])) for a in (0.0, 0.5, 1.0)]
    low = cf.guarded_min(cf.guarded_min(fam[0], fam[1]), fam[2])
    assert Z(low) == pytest.approx(2 * z(np.zeros(1)))
    rhs = 0.0
    for r in range(1, 4):
        for J in itertools.combinations(range(3), r):
            f = fam[J[0]]
            for j in J[1:]:
                f = cf.pointwise_max(f, fam[j])
            rhs += (-1) ** (r - 1) * Z(f)
    assert rhs == pytest.approx(Z(low))


def test_inclusion_exclusion_equal_family():
    Z = zeta_oracle(harness.default_zeta(2))
    u = cf.conjugate(harness.gen_max_affine(1, 2, 5))
    rhs = sum((-1) ** (r - 1) * len(list(itertools.combinations(range(3), r))) * Z(u) for r in (1, 2, 3))
    assert rhs == pytest.approx(Z(u))


def test_continuity_one_dimension():
    rep = harness.continuity_suite(zeta_oracle(harness.continuity_zeta(1)), 1,
                                   limit=harness.continuity_limit(1))
    assert rep.passed
    assert rep.extra["final_relative_error"] <= 0.01
    D = np.array(rep.extra["epi_distances"]["distances"])
    assert np.all(np.diff(D, axis=0) <= 1e-12)


def test_continuity_constant_flat():
    rep = harness.continuity_suite(harness.constant_oracle(2.0), 1, limit=2.0)
    assert rep.extra["values"] == [2.0] * 5


def test_continuity_negative_control():
    rep = harness.continuity_suite(harness.cell_count_oracle(), 1, limit=harness.continuity_limit(1),
                                   negative_control=True)
    assert rep.failures and rep.passed


def test_coercive_demo_scaling():
    z = harness.default_zeta(2)
    demo = harness.coercive_divergence_demo(z, [0.5, 0.4], [[1.0, 0.2], [0.3, 1.0]], [1, 2, 4, 8])
    vals = np.array(demo.values)
    assert np.allclose(vals[1:] / vals[:-1], 4.0, rtol=1e-6)
    assert demo.max_relative_deviation <= 0.01


def test_coercive_demo_zero_weight():
    z = TestFunction(2, {(0, 0): 1.0}, rho=0.5)
    with pytest.raises(ZeroWeight):
        harness.coercive_divergence_demo(z, [0.5, 0.4], [[1.0, 0.2], [0.3, 1.0]], [1, 2])
    demo = harness.coercive_divergence_demo(z, [0.5, 0.4], [[1.0, 0.2], [0.3, 1.0]], [1, 2], allow_zero=True)
    assert demo.values == [0.0, 0.0]


def test_coercive_demo_needs_pointed_cone():
    with pytest.raises(DegenerateInput):
        harness.coercive_divergence_demo(harness.default_zeta(2), [1.0, 0.0], [[-1.0, 0.2], [0.3, 1.0]], [1])


def test_growth_demo():
    g = harness.growth_demo(harness.growth_eta(1), [1, 2, 3, 4, 5, 6], h=1 / 32)
    assert g.c1 > 0.1
    assert abs(g.control_c1) <= 1e-3
    assert all(b > a for a, b in zip(g.values, g.values[1:]))
