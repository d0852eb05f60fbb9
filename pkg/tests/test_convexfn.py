import numpy as np
import pytest
from hypothesis import given, strategies as st

from epival import convexfn as cf
from epival import geometry as geo
from epival.convexfn import NOT_CONVEX, CellPA, MaxAffine, VerticalShiftTag
from epival.errors import NegativeScale, OutsideDomain
from epival.geometry import Polyhedron
from epival.harness import gen_max_affine

seeds = st.integers(0, 2 ** 31 - 1)


def grid_conjugate(f, ys, xs):
    """sup_x <x,y> - f(x) over a dense 1-d grid."""
    fx = cf.eval_fn(f, xs.reshape(-1, 1))
    return np.max(np.outer(ys, xs) - fx[None, :], axis=1)


def interval(a, b):
    return Polyhedron.box([a], [b])


def test_eval_examples():
    assert cf.eval_fn(MaxAffine([[1.0], [-1.0]], [0, 0]), [2.0]) == 2.0
    assert cf.eval_fn(CellPA.indicator(interval(0, 1)), [2.0]) == np.inf
    assert cf.eval_fn(MaxAffine([[0.0], [1.0]], [0, -1]), [0.5]) == 0.0


def test_redundant_pieces_pruned():
    v = MaxAffine([[1.0], [-1.0], [0.0], [1.0]], [0, 0, -1, -3])
    assert len(v) == 2


def test_conjugate_linear_is_point_indicator():
    u = cf.conjugate(MaxAffine([[0.3, -0.2]], [0.0]))
    assert u.dom_dim == 0
    assert np.allclose(u.dom.vertices, [[0.3, -0.2]])
    assert cf.eval_fn(u, [0.3, -0.2]) == pytest.approx(0.0)


def test_conjugate_relu():
    u = cf.conjugate(MaxAffine([[0.0], [1.0]], [0.0, 0.0]))
    assert geo.hausdorff_distance(u.dom, interval(0, 1)) < 1e-12
    ys = np.linspace(0, 1, 11)
    assert np.allclose(cf.eval_fn(u, ys.reshape(-1, 1)), 0.0)


def test_conjugate_against_grid():
    v = MaxAffine([[-1.0], [1.0]], [0.0, -1.0])
    u = cf.conjugate(v)
    assert geo.hausdorff_distance(u.dom, interval(-1, 1)) < 1e-12
    ys = np.linspace(-1, 1, 21)
    ref = grid_conjugate(v, ys, np.linspace(-5, 5, 20001))
    assert np.allclose(cf.eval_fn(u, ys.reshape(-1, 1)), ref, atol=1e-9)
    assert cf.eval_fn(u, [-1.0]) == pytest.approx(0.0)
    assert cf.eval_fn(u, [1.0]) == pytest.approx(1.0)


def test_indicator_conjugate_is_support_function(rng):
    K = Polyhedron.from_points(rng.normal(size=(6, 2)))
    h = cf.conjugate(CellPA.indicator(K))
    X = rng.normal(size=(50, 2))
    assert np.allclose(cf.eval_fn(h, X), np.max(X @ K.vertices.T, axis=1))


def test_linear_on_conjugate(rng):
    K = Polyhedron.box([0, 0], [1, 2])
    y = np.array([0.4, -0.7])
    h = cf.conjugate(CellPA.linear_on(y, K))
    X = rng.normal(size=(50, 2))
    assert np.allclose(cf.eval_fn(h, X), np.max((X - y) @ K.vertices.T, axis=1))


@given(seeds, st.sampled_from([1, 2]), st.integers(1, 7))
def test_double_conjugate_roundtrip(seed, n, m):
    v = gen_max_affine(seed, n, m)
    assert cf.same_function(cf.conjugate(cf.conjugate(v)), v)


@given(seeds)
def test_conjugate_is_convex(seed):
    u = cf.conjugate(gen_max_affine(seed, 2, 6))
    assert cf.convexity_defect(u) < 1e-9
    assert len(u.cells) <= 6


def test_epi_scale_examples():
    K = Polyhedron.box([0, 0], [1, 1])
    y = [0.5, -0.25]
    u = CellPA.linear_on(y, K)
    assert cf.epi_scale(u, 1.0) is u
    z = cf.epi_scale(u, 0.0)
    assert z.dom_dim == 0 and np.allclose(z.dom.vertices, 0)
    assert cf.same_function(cf.epi_scale(u, 2.0), CellPA.linear_on(y, K.scale(2.0)))
    with pytest.raises(NegativeScale):
        cf.epi_scale(u, -1.0)


@given(seeds, st.floats(0.2, 4.0))
def test_epi_scale_matches_definition(seed, lam):
    u = cf.conjugate(gen_max_affine(seed, 2, 5))
    s = cf.epi_scale(u, lam)
    X = lam * u.dom.relint_point()[None, :] + np.zeros((1, 2))
    assert cf.eval_fn(s, X[0]) == pytest.approx(lam * cf.eval_fn(u, X[0] / lam), abs=1e-9)


def test_inf_convolve_indicators():
    K, L = Polyhedron.box([0, 0], [1, 1]), Polyhedron.from_points([[0, 0], [1, 0], [0, 1]])
    w = cf.inf_convolve([1, 1], [CellPA.indicator(K), CellPA.indicator(L)])
    assert cf.same_function(w, CellPA.indicator(geo.minkowski_sum(K, L)))


def test_inf_convolve_linear():
    y = [0.3, 0.6]
    K, L = Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([-1, 0], [0, 2])
    w = cf.inf_convolve([1, 1], [CellPA.linear_on(y, K), CellPA.linear_on(y, L)])
    assert cf.same_function(w, CellPA.linear_on(y, geo.minkowski_sum(K, L)))


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (0.5, 2.0), (3.0, 0.25)])
def test_inf_convolve_weights_add(a, b):
    u = CellPA.linear_on([0.2, -0.1], Polyhedron.from_points([[0, 0], [1, 0.3], [0.2, 1]]))
    lhs = cf.inf_convolve([a, b], [u, u])
    assert cf.same_function(lhs, cf.epi_scale(u, a + b))


def test_inf_convolve_grid_1d():
    u = cf.conjugate(MaxAffine([[-1.0], [1.0]], [0.0, -1.0]))
    v = CellPA([interval(0, 1), interval(1, 2)], [[-1.0], [1.0]], [1.0, -1.0])
    w = cf.inf_convolve([1, 1], [u, v])
    xs = np.linspace(-1, 1, 4001)
    for z in np.linspace(-0.8, 2.8, 13):
        ref = np.min(cf.eval_fn(u, xs.reshape(-1, 1)) + cf.eval_fn(v, (z - xs).reshape(-1, 1)))
        assert cf.eval_fn(w, [z]) == pytest.approx(ref, abs=2e-3)


def test_pointwise_max_examples():
    f = cf.conjugate(gen_max_affine(3, 2, 5))
    assert cf.same_function(cf.pointwise_max(f, f), f)
    y = [0.1, 0.2]
    K, L = Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([0.5, -1], [2, 0.5])
    m = cf.pointwise_max(CellPA.linear_on(y, K), CellPA.linear_on(y, L))
    assert cf.same_function(m, CellPA.linear_on(y, geo.intersect(K, L)))


def test_pointwise_max_splits_at_kink():
    D = interval(-1, 1)
    m = cf.pointwise_max(CellPA.linear_on([1.0], D), CellPA.linear_on([-1.0], D))
    assert sorted((float(c.vertices.min()), float(c.vertices.max())) for c in m.cells) == [(-1, 0), (0, 1)]


def test_guarded_min_examples():
    y = [0.1, -0.3]
    K, L = Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([0.5, 0], [1.5, 1])
    m = cf.guarded_min(CellPA.linear_on(y, K), CellPA.linear_on(y, L))
    assert cf.same_function(m, CellPA.linear_on(y, Polyhedron.box([0, 0], [1.5, 1])))
    assert cf.guarded_min(MaxAffine([[1.0]], [0.0]), MaxAffine([[-1.0]], [0.0])) is NOT_CONVEX
    f = gen_max_affine(5, 2, 4)
    assert cf.same_function(cf.guarded_min(f, f), f)


def test_guarded_min_rejects_nonconvex_union():
    K, L = Polyhedron.box([0, 0], [1, 1]), Polyhedron.box([2, 0], [3, 1])
    assert cf.guarded_min(CellPA.indicator(K), CellPA.indicator(L)) is NOT_CONVEX


def test_translate_examples():
    u = cf.conjugate(gen_max_affine(1, 2, 4))
    assert cf.same_function(cf.translate(u, VerticalShiftTag(0.0, np.zeros(2))), u)
    K = Polyhedron.box([0, 0], [1, 1])
    x0 = np.array([0.5, -2.0])
    t = cf.translate(CellPA.indicator(K), VerticalShiftTag(0.0, x0))
    assert cf.same_function(t, CellPA.indicator(K.translate(x0)))
    y = np.array([0.3, 0.7])
    lhs = CellPA.linear_on(y, K.translate(x0))
    rhs = cf.translate(CellPA.linear_on(y, K), VerticalShiftTag(float(x0 @ y), x0))
    assert cf.same_function(lhs, rhs)


def test_subdifferential_examples():
    u = cf.conjugate(gen_max_affine(2, 2, 5))
    c = u.cells[0]
    sd = cf.subdifferential(u, c.relint_point())
    assert sd.affine_dim == 0 and np.allclose(sd.vertices[0], u.slopes[0])

    ray = cf.subdifferential(CellPA.indicator(interval(0, 1)), [1.0])
    assert not ray.is_bounded
    assert np.allclose(ray.vertices, [[0.0]]) and np.allclose(ray.rays, [[1.0]])

    v = CellPA([interval(0, 1), interval(1, 2)], [[-1.0], [1.0]], [1.0, -1.0])
    seg = cf.subdifferential(v, [1.0])
    assert geo.hausdorff_distance(seg, interval(-1, 1)) < 1e-12

    with pytest.raises(OutsideDomain):
        cf.subdifferential(v, [5.0])


def test_sample_approx_tangents():
    v = cf.sample_approx(lambda x: float(x[0] ** 2), [[-1.0], [0.0], [1.0]])
    ref = MaxAffine([[-2.0], [0.0], [2.0]], [-1.0, 0.0, -1.0])
    assert np.allclose(v.slopes[np.argsort(v.slopes[:, 0])], ref.slopes[np.argsort(ref.slopes[:, 0])], atol=1e-6)
    aff = cf.sample_approx(lambda x: float(2 * x[0] - x[1] + 1), np.random.default_rng(0).normal(size=(8, 2)))
    assert len(aff) == 1


def test_sample_approx_converges():
    xs = np.linspace(-1, 1, 401).reshape(-1, 1)
    errs = []
    for k in (3, 5, 9, 17):
        v = cf.sample_approx(lambda x: float(x[0] ** 2), np.linspace(-1, 1, k).reshape(-1, 1))
        errs.append(np.max(np.abs(cf.eval_fn(v, xs) - xs[:, 0] ** 2)))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_sublevel_examples():
    K = Polyhedron.box([0, 0], [1, 1])
    assert geo.hausdorff_distance(cf.sublevel_set(CellPA.indicator(K), 0.0), K) == 0.0
    assert cf.sublevel_set(CellPA.indicator(K), -0.5).is_empty
    S = cf.sublevel_set(MaxAffine([[1.0], [-1.0]], [0, 0]), 2.0)
    assert geo.hausdorff_distance(S, interval(-2, 2)) < 1e-12


@given(seeds, st.floats(0.3, 3.0))
def test_sublevel_of_epi_scale(seed, lam):
    u = cf.conjugate(gen_max_affine(seed, 2, 5))
    t = cf.fn_min(u) + 0.3
    lhs = cf.sublevel_set(cf.epi_scale(u, lam), lam * t)
    rhs = cf.sublevel_set(u, t).scale(lam)
    assert geo.hausdorff_distance(lhs, rhs) < 1e-9


def test_epi_distance_report():
    u = cf.conjugate(gen_max_affine(4, 2, 5))
    t = [cf.fn_min(u) + 0.2, cf.fn_min(u) + 0.5]
    assert np.all(cf.epi_distance_report([u, u], u, t).distances == 0)
    seq = [cf.epi_scale(u, 1 + 1 / k) for k in (1, 2, 4, 8)]
    D = cf.epi_distance_report(seq, u, t).distances
    assert np.all(np.diff(D, axis=0) < 0)
    assert np.all(D[-1] <= D[0] / 4)


@pytest.mark.parametrize("n", [1, 2])
def test_json_roundtrip(n):
    v = gen_max_affine(9, n, 5)
    u = cf.conjugate(v)
    assert cf.same_function(cf.fn_from_dict(v.to_dict()), v)
    assert cf.same_function(cf.fn_from_dict(u.to_dict()), u)
