"""Piecewise-affine convex functions on R^n (n = 1, 2).

Two representations:

* ``MaxAffine``: a finite maximum of affine functions (finite everywhere).
* ``CellPA``: affine pieces on the cells of a polytopal partition of a
  bounded polytope, +inf outside it.

Legendre conjugation maps one onto the other and is computed exactly via
lower convex hulls of lifted slope points.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry as geo
from .errors import (
    DimensionMismatch,
    DimensionUnsupported,
    EmptyDomain,
    EmptyInput,
    NegativeScale,
    OutsideDomain,
    Unbounded,
)
from .geometry import LiftedPointSet, Polyhedron, Subdivision, TAU_GEOM

TAU_PRUNE = 1e-10
H_FD = 1e-5
SAME_TOL = 1e-9


@dataclass(frozen=True)
class AffineFunction:
    """w(x) = <slope, x> + intercept."""

    slope: np.ndarray
    intercept: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.slope, dtype=float))
        if not (np.all(np.isfinite(a)) and np.isfinite(self.intercept)):
            raise ValueError("affine function needs finite coefficients")
        object.__setattr__(self, "slope", a)
        object.__setattr__(self, "intercept", float(self.intercept))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.slope + self.intercept

    def to_dict(self) -> dict:
        return {"slope": self.slope.tolist(), "intercept": self.intercept}


@dataclass(frozen=True)
class VerticalShiftTag:
    """Rigid motion of the epigraph: x -> x + translation, values + shift."""

    shift: float = 0.0
    translation: tuple = ()


class _NotConvex:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NotConvex"

    def __bool__(self):
        return False


NOT_CONVEX = _NotConvex()


def _check_dim(n: int):
    if n not in (1, 2):
        raise DimensionUnsupported(f"dimension {n} not supported (n must be 1 or 2)")


def _essential(slopes: np.ndarray, intercepts: np.ndarray) -> np.ndarray:
    """Indices of the pieces that attain the max on a set with interior.

    A piece is essential exactly when its lifted point (a_i, -b_i) is an
    extreme point of a cell of the lower hull.
    """
    m = len(slopes)
    if m == 1:
        return np.array([0])
    n = slopes.shape[1]
    # duplicate slopes: keep the largest intercept
    order = np.lexsort((-intercepts,) + tuple(slopes[:, k] for k in range(n - 1, -1, -1)))
    keep = [order[0]]
    for i in order[1:]:
        if np.max(np.abs(slopes[i] - slopes[keep[-1]])) > TAU_GEOM * max(1.0, np.max(np.abs(slopes[i]))):
            keep.append(i)
    keep = np.array(sorted(keep))
    if len(keep) == 1:
        return keep
    lps = LiftedPointSet(n, slopes[keep], -intercepts[keep])
    sub = geo.lower_hull(lps)
    ext: set[int] = set()
    for g in sub.generators:
        g = sorted(g)
        idx, _ = geo.hull_indices(lps.points[g])
        ext.update(g[i] for i in idx)
    # map back from the LiftedPointSet order (it preserves order of kept points)
    return keep[sorted(ext)]


class MaxAffine:
    """v = max_i (<a_i, x> + b_i), pruned to essential pieces."""

    def __init__(self, slopes, intercepts, dim: int | None = None, prune: bool = True):
        a = np.asarray(slopes, dtype=float)
        if a.ndim == 1:
            a = a.reshape(-1, 1) if dim in (None, 1) else a.reshape(-1, dim)
        b = np.asarray(intercepts, dtype=float).reshape(-1)
        if len(a) == 0:
            raise EmptyInput("MaxAffine needs at least one piece")
        if len(a) != len(b):
            raise DimensionMismatch("one intercept per slope required")
        if dim is not None and a.shape[1] != dim:
            raise DimensionMismatch(f"slopes are not in R^{dim}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite piece coefficients")
        self.dim = a.shape[1]
        if prune:
            _check_dim(self.dim)
            idx = _essential(a, b)
            a, b = a[idx], b[idx]
        self.slopes = a
        self.intercepts = b
        self._cache: dict = {}

    @classmethod
    def from_pieces(cls, pieces: Sequence[AffineFunction], dim: int | None = None) -> "MaxAffine":
        if not pieces:
            raise EmptyInput("MaxAffine needs at least one piece")
        return cls([p.slope for p in pieces], [p.intercept for p in pieces], dim)

    @property
    def pieces(self) -> list[AffineFunction]:
        return [AffineFunction(a, b) for a, b in zip(self.slopes, self.intercepts)]

    def __len__(self):
        return len(self.intercepts)

    def __call__(self, x):
        return eval_fn(self, x)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "pieces": [p.to_dict() for p in self.pieces]}

    def __repr__(self):
        return f"MaxAffine(dim={self.dim}, pieces={len(self)})"


class CellPA:
    """Affine pieces on the cells of a subdivision of a bounded polytope.

    Cells of lower dimension than the domain are dropped; on a lower
    dimensional domain slopes are projected onto its direction space so that
    the representation does not depend on the normal component.
    """

    def __init__(self, cells: Sequence[Polyhedron], slopes, intercepts, dim: int | None = None):
        cells = list(cells)
        if not cells:
            raise EmptyDomain("CellPA needs at least one cell")
        dim = cells[0].dim if dim is None else dim
        a = np.asarray(slopes, dtype=float).reshape(len(cells), dim)
        b = np.asarray(intercepts, dtype=float).reshape(-1)
        if len(b) != len(cells):
            raise DimensionMismatch("one piece per cell required")
        for c in cells:
            if c.dim != dim:
                raise DimensionMismatch("cell in wrong ambient dimension")
            if c.is_empty:
                raise EmptyDomain("empty cell")
            if not c.is_bounded:
                raise Unbounded("CellPA cells must be bounded")
        d = max(c.affine_dim for c in cells)
        keep = [i for i, c in enumerate(cells) if c.affine_dim == d]
        cells = [cells[i] for i in keep]
        a, b = a[keep].copy(), b[keep].copy()
        self.dim = dim
        self.dom = Polyhedron.from_points(np.vstack([c.vertices for c in cells]), dim)
        origin, basis = self.dom.flat
        if len(basis) < dim:
            P = basis.T @ basis
            proj = a @ P
            b = b + (a - proj) @ origin
            a = proj
        self.cells = tuple(cells)
        self.slopes = a
        self.intercepts = b
        self._cache: dict = {}

    @property
    def pieces(self) -> list[AffineFunction]:
        return [AffineFunction(a, b) for a, b in zip(self.slopes, self.intercepts)]

    @property
    def dom_dim(self) -> int:
        return self.cells[0].affine_dim

    @property
    def subdivision(self) -> Subdivision:
        if "sub" not in self._cache:
            self._cache["sub"] = Subdivision(self.dim, self.cells)
        return self._cache["sub"]

    def vertices(self) -> np.ndarray:
        return geo.unique_points(np.vstack([c.vertices for c in self.cells]))

    def __len__(self):
        return len(self.cells)

    def __call__(self, x):
        return eval_fn(self, x)

    @classmethod
    def indicator(cls, K: Polyhedron) -> "CellPA":
        return cls([K], np.zeros((1, K.dim)), [0.0])

    @classmethod
    def linear_on(cls, y, K: Polyhedron) -> "CellPA":
        """l_y + I_K."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return cls([K], y.reshape(1, -1), [0.0])

    @classmethod
    def origin_indicator(cls, dim: int) -> "CellPA":
        return cls.indicator(Polyhedron.point(np.zeros(dim)))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "pieces": [p.to_dict() for p in self.pieces],
            "cells": [{"poly": c.to_dict(), "piece": i} for i, c in enumerate(self.cells)],
        }

    def __repr__(self):
        return f"CellPA(dim={self.dim}, cells={len(self.cells)})"


@dataclass(frozen=True)
class ConeRestriction:
    """l_y + I_C for a polyhedral cone C = cone(generators) (unbounded domain).

    Only used to probe the coercive-but-not-super-coercive regime through
    bounded truncations ``l_y + I_{C cap R B}``.
    """

    y: np.ndarray
    generators: np.ndarray

    def truncation(self, R: float, ball_sides: int = 512) -> CellPA:
        n = len(self.y)
        if n == 1:
            g = np.sign(self.generators[:, 0])
            lo = 0.0 if np.all(g >= 0) else -R
            hi = 0.0 if np.all(g <= 0) else R
            K = Polyhedron.from_points([[lo], [hi]], 1)
        else:
            ang = 2 * np.pi * (np.arange(ball_sides) + 0.5) / ball_sides
            # regular polygon with the same area as the disc of radius R
            r = R * np.sqrt(2 * np.pi / (ball_sides * np.sin(2 * np.pi / ball_sides)))
            ball = Polyhedron.from_points(np.column_stack([r * np.cos(ang), r * np.sin(ang)]), 2)
            cone = Polyhedron.from_generators(np.zeros((1, 2)), self.generators, 2)
            K = geo.intersect(ball, cone)
        return CellPA.linear_on(self.y, K)


def is_cellpa(f) -> bool:
    return isinstance(f, CellPA)


# -- evaluation ---------------------------------------------------------------------

def eval_fn(f, x):
    """Evaluate at a point (returns float) or an array of points (returns array)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and (x.ndim == 0 or len(x) == f.dim)
    X = np.atleast_2d(x.reshape(-1, f.dim))
    if isinstance(f, MaxAffine):
        out = np.max(X @ f.slopes.T + f.intercepts, axis=1)
    else:
        out = np.full(len(X), np.inf)
        for c, a, b in zip(f.cells, f.slopes, f.intercepts):
            inside = c.contains(X)
            if inside.any():
                val = X[inside] @ a + b
                cur = out[inside]
                out[inside] = np.where(np.isinf(cur), val, np.maximum(cur, val))
    return float(out[0]) if single else out


# -- conjugation ---------------------------------------------------------------------

def conjugate_max_affine(v: MaxAffine) -> CellPA:
    _check_dim(v.dim)
    lps = LiftedPointSet(v.dim, v.slopes, -v.intercepts)
    sub = geo.lower_hull(lps)
    slopes, inter = [], []
    for g in sub.generators:
        g = sorted(g)
        M = np.column_stack([lps.points[g], np.ones(len(g))])
        coef, *_ = np.linalg.lstsq(M, lps.heights[g], rcond=None)
        slopes.append(coef[:-1])
        inter.append(coef[-1])
    return CellPA(sub.cells, np.array(slopes), np.array(inter), v.dim)


def conjugate_cell_pa(u: CellPA) -> MaxAffine:
    _check_dim(u.dim)
    xs, vals = [], []
    for c, a, b in zip(u.cells, u.slopes, u.intercepts):
        xs.append(c.vertices)
        vals.append(c.vertices @ a + b)
    X = np.vstack(xs)
    return MaxAffine(X, -np.concatenate(vals), u.dim)


def conjugate(f):
    return conjugate_cell_pa(f) if isinstance(f, CellPA) else conjugate_max_affine(f)


def canonicalize(f):
    """Coarsest representation (double conjugation)."""
    return conjugate(conjugate(f))


# -- scaling and sums ---------------------------------------------------------------------

def epi_scale(u, lam: float):
    """lam □ u, i.e. x -> lam u(x / lam); 0 □ u is the indicator of the origin."""
    lam = float(lam)
    if lam < 0:
        raise NegativeScale(f"epi-scale factor must be >= 0, got {lam}")
    if isinstance(u, MaxAffine):
        if lam == 0:
            return CellPA.origin_indicator(u.dim)
        return MaxAffine(u.slopes, u.intercepts * lam, u.dim, prune=False)
    if lam == 0:
        return CellPA.origin_indicator(u.dim)
    if lam == 1:
        return u
    return CellPA([c.scale(lam) for c in u.cells], u.slopes, u.intercepts * lam, u.dim)


def _sum_pair(f: MaxAffine, g: MaxAffine) -> MaxAffine:
    a = (f.slopes[:, None, :] + g.slopes[None, :, :]).reshape(-1, f.dim)
    b = (f.intercepts[:, None] + g.intercepts[None, :]).reshape(-1)
    return MaxAffine(a, b, f.dim)


def linear_combination(coeffs: Sequence[float], fns: Sequence[MaxAffine]) -> MaxAffine:
    """sum_j c_j v_j for c_j >= 0 (the zero function if all c_j vanish)."""
    if len(coeffs) != len(fns) or not fns:
        raise DimensionMismatch("need one coefficient per function")
    n = fns[0].dim
    acc = None
    for c, f in zip(coeffs, fns):
        if c < 0:
            raise NegativeScale("negative coefficient breaks convexity")
        if c == 0:
            continue
        term = MaxAffine(f.slopes * c, f.intercepts * c, n, prune=False)
        acc = term if acc is None else _sum_pair(acc, term)
    if acc is None:
        return MaxAffine(np.zeros((1, n)), [0.0], n)
    return acc


def inf_convolve(weights: Sequence[float], inputs: Sequence[CellPA]) -> CellPA:
    """Weighted inf-convolution (lam_1 □ u_1) □ ... □ (lam_m □ u_m)."""
    if len(weights) != len(inputs) or not inputs:
        raise DimensionMismatch("need one weight per input")
    _check_dim(inputs[0].dim)
    for w in weights:
        if w <= 0:
            raise NegativeScale("inf-convolution weights must be positive")
    if len(inputs) == 1:
        return epi_scale(inputs[0], weights[0])
    duals = [conjugate_cell_pa(u) for u in inputs]
    return conjugate_max_affine(linear_combination(list(weights), duals))


def translate(u: CellPA, tag: VerticalShiftTag) -> CellPA:
    x0 = np.zeros(u.dim) if len(tag.translation) == 0 else np.asarray(tag.translation, dtype=float)
    cells = [c.translate(x0) for c in u.cells]
    inter = u.intercepts - u.slopes @ x0 + tag.shift
    return CellPA(cells, u.slopes, inter, u.dim)


# -- restriction, lattice operations -------------------------------------------------

def max_affine_regions(v: MaxAffine, K: Polyhedron) -> list[tuple[int, np.ndarray]]:
    """(piece index, vertices of {piece i attains the max} cap K) for bounded K."""
    out = []
    for i in range(len(v)):
        A = v.slopes - v.slopes[i]
        b = v.intercepts[i] - v.intercepts
        mask = np.arange(len(v)) != i
        pts = geo.clip(K.vertices, A[mask], b[mask])
        if len(pts):
            out.append((i, pts))
    return out


def restrict(v, K: Polyhedron) -> CellPA:
    """v + I_K as a CellPA (K bounded)."""
    if not K.is_bounded:
        raise Unbounded("restriction needs a bounded polytope")
    if K.is_empty:
        raise EmptyDomain("restriction to the empty set")
    if isinstance(v, CellPA):
        cells, a, b = [], [], []
        for c, s, t in zip(v.cells, v.slopes, v.intercepts):
            I = geo.intersect(c, K)
            if not I.is_empty:
                cells.append(I)
                a.append(s)
                b.append(t)
        if not cells:
            raise EmptyDomain("domain does not meet K")
        return CellPA(cells, np.array(a), np.array(b), v.dim)
    regs = max_affine_regions(v, K)
    cells = [Polyhedron(K.dim, pts, np.zeros((0, K.dim))) for _, pts in regs]
    idx = [i for i, _ in regs]
    return CellPA(cells, v.slopes[idx], v.intercepts[idx], v.dim)


def pointwise_max(f, g):
    if f.dim != g.dim:
        raise DimensionMismatch("dimensions differ")
    if isinstance(f, MaxAffine) and isinstance(g, MaxAffine):
        return MaxAffine(np.vstack([f.slopes, g.slopes]), np.concatenate([f.intercepts, g.intercepts]), f.dim)
    if not (isinstance(f, CellPA) and isinstance(g, CellPA)):
        raise TypeError("pointwise_max needs two functions of the same kind")
    dom = geo.intersect(f.dom, g.dom)
    if dom.is_empty:
        raise EmptyDomain("domains are disjoint; the maximum is identically +inf")
    d = dom.affine_dim
    cells, slopes, inter = [], [], []
    for c1, a1, b1 in zip(f.cells, f.slopes, f.intercepts):
        for c2, a2, b2 in zip(g.cells, g.slopes, g.intercepts):
            I = geo.intersect(c1, c2)
            if I.is_empty or I.affine_dim < d:
                continue
            diff = I.vertices @ (a1 - a2) + (b1 - b2)
            if np.all(np.abs(diff) <= TAU_GEOM * max(1.0, abs(b1), abs(b2))):
                cells.append(I)
                slopes.append(a1)
                inter.append(b1)
                continue
            # {f-piece >= g-piece} and its complement
            for sgn, a, b in ((1.0, a1, b1), (-1.0, a2, b2)):
                A = (sgn * (a2 - a1)).reshape(1, -1)
                rhs = np.array([sgn * (b1 - b2)])
                pts = geo.clip(I.vertices, A, rhs)
                if len(pts) == 0:
                    continue
                P = Polyhedron(f.dim, pts, np.zeros((0, f.dim)))
                if P.affine_dim < d:
                    continue
                cells.append(P)
                slopes.append(a)
                inter.append(b)
    if not cells:
        # domains meet only in a lower dimensional set reached by no cell pair
        return restrict(f, dom)
    return CellPA(cells, np.array(slopes), np.array(inter), f.dim)


def _equal_region_parts(c: CellPA, f: CellPA, d: int) -> list[np.ndarray]:
    """Pieces of {c = f} as vertex arrays, assuming c <= f; only d-dimensional parts."""
    parts = []
    for c1, a1, b1 in zip(c.cells, c.slopes, c.intercepts):
        for c2, a2, b2 in zip(f.cells, f.slopes, f.intercepts):
            I = geo.intersect(c1, c2)
            if I.is_empty or I.affine_dim < d:
                continue
            # where c - f >= -tol
            tol = 1e-9 * max(1.0, float(np.max(np.abs(I.vertices))), abs(b1), abs(b2))
            A = (a2 - a1).reshape(1, -1)
            rhs = np.array([b1 - b2 + tol])
            pts = geo.clip(I.vertices, A, rhs)
            if len(pts) and geo.measure(pts, d) > 0:
                parts.append(pts)
    return parts


def _covers(c: CellPA, f: CellPA, g: CellPA) -> bool:
    """True when min(f, g) coincides with its convex envelope c on dom c."""
    d = c.dom_dim
    target = geo.measure(c.dom.vertices, d)
    Ef = _equal_region_parts(c, f, d) if f.dom_dim == d else []
    Eg = _equal_region_parts(c, g, d) if g.dom_dim == d else []
    total = sum(geo.measure(p, d) for p in Ef) + sum(geo.measure(q, d) for q in Eg)
    for p in Ef:
        P = Polyhedron(c.dim, p, np.zeros((0, c.dim)))
        for q in Eg:
            I = geo.intersect(P, Polyhedron(c.dim, q, np.zeros((0, c.dim))))
            if not I.is_empty:
                total -= geo.measure(I.vertices, d)
    if d == 0:
        return total >= 1 - 1e-12
    return abs(total - target) <= 1e-9 * max(1.0, target)


def _edge_lines(v: MaxAffine) -> list[tuple[np.ndarray, float]]:
    lines = []
    for i, j in itertools.combinations(range(len(v)), 2):
        a = v.slopes[i] - v.slopes[j]
        if np.linalg.norm(a) > 1e-12:
            lines.append((a, float(v.intercepts[j] - v.intercepts[i])))
    return lines


def _arrangement_box(fns: Sequence[MaxAffine]) -> Polyhedron:
    n = fns[0].dim
    pts = [np.zeros(n)]
    lines = [ln for f in fns for ln in _edge_lines(f)]
    for a, b in lines:
        pts.append(a * b / float(a @ a))
    if n == 2:
        for (a1, b1), (a2, b2) in itertools.combinations(lines, 2):
            M = np.array([a1, a2])
            if abs(np.linalg.det(M)) > 1e-12 * max(1.0, float(np.abs(M).max()) ** 2):
                pts.append(np.linalg.solve(M, [b1, b2]))
    P = np.array(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    margin = 1.0 + 0.1 * float(np.max(hi - lo))
    return Polyhedron.box(lo - margin, hi + margin)


def guarded_min(f, g):
    """min(f, g) when it is convex, otherwise ``NOT_CONVEX``."""
    if f.dim != g.dim:
        raise DimensionMismatch("dimensions differ")
    if isinstance(f, CellPA) and isinstance(g, CellPA):
        c = conjugate_max_affine(pointwise_max(conjugate_cell_pa(f), conjugate_cell_pa(g)))
        return c if _covers(c, f, g) else NOT_CONVEX
    if isinstance(f, MaxAffine) and isinstance(g, MaxAffine):
        try:
            fs = pointwise_max(conjugate_max_affine(f), conjugate_max_affine(g))
        except EmptyDomain:
            return NOT_CONVEX
        c = conjugate_cell_pa(fs)
        box = _arrangement_box([f, g, c])
        ok = _covers(restrict(c, box), restrict(f, box), restrict(g, box))
        return c if ok else NOT_CONVEX
    raise TypeError("guarded_min needs two functions of the same kind")


# -- comparisons and certificates ------------------------------------------------------

def convexity_defect(u: CellPA) -> float:
    """max over pieces i, cells j, vertices x of cell j of w_i(x) - w_j(x).

    Nonpositive (up to rounding) exactly when u is the max of its pieces on
    its domain, i.e. convex and continuous there.
    """
    worst = 0.0
    for c, a, b in zip(u.cells, u.slopes, u.intercepts):
        V = c.vertices
        own = V @ a + b
        others = V @ u.slopes.T + u.intercepts
        worst = max(worst, float(np.max(others - own[:, None])))
    return worst


def probe_points(f) -> np.ndarray:
    """Deterministic probe set: vertices, cell centroids and face midpoints."""
    if isinstance(f, MaxAffine):
        return probe_points(conjugate_max_affine(f))
    pts = [f.vertices()]
    pts.append(np.array([c.centroid() for c in f.cells]))
    for F in f.subdivision.faces:
        pts.append(F.poly.vertices.mean(axis=0, keepdims=True))
    return np.vstack(pts)


def same_function(f, g, tol: float = SAME_TOL) -> bool:
    """Equality of two PA functions of the same kind (values and domains)."""
    if f.dim != g.dim or type(f) is not type(g):
        return False
    if isinstance(f, MaxAffine):
        return same_function(conjugate_max_affine(f), conjugate_max_affine(g), tol)
    if geo.hausdorff_distance(f.dom, g.dom) > tol * max(1.0, float(np.abs(f.dom.vertices).max())):
        return False
    P = np.vstack([probe_points(f), probe_points(g)])
    vf, vg = eval_fn(f, P), eval_fn(g, P)
    finite = np.isfinite(vf) & np.isfinite(vg)
    if np.any(np.isfinite(vf) != np.isfinite(vg)):
        # boundary probes may fall on either side by rounding; re-test with slack
        bad = np.isfinite(vf) != np.isfinite(vg)
        if np.any(f.dom.contains(P[bad], tol=1e-7) != g.dom.contains(P[bad], tol=1e-7)):
            return False
    scale = max(1.0, float(np.max(np.abs(vf[finite]))) if finite.any() else 1.0)
    return bool(np.all(np.abs(vf[finite] - vg[finite]) <= tol * scale))


# -- local and global derived objects ---------------------------------------------------------

def subdifferential(u, x) -> Polyhedron:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(u, MaxAffine):
        vals = u.slopes @ x + u.intercepts
        top = vals.max()
        act = vals >= top - TAU_GEOM * max(1.0, abs(top))
        return Polyhedron.from_points(u.slopes[act], u.dim)
    if not u.dom.contains(x):
        raise OutsideDomain("point outside dom(u)")
    slopes = [a for c, a in zip(u.cells, u.slopes) if c.contains(x)]
    A, b = u.dom.halfspaces
    tol = geo._tol(x, b)
    tight = A[np.abs(A @ x - b) <= tol]
    return Polyhedron.from_generators(np.array(slopes), tight, u.dim)


def sample_approx(f: Callable, probes, grad: Callable | None = None, h: float = H_FD) -> MaxAffine:
    """Max of tangent planes of a smooth convex f at the probe points."""
    P = np.asarray(probes, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    n = P.shape[1]
    slopes, inter = [], []
    for p in P:
        if grad is not None:
            gvec = np.atleast_1d(np.asarray(grad(p), dtype=float))
        else:
            gvec = np.array([(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(n)])
        slopes.append(gvec)
        inter.append(float(f(p)) - float(gvec @ p))
    return MaxAffine(np.array(slopes), np.array(inter), n)


def sublevel_set(u, t: float) -> Polyhedron:
    n = u.dim
    if isinstance(u, MaxAffine):
        return Polyhedron.from_halfspaces(u.slopes, t - u.intercepts, n)
    pts = []
    for c, a, b in zip(u.cells, u.slopes, u.intercepts):
        p = geo.clip(c.vertices, a.reshape(1, -1), np.array([t - b]))
        if len(p):
            pts.append(p)
    if not pts:
        return Polyhedron.empty(n)
    return Polyhedron.from_points(np.vstack(pts), n)


@dataclass
class EpiDistanceReport:
    t_grid: list
    distances: np.ndarray
    flagged: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "t_grid": list(self.t_grid),
            "distances": [[float(x) for x in row] for row in self.distances],
            "flagged": list(self.flagged),
        }


def _hd(P: Polyhedron, Q: Polyhedron) -> float:
    if P.is_empty and Q.is_empty:
        return 0.0
    if P.is_empty or Q.is_empty:
        return np.inf
    return geo.hausdorff_distance(P, Q)


def fn_min(u) -> float:
    if isinstance(u, CellPA):
        return float(min(np.min(c.vertices @ a + b) for c, a, b in zip(u.cells, u.slopes, u.intercepts)))
    return _max_affine_min(u)


def _max_affine_min(v: MaxAffine) -> float:
    # min v = -v*(0); v*(0) finite only if 0 lies in conv of the slopes
    vs = conjugate_max_affine(v)
    val = eval_fn(vs, np.zeros(v.dim))
    return float(-val) if np.isfinite(val) else -np.inf


def epi_distance_report(seq: Sequence, limit, t_grid: Sequence[float]) -> EpiDistanceReport:
    m = fn_min(limit)
    flagged = [t for t in t_grid if abs(t - m) <= TAU_GEOM * max(1.0, abs(m))]
    limits = [sublevel_set(limit, t) for t in t_grid]
    D = np.array([[_hd(sublevel_set(u, t), L) for t, L in zip(t_grid, limits)] for u in seq])
    return EpiDistanceReport(list(t_grid), D.reshape(len(seq), len(t_grid)), flagged)


# -- serialization ---------------------------------------------------------------------

def fn_from_dict(data: dict):
    dim = int(data["dim"])
    pieces = data.get("pieces") or []
    if not pieces:
        raise EmptyInput("function without pieces")
    slopes = np.array([p["slope"] for p in pieces], dtype=float).reshape(-1, dim)
    inter = np.array([p["intercept"] for p in pieces], dtype=float)
    if "cells" in data:
        cells, idx = [], []
        for c in data["cells"]:
            cells.append(Polyhedron.from_dict(c["poly"]))
            idx.append(int(c["piece"]))
        return CellPA(cells, slopes[idx], inter[idx], dim)
    return MaxAffine(slopes, inter, dim)
