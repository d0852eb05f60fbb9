"""Exact low-dimensional convex geometry (n = 1, 2).

Polyhedra carry a V-representation (vertices plus recession rays) and/or an
H-representation (``A x <= b``); whichever is missing is derived lazily.
Bounded sets are always reduced to their canonical vertex list: counter
clockwise starting from the lexicographically smallest vertex for polygons,
sorted endpoints for segments.

All predicates use the absolute tolerance ``TAU_GEOM`` scaled by the
magnitude of the coordinates involved; inputs are expected to be of unit
order and are never rescaled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import DegenerateInput, DimensionMismatch, DimensionUnsupported, EmptyInput, Unbounded

TAU_GEOM = 1e-9

_BRUTE_FORCE_LIMIT = 40


def _tol(*arrays) -> float:
    scale = 1.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            scale = max(scale, float(np.max(np.abs(a))))
    return TAU_GEOM * scale


def _as_points(points, dim=None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        if dim is None:
            raise ValueError("cannot infer dimension of a flat point list")
        pts = pts.reshape(-1, dim)
    if dim is not None and pts.size and pts.shape[1] != dim:
        raise DimensionMismatch(f"expected points in R^{dim}, got shape {pts.shape}")
    if pts.size == 0:
        return np.zeros((0, dim if dim is not None else 0))
    return pts


def unique_points(pts: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Merge points closer than ``tol``, keeping the first representative."""
    if len(pts) <= 1:
        return pts.copy()
    tol = _tol(pts) if tol is None else tol
    if len(pts) < 64:
        keep = []
        for i, p in enumerate(pts):
            if all(np.max(np.abs(p - pts[j])) > tol for j in keep):
                keep.append(i)
        return pts[keep]
    tree = cKDTree(pts)
    drop = set()
    for i, j in sorted(tree.query_pairs(tol, p=np.inf)):
        if i not in drop:
            drop.add(j)
    return pts[[i for i in range(len(pts)) if i not in drop]]


def affine_hull(points: np.ndarray, directions: np.ndarray | None = None, tol: float | None = None):
    """Return ``(origin, basis)`` with orthonormal rows spanning the affine hull."""
    points = np.asarray(points, dtype=float)
    n = points.shape[1]
    origin = points[0]
    vecs = [points[1:] - origin]
    if directions is not None and len(directions):
        vecs.append(np.asarray(directions, dtype=float))
    vecs = np.vstack(vecs) if vecs else np.zeros((0, n))
    if not len(vecs):
        return origin, np.zeros((0, n))
    tol = _tol(points) if tol is None else tol
    _, s, vt = np.linalg.svd(vecs, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, math.sqrt(len(vecs)))))
    return origin, vt[:rank]


def _orth_complement(basis: np.ndarray, n: int) -> np.ndarray:
    if len(basis) == 0:
        return np.eye(n)
    _, _, vt = np.linalg.svd(basis, full_matrices=True)
    return vt[len(basis):]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _monotone_chain(pts: np.ndarray, tol: float) -> list[int]:
    """Indices of the strict convex hull vertices, counter clockwise."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and _cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= tol:
            lower.pop()
        lower.append(int(i))
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and _cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= tol:
            upper.pop()
        upper.append(int(i))
    return lower[:-1] + upper[:-1]


def hull_indices(pts: np.ndarray, tol: float | None = None) -> tuple[list[int], int]:
    """Canonical hull vertex indices of a finite point set and its affine dimension."""
    if len(pts) == 0:
        return [], -1
    tol = _tol(pts) if tol is None else tol
    origin, basis = affine_hull(pts, tol=tol)
    d = len(basis)
    if d == 0:
        return [0], 0
    if d == 1:
        t = (pts - origin) @ basis[0]
        lo, hi = int(np.argmin(t)), int(np.argmax(t))
        pair = sorted([lo, hi], key=lambda i: tuple(pts[i]))
        return pair, 1
    scale = max(1.0, float(np.max(np.abs(pts))))
    idx = _monotone_chain(pts, tol * scale)
    if len(idx) < 3:
        # Numerically flat polygon; fall back to a segment.
        t = (pts - origin) @ basis[0]
        lo, hi = int(np.argmin(t)), int(np.argmax(t))
        return sorted([lo, hi], key=lambda i: tuple(pts[i])), 1
    start = min(range(len(idx)), key=lambda k: tuple(pts[idx[k]]))
    return idx[start:] + idx[:start], 2


def hull_vertices(pts: np.ndarray, tol: float | None = None) -> np.ndarray:
    idx, _ = hull_indices(pts, tol)
    return pts[idx]


def _polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def measure(vertices: np.ndarray, k: int) -> float:
    """k-dimensional Hausdorff measure of conv(vertices) (canonical vertex list)."""
    if len(vertices) == 0:
        return 0.0
    _, basis = affine_hull(vertices)
    d = len(basis)
    if d < k:
        return 0.0
    if d > k:
        return math.inf
    if k == 0:
        return 1.0
    if k == 1:
        return float(np.max(np.linalg.norm(vertices[:, None, :] - vertices[None, :, :], axis=-1)))
    if vertices.shape[1] == 2:
        return _polygon_area(vertices)
    raise DimensionUnsupported("measure of 2-dimensional sets is implemented in R^2 only")


def clip(points: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Intersect conv(points) with ``{x : A x <= b}``; returns hull vertices (may be empty).

    Dimension agnostic: a halfspace cut of conv(S) is the hull of the points of
    S on the inner side together with crossings of segments joining points
    strictly on opposite sides.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return pts
    tol = _tol(pts, b) if tol is None else tol
    for a, beta in zip(A, b):
        s = pts @ a - beta
        inside = s <= tol
        if inside.all():
            continue
        if not inside.any():
            return pts[:0]
        inner = pts[s < -tol]
        outer = pts[s > tol]
        si, so = s[s < -tol], s[s > tol]
        parts = [pts[inside]]
        if len(inner) and len(outer):
            t = si[:, None] / (si[:, None] - so[None, :])
            cross = inner[:, None, :] + t[..., None] * (outer[None, :, :] - inner[:, None, :])
            parts.append(cross.reshape(-1, pts.shape[1]))
        pts = np.vstack(parts)
        pts = hull_vertices(unique_points(pts, tol), tol)
    return pts


def _halfspaces_from_generators(V: np.ndarray, R: np.ndarray, n: int, tol: float):
    """H-representation of conv(V) + cone(R) for n <= 2 (brute-force facet search)."""
    A: list[np.ndarray] = []
    b: list[float] = []
    origin, basis = affine_hull(V, R if len(R) else None, tol=tol)
    d = len(basis)
    if d < n:
        for e in _orth_complement(basis, n):
            c = float(e @ origin)
            A += [e, -e]
            b += [c, -c]
    if d == 1:
        u = basis[0]
        for s in (u, -u):
            if len(R) and np.any(R @ s > tol):
                continue
            A.append(s)
            b.append(float(np.max(V @ s)))
    elif d == 2:
        cands = []
        for i, j in combinations(range(len(V)), 2):
            e = V[j] - V[i]
            cands.append(np.array([-e[1], e[0]]))
        for r in R:
            cands.append(np.array([-r[1], r[0]]))
        seen: list[np.ndarray] = []
        for c in cands:
            nrm = np.linalg.norm(c)
            if nrm <= tol:
                continue
            c = c / nrm
            for a in (c, -c):
                if len(R) and np.any(R @ a > tol):
                    continue
                vals = V @ a
                top = float(vals.max())
                tight_v = int(np.sum(vals >= top - tol))
                tight_r = bool(len(R)) and bool(np.any(np.abs(R @ a) <= tol))
                if tight_v >= 2 or (tight_v >= 1 and tight_r):
                    if any(np.max(np.abs(a - s)) <= 1e-9 for s in seen):
                        continue
                    seen.append(a)
                    A.append(a)
                    b.append(top)
    if not A:
        return np.zeros((0, n)), np.zeros(0)
    return np.array(A), np.array(b)


def _normalize_rays(R: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if len(R) == 0:
        return R.reshape(0, R.shape[1] if R.ndim == 2 else 0)
    norms = np.linalg.norm(R, axis=1)
    R = R[norms > tol] / norms[norms > tol, None]
    return unique_points(R, 1e-9) if len(R) else R


def _generators_from_halfspaces(A: np.ndarray, b: np.ndarray, n: int, tol: float):
    """V-representation of ``{A x <= b}`` for n <= 2; returns (V, R, empty)."""
    if n == 1:
        lo, hi = -math.inf, math.inf
        for a, beta in zip(A[:, 0], b):
            if abs(a) <= 1e-15:
                if beta < -tol:
                    return None, None, True
            elif a > 0:
                hi = min(hi, beta / a)
            else:
                lo = max(lo, beta / a)
        if lo > hi + tol:
            return None, None, True
        if lo > hi:
            lo = hi = 0.5 * (lo + hi)
        verts, rays = [], []
        if math.isfinite(lo):
            verts.append([lo])
        else:
            rays.append([-1.0])
        if math.isfinite(hi):
            if not (math.isfinite(lo) and hi - lo <= tol):
                verts.append([hi])
        else:
            rays.append([1.0])
        if not verts:
            verts.append([0.0])
        return np.array(verts), np.array(rays).reshape(-1, 1), False
    if n != 2:
        raise DimensionUnsupported("H-to-V conversion implemented for n <= 2")
    pts = []
    for i, j in combinations(range(len(A)), 2):
        M = np.array([A[i], A[j]])
        if abs(np.linalg.det(M)) <= 1e-12 * max(1.0, np.linalg.norm(M) ** 2):
            continue
        pts.append(np.linalg.solve(M, [b[i], b[j]]))
    pts = np.array(pts).reshape(-1, 2)
    if len(pts):
        pts = pts[np.all(pts @ A.T <= b + tol, axis=1)]
    cand = [np.array(v) for v in ([1, 0], [-1, 0], [0, 1], [0, -1])]
    for a in A:
        if np.linalg.norm(a) > 1e-15:
            cand += [np.array([-a[1], a[0]]), np.array([a[1], -a[0]]), -a]
    rays = [r / np.linalg.norm(r) for r in cand if np.all(A @ (r / np.linalg.norm(r)) <= 1e-9)]
    rays = _normalize_rays(np.array(rays).reshape(-1, 2))
    if len(pts) == 0:
        if len(A) == 0:
            return np.zeros((1, 2)), rays, False
        res = linprog(np.zeros(2), A_ub=A, b_ub=b + tol, bounds=[(None, None)] * 2, method="highs")
        if res.status != 0:
            return None, None, True
        pts = res.x.reshape(1, 2)
    elif len(rays) == 0:
        pts = hull_vertices(unique_points(pts, tol), tol)
    else:
        pts = unique_points(pts, tol)
    return pts, rays, False


class Polyhedron:
    """A convex polyhedron in R^n (n <= 2; the API carries n for a future n = 3).

    Construct through the classmethods; ``vertices``/``rays`` and
    ``halfspaces`` are derived from each other on demand.
    """

    def __init__(self, dim: int, vertices=None, rays=None, halfspaces=None, *, empty: bool = False):
        self.dim = int(dim)
        self._empty = empty
        self._V = None if vertices is None else np.asarray(vertices, dtype=float).reshape(-1, self.dim)
        self._R = None if rays is None else np.asarray(rays, dtype=float).reshape(-1, self.dim)
        if halfspaces is not None:
            A, b = halfspaces
            self._A = np.asarray(A, dtype=float).reshape(-1, self.dim)
            self._b = np.asarray(b, dtype=float).reshape(-1)
        else:
            self._A = self._b = None
        if not empty and self._V is None and self._A is None:
            raise ValueError("Polyhedron needs a V- or H-representation")

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_points(cls, points, dim: int | None = None) -> "Polyhedron":
        pts = _as_points(points, dim)
        dim = pts.shape[1] if dim is None else dim
        if len(pts) == 0:
            return cls.empty(dim)
        tol = _tol(pts)
        return cls(dim, hull_vertices(unique_points(pts, tol), tol), np.zeros((0, dim)))

    @classmethod
    def from_generators(cls, vertices, rays, dim: int | None = None) -> "Polyhedron":
        V = _as_points(vertices, dim)
        dim = V.shape[1] if dim is None else dim
        R = _normalize_rays(_as_points(rays, dim)) if len(np.asarray(rays)) else np.zeros((0, dim))
        if len(R) == 0:
            return cls.from_points(V, dim)
        return cls(dim, unique_points(V), R)

    @classmethod
    def from_halfspaces(cls, A, b, dim: int | None = None) -> "Polyhedron":
        A = np.asarray(A, dtype=float)
        dim = A.shape[1] if dim is None else dim
        A = A.reshape(-1, dim)
        b = np.asarray(b, dtype=float).reshape(-1)
        V, R, empty = _generators_from_halfspaces(A, b, dim, _tol(b))
        if empty:
            return cls.empty(dim)
        if len(R) == 0:
            return cls(dim, V, R)
        return cls(dim, V, R, (A, b))

    @classmethod
    def box(cls, lo, hi) -> "Polyhedron":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        n = len(lo)
        if n == 1:
            pts = np.array([[lo[0]], [hi[0]]])
        elif n == 2:
            pts = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        else:
            raise DimensionUnsupported("boxes implemented for n <= 2")
        return cls.from_points(pts, n)

    @classmethod
    def point(cls, p) -> "Polyhedron":
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return cls(len(p), p.reshape(1, -1), np.zeros((0, len(p))))

    @classmethod
    def empty(cls, dim: int) -> "Polyhedron":
        return cls(dim, np.zeros((0, dim)), np.zeros((0, dim)), empty=True)

    # -- representations ----------------------------------------------------
    @property
    def is_empty(self) -> bool:
        if self._empty:
            return True
        if self._V is None:
            self._fill_vrep()
        return self._empty

    def _fill_vrep(self):
        V, R, empty = _generators_from_halfspaces(self._A, self._b, self.dim, _tol(self._b))
        if empty:
            self._empty = True
            self._V = np.zeros((0, self.dim))
            self._R = np.zeros((0, self.dim))
        else:
            self._V, self._R = V, R

    @property
    def vertices(self) -> np.ndarray:
        if self._V is None:
            self._fill_vrep()
        return self._V

    @property
    def rays(self) -> np.ndarray:
        if self._V is None:
            self._fill_vrep()
        return self._R if self._R is not None else np.zeros((0, self.dim))

    @property
    def is_bounded(self) -> bool:
        return len(self.rays) == 0

    @property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        if self._A is None:
            if self.is_empty:
                self._A = np.zeros((1, self.dim))
                self._b = np.array([-1.0])
            else:
                V, R = self.vertices, self.rays
                self._A, self._b = _halfspaces_from_generators(V, R, self.dim, _tol(V))
        return self._A, self._b

    @cached_property
    def affine_dim(self) -> int:
        if self.is_empty:
            return -1
        _, basis = affine_hull(self.vertices, self.rays if len(self.rays) else None)
        return len(basis)

    @cached_property
    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """``(origin, basis)`` of the affine hull."""
        return affine_hull(self.vertices, self.rays if len(self.rays) else None)

    def centroid(self) -> np.ndarray:
        """Vertex average (a relative-interior point for bounded sets)."""
        if not self.is_bounded:
            raise Unbounded("centroid of an unbounded polyhedron")
        return self.vertices.mean(axis=0)

    def relint_point(self) -> np.ndarray:
        p = self.vertices.mean(axis=0)
        if len(self.rays):
            p = p + self.rays.sum(axis=0)
        return p

    def contains(self, x, tol: float | None = None) -> np.ndarray | bool:
        A, b = self.halfspaces
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x.reshape(-1, self.dim)
        tol = _tol(X, b) if tol is None else tol
        ok = np.all(X @ A.T <= b + tol, axis=1) if len(A) else np.ones(len(X), bool)
        return bool(ok[0]) if single else ok

    def translate(self, t) -> "Polyhedron":
        if self.is_empty:
            return self
        t = np.asarray(t, dtype=float)
        return Polyhedron(self.dim, self.vertices + t, self.rays.copy())

    def scale(self, lam: float) -> "Polyhedron":
        if self.is_empty:
            return self
        if lam == 0:
            return Polyhedron.point(np.zeros(self.dim))
        return Polyhedron(self.dim, self.vertices * lam, self.rays.copy())

    def to_dict(self) -> dict:
        A, b = self.halfspaces
        return {
            "dim": self.dim,
            "vertices": self.vertices.tolist(),
            "rays": self.rays.tolist(),
            "halfspaces": [{"normal": a.tolist(), "offset": float(c)} for a, c in zip(A, b)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polyhedron":
        dim = int(data["dim"])
        verts = data.get("vertices") or []
        rays = data.get("rays") or []
        if verts:
            return cls.from_generators(np.array(verts, float).reshape(-1, dim),
                                       np.array(rays, float).reshape(-1, dim), dim)
        hs = data.get("halfspaces") or []
        if not hs:
            return cls.empty(dim)
        A = np.array([h["normal"] for h in hs], float).reshape(-1, dim)
        b = np.array([h["offset"] for h in hs], float)
        return cls.from_halfspaces(A, b, dim)

    def __repr__(self) -> str:
        if self.is_empty:
            return f"Polyhedron(dim={self.dim}, empty)"
        return f"Polyhedron(dim={self.dim}, vertices={self.vertices.tolist()}, rays={self.rays.tolist()})"


# -- operations ---------------------------------------------------------------

def volume(P: Polyhedron) -> float:
    """n-dimensional Lebesgue measure of a bounded polyhedron."""
    if P.is_empty:
        return 0.0
    if not P.is_bounded:
        raise Unbounded("volume of an unbounded polyhedron")
    if P.affine_dim < P.dim:
        return 0.0
    return measure(P.vertices, P.dim)


def volume_k(P: Polyhedron, k: int) -> float:
    """k-dimensional Hausdorff measure; ``inf`` when dim(aff P) > k."""
    if P.is_empty:
        return 0.0
    if not P.is_bounded:
        if P.affine_dim >= k and k > 0:
            raise Unbounded("measure of an unbounded polyhedron")
    return measure(P.vertices, k)


def intersect(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    if P.dim != Q.dim:
        raise DimensionMismatch("ambient dimensions differ")
    if P.is_empty or Q.is_empty:
        return Polyhedron.empty(P.dim)
    if P.is_bounded or Q.is_bounded:
        bounded, other = (P, Q) if P.is_bounded else (Q, P)
        A, b = other.halfspaces
        pts = clip(bounded.vertices, A, b)
        if len(pts) == 0:
            return Polyhedron.empty(P.dim)
        return Polyhedron(P.dim, pts, np.zeros((0, P.dim)))
    A1, b1 = P.halfspaces
    A2, b2 = Q.halfspaces
    return Polyhedron.from_halfspaces(np.vstack([A1, A2]), np.concatenate([b1, b2]), P.dim)


def point_distance(x: np.ndarray, P: Polyhedron) -> float:
    """Euclidean distance from a point to a bounded nonempty polyhedron."""
    V = P.vertices
    if P.affine_dim == 0:
        return float(np.linalg.norm(x - V[0]))
    if P.affine_dim == 1:
        return _segment_distance(x, V[0], V[-1])
    if P.contains(x, tol=0.0):
        return 0.0
    return min(_segment_distance(x, V[i], V[(i + 1) % len(V)]) for i in range(len(V)))


def _segment_distance(x, p, q) -> float:
    d = q - p
    dd = float(d @ d)
    t = 0.0 if dd == 0 else min(1.0, max(0.0, float((x - p) @ d) / dd))
    return float(np.linalg.norm(x - (p + t * d)))


def hausdorff_distance(P: Polyhedron, Q: Polyhedron) -> float:
    if P.dim != Q.dim:
        raise DimensionMismatch("ambient dimensions differ")
    if P.is_empty or Q.is_empty:
        raise EmptyInput("Hausdorff distance needs nonempty sets")
    if not (P.is_bounded and Q.is_bounded):
        raise Unbounded("Hausdorff distance needs bounded sets")
    d1 = max(point_distance(v, Q) for v in P.vertices)
    d2 = max(point_distance(v, P) for v in Q.vertices)
    return max(d1, d2)


def minkowski_sum(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    if P.dim != Q.dim:
        raise DimensionMismatch("ambient dimensions differ")
    if not (P.is_bounded and Q.is_bounded):
        raise Unbounded("Minkowski sum implemented for bounded polytopes")
    if P.dim > 2:
        raise DimensionUnsupported("Minkowski sum implemented for n <= 2")
    if P.is_empty or Q.is_empty:
        return Polyhedron.empty(P.dim)
    sums = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, P.dim)
    return Polyhedron.from_points(sums, P.dim)


def convex_union(P: Polyhedron, Q: Polyhedron) -> Polyhedron | None:
    """conv(P u Q) if P u Q is itself convex, else None."""
    H = Polyhedron.from_points(np.vstack([P.vertices, Q.vertices]), P.dim)
    d = H.affine_dim
    if d <= 0:
        return H
    lhs = measure(H.vertices, d)
    I = intersect(P, Q)
    rhs = measure(P.vertices, d) + measure(Q.vertices, d) - (measure(I.vertices, d) if not I.is_empty else 0.0)
    if abs(lhs - rhs) <= 1e-9 * max(1.0, lhs):
        return H
    return None


# -- regular subdivisions ----------------------------------------------------------

@dataclass(frozen=True)
class LiftedPointSet:
    """Points a_i in R^n with heights; coincident points keep the lowest height."""

    dim: int
    points: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points, self.dim)
        h = np.asarray(self.heights, dtype=float).reshape(-1)
        if len(pts) != len(h):
            raise ValueError("one height per point required")
        tol = _tol(pts)
        order = np.argsort(h, kind="stable")
        keep: list[int] = []
        if len(pts) < 64:
            for i in order:
                if all(np.max(np.abs(pts[i] - pts[j])) > tol for j in keep):
                    keep.append(int(i))
        else:
            tree = cKDTree(pts)
            taken = np.zeros(len(pts), bool)
            for i in order:
                if taken[i]:
                    continue
                keep.append(int(i))
                taken[tree.query_ball_point(pts[i], tol, p=np.inf)] = True
        keep.sort()
        object.__setattr__(self, "points", pts[keep])
        object.__setattr__(self, "heights", h[keep])


@dataclass(frozen=True)
class Face:
    poly: Polyhedron
    cells: tuple[int, ...]
    k: int


@dataclass(frozen=True, eq=False)
class Subdivision:
    """A polytopal partition: cells with pairwise disjoint relative interiors."""

    dim: int
    cells: tuple[Polyhedron, ...]
    generators: tuple[frozenset, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def cell_dim(self) -> int:
        return self.cells[0].affine_dim if self.cells else -1

    @property
    def faces(self) -> list[Face]:
        """Faces of dimension below the cell dimension, with incident cells."""
        if "faces" not in self._cache:
            self._cache["faces"] = _enumerate_faces(self.cells, self.dim)
        return self._cache["faces"]

    @property
    def vertices(self) -> np.ndarray:
        return np.array([f.poly.vertices[0] for f in self.faces if f.k == 0]).reshape(-1, self.dim)


def _enumerate_faces(cells, n) -> list[Face]:
    if not cells:
        return []
    d = cells[0].affine_dim
    allv = np.vstack([c.vertices for c in cells])
    tol = _tol(allv)
    gv = unique_points(allv, tol)
    if d == 0:
        return []
    tree = cKDTree(gv)

    def vid(p):
        dist, i = tree.query(p, p=np.inf)
        return int(i)

    vert_cells: dict[int, set] = {i: set() for i in range(len(gv))}
    faces: list[Face] = []
    if d == 1:
        for ci, c in enumerate(cells):
            for p in c.vertices:
                vert_cells[vid(p)].add(ci)
        for i, inc in vert_cells.items():
            if inc:
                faces.append(Face(Polyhedron.point(gv[i]), tuple(sorted(inc)), 0))
        return faces
    # d == 2: split every cell edge at global vertices lying on it.
    edge_cells: dict[tuple[int, int], set] = {}
    for ci, c in enumerate(cells):
        V = c.vertices
        m = len(V)
        for j in range(m):
            p, q = V[j], V[(j + 1) % m]
            e = q - p
            L2 = float(e @ e)
            t = (gv - p) @ e / L2
            foot = p + t[:, None] * e
            on = (np.max(np.abs(gv - foot), axis=1) <= tol) & (t >= -1e-12) & (t <= 1 + 1e-12)
            ids = np.nonzero(on)[0]
            ids = ids[np.argsort(t[ids])]
            for k in ids:
                vert_cells[int(k)].add(ci)
            for a, b in zip(ids[:-1], ids[1:]):
                key = (int(min(a, b)), int(max(a, b)))
                edge_cells.setdefault(key, set()).add(ci)
    for (a, b), inc in edge_cells.items():
        faces.append(Face(Polyhedron.from_points(gv[[a, b]], n), tuple(sorted(inc)), 1))
    for i, inc in vert_cells.items():
        if inc:
            faces.append(Face(Polyhedron.point(gv[i]), tuple(sorted(inc)), 0))
    return faces


def _lower_hull_1d(t: np.ndarray, h: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(t)
    chain: list[int] = []
    for i in order:
        while len(chain) >= 2:
            o, a = chain[-2], chain[-1]
            lam = (t[a] - t[o]) / (t[i] - t[o])
            if h[a] - (h[o] + lam * (h[i] - h[o])) >= -tol:
                chain.pop()
            else:
                break
        chain.append(int(i))
    cells = []
    for o, a in zip(chain[:-1], chain[1:]):
        lam = (t - t[o]) / (t[a] - t[o])
        on = (lam >= -1e-12) & (lam <= 1 + 1e-12) & (np.abs(h - (h[o] + lam * (h[a] - h[o]))) <= tol)
        cells.append(np.nonzero(on)[0])
    return cells


def _plane_tight_sets(A, h, planes, tol):
    """Tight index sets of the planes that support the lifted points from below."""
    sets = []
    for start in range(0, len(planes), 2048):
        P = planes[start:start + 2048]
        R = h[None, :] - P[:, :2] @ A.T - P[:, 2:3]
        valid = R.min(axis=1) >= -tol
        tight = np.abs(R[valid]) <= tol
        sets.append(tight)
    if not sets:
        return np.zeros((0, len(A)), bool)
    T = np.vstack(sets)
    T = T[T.sum(axis=1) >= 3]
    if len(T) == 0:
        return T
    T = np.unique(T, axis=0)
    # Drop sets strictly contained in another one (near-coplanar duplicates).
    members = [np.nonzero(r)[0] for r in T]
    by_point: dict[int, list[int]] = {}
    for ci, mem in enumerate(members):
        for p in mem:
            by_point.setdefault(int(p), []).append(ci)
    keep = []
    for ci, mem in enumerate(members):
        sm = set(mem.tolist())
        dominated = any(
            cj != ci and len(members[cj]) > len(mem) and sm.issubset(members[cj].tolist())
            for cj in by_point[int(mem[0])]
        )
        if not dominated:
            keep.append(ci)
    return T[keep]


def _lower_hull_2d(A: np.ndarray, h: np.ndarray, tol: float) -> list[np.ndarray]:
    m = len(A)
    # All lifted points coplanar: a single cell.
    M = np.column_stack([A, np.ones(m)])
    coef, *_ = np.linalg.lstsq(M, h, rcond=None)
    if np.max(np.abs(M @ coef - h)) <= tol:
        return [np.arange(m)]
    planes = None
    if m > _BRUTE_FORCE_LIMIT:
        try:
            hull = ConvexHull(np.column_stack([A, h]))
            eq = hull.equations
            low = eq[:, 2] < -1e-12
            eq = eq[low]
            planes = np.column_stack([-eq[:, :2] / eq[:, 2:3], -eq[:, 3] / eq[:, 2]])
        except QhullError:
            planes = None
    if planes is None:
        idx = np.array(list(combinations(range(m), 3)))
        Ms = np.concatenate([A[idx], np.ones(idx.shape + (1,))], axis=2)
        det = np.linalg.det(Ms)
        ok = np.abs(det) > 1e-12 * max(1.0, float(np.max(np.abs(A)))) ** 2
        planes = np.linalg.solve(Ms[ok], h[idx[ok]][..., None])[..., 0]
    T = _plane_tight_sets(A, h, planes, tol)
    return [np.nonzero(r)[0] for r in T]


def lower_hull(pts: LiftedPointSet) -> Subdivision:
    """Regular subdivision of conv{a_i} induced by the lower hull of the lifted points.

    Ties keep the coarse cell: every lifted point on a supporting plane is a
    generator of that cell. Collinear configurations in the plane yield a
    subdivision of a segment; a single point yields a one-point cell.
    """
    n = pts.dim
    if n >= 3:
        raise DimensionUnsupported("lower_hull implemented for n <= 2")
    A, h = pts.points, pts.heights
    if len(A) == 0:
        raise DegenerateInput("lower_hull needs at least one point")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(h))):
        raise DegenerateInput("non-finite lifted points")
    tol_a = _tol(A)
    tol_h = TAU_GEOM * max(1.0, float(np.max(np.abs(h))), float(np.max(np.abs(A))))
    origin, basis = affine_hull(A, tol=tol_a)
    d = len(basis)
    if d == 0:
        return Subdivision(n, (Polyhedron.point(A[0]),), (frozenset([0]),))
    if d == 1:
        t = (A - origin) @ basis[0]
        groups = _lower_hull_1d(t, h, tol_h)
    else:
        groups = _lower_hull_2d(A, h, tol_h)
    cells = tuple(Polyhedron.from_points(A[g], n) for g in groups)
    sub = Subdivision(n, cells, tuple(frozenset(int(i) for i in g) for g in groups))
    total = sum(measure(c.vertices, d) for c in cells)
    ref = measure(hull_vertices(A, tol_a), d)
    if abs(total - ref) > 1e-7 * max(1.0, ref):
        raise DegenerateInput(f"lower hull cells do not tile the hull ({total} vs {ref})")
    return sub
