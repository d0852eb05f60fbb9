"""Hessian measures of PA convex functions and quadrature for smooth integrands.

For a PA function the generalized graph of the subdifferential splits into
products relint(F) x Q_F over the faces F of the cell complex, where Q_F is
the subdifferential on relint(F). On a product window B x C the measures are

    Theta_k = binom(n, k)^-1 * sum_{dim F = k} vol_k(F cap B) * vol_{n-k}(Q_F cap C).
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry as geo
from .convexfn import CellPA, MaxAffine, conjugate_max_affine
from .errors import (
    ArityMismatch,
    DimensionMismatch,
    DimensionUnsupported,
    SupportExceedsGrid,
    UnboundedWindow,
)
from .geometry import Polyhedron
from .valuations import TestFunction, _arrangement_vertices

MC_CHUNK = 1 << 16
TAU_PSD = 1e-6


@dataclass(frozen=True)
class GraphPiece:
    face: Polyhedron
    subdiff: Polyhedron
    k: int


@dataclass(frozen=True)
class Window:
    """Product window B x C (B on the x side, C on the y side)."""

    B: Polyhedron
    C: Polyhedron

    def __post_init__(self):
        if self.B.dim != self.C.dim:
            raise DimensionMismatch("window sides live in different dimensions")
        if not (self.B.is_bounded and self.C.is_bounded):
            raise UnboundedWindow("window sides must be bounded")

    @property
    def dim(self) -> int:
        return self.B.dim

    @classmethod
    def boxes(cls, b_lo, b_hi, c_lo, c_hi) -> "Window":
        return cls(Polyhedron.box(b_lo, b_hi), Polyhedron.box(c_lo, c_hi))

    def hat(self) -> "Window":
        return Window(self.C, self.B)

    def to_dict(self) -> dict:
        return {"B": self.B.to_dict(), "C": self.C.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Window":
        return cls(Polyhedron.from_dict(data["B"]), Polyhedron.from_dict(data["C"]))


@dataclass
class HessianMeasureTable:
    values: list
    dim: int
    description: dict = field(default_factory=dict)

    def ps_polynomial(self, s: float) -> float:
        """sum_i binom(n, i) s^i Theta_{n-i}."""
        n = self.dim
        return float(sum(math.comb(n, i) * s ** i * self.values[n - i] for i in range(n + 1)))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "values": [float(v) for v in self.values], **self.description}


def _check_dim(n: int):
    if n not in (1, 2):
        raise DimensionUnsupported("Hessian measures implemented for n <= 2")


def _normal_rays(dom: Polyhedron, x: np.ndarray) -> np.ndarray:
    A, b = dom.halfspaces
    tol = geo._tol(x, b)
    return A[np.abs(A @ x - b) <= tol]


def face_lattice(u: CellPA) -> list[GraphPiece]:
    """All graph pieces of u: cells, lower-dimensional faces, and their subdifferentials."""
    _check_dim(u.dim)
    n = u.dim
    out = []
    for c, a in zip(u.cells, u.slopes):
        rays = _normal_rays(u.dom, c.relint_point())
        Q = Polyhedron.from_generators(a.reshape(1, -1), rays, n)
        out.append(GraphPiece(c, Q, c.affine_dim))
    for F in u.subdivision.faces:
        x = F.poly.relint_point()
        slopes = u.slopes[list(F.cells)]
        Q = Polyhedron.from_generators(slopes, _normal_rays(u.dom, x), n)
        out.append(GraphPiece(F.poly, Q, F.k))
    return out


def _clip_to(P: Polyhedron, K: Polyhedron) -> np.ndarray:
    """Vertices of P cap K for bounded K (P may be unbounded)."""
    A, b = P.halfspaces
    return geo.clip(K.vertices, A, b)


def _piece_terms(pieces, window: Window):
    n = window.dim
    for gp in pieces:
        fb = _clip_to(gp.face, window.B)
        if len(fb) == 0:
            continue
        qc = _clip_to(gp.subdiff, window.C)
        if len(qc) == 0:
            continue
        yield gp, fb, qc


def _theta_from_pieces(pieces, window: Window) -> list[float]:
    n = window.dim
    theta = [0.0] * (n + 1)
    for gp, fb, qc in _piece_terms(pieces, window):
        k = gp.k
        vf = geo.measure(fb, k)
        if vf == 0:
            continue
        vq = geo.measure(qc, n - k)
        theta[k] += vf * vq
    return [t / math.comb(n, k) for k, t in enumerate(theta)]


def hessian_measure(u: CellPA, window: Window) -> HessianMeasureTable:
    """Theta_0..Theta_n of u on the product window."""
    if u.dim != window.dim:
        raise DimensionMismatch("function and window dimensions differ")
    vals = _theta_from_pieces(face_lattice(u), window)
    return HessianMeasureTable(vals, u.dim)


def max_affine_pieces(v: MaxAffine, K: Polyhedron) -> list[GraphPiece]:
    """Graph pieces of a finite PA function, truncated to the bounded region K.

    Faces are computed from v directly: regions where one piece is maximal,
    edges where two tie, and vertices of the arrangement.
    """
    n = v.dim
    _check_dim(n)
    m = len(v)
    A, b = v.slopes, v.intercepts
    out = []
    for i in range(m):
        mask = np.arange(m) != i
        pts = geo.clip(K.vertices, (A - A[i])[mask], (b[i] - b)[mask])
        if len(pts):
            out.append(GraphPiece(Polyhedron(n, pts, np.zeros((0, n))), Polyhedron.point(A[i]), n))
    if n == 2:
        seen = set()
        for i, j in itertools.combinations(range(m), 2):
            d = A[i] - A[j]
            if np.linalg.norm(d) <= 1e-12:
                continue
            mask = (np.arange(m) != i) & (np.arange(m) != j)
            H = np.vstack([(A - A[i])[mask], d, -d])
            h = np.concatenate([(b[i] - b)[mask], [b[j] - b[i], b[i] - b[j]]])
            pts = geo.clip(K.vertices, H, h)
            if len(pts) < 2 or geo.measure(pts, 1) == 0:
                continue
            mid = pts.mean(axis=0)
            vals = A @ mid + b
            act = np.nonzero(vals >= vals.max() - 1e-9 * max(1.0, abs(vals.max())))[0]
            key = tuple(act.tolist())
            if key in seen:
                continue
            seen.add(key)
            Q = Polyhedron.from_points(A[act], n)
            out.append(GraphPiece(Polyhedron(n, pts, np.zeros((0, n))), Q, 1))
    for x, slopes in _arrangement_vertices(v):
        if K.contains(x):
            out.append(GraphPiece(Polyhedron.point(x), Polyhedron.from_points(slopes, n), 0))
    return out


def hessian_measure_finite(v: MaxAffine, window: Window) -> HessianMeasureTable:
    """Theta_0..Theta_n of a finite PA function via its own face structure."""
    vals = _theta_from_pieces(max_affine_pieces(v, window.B), window)
    return HessianMeasureTable(vals, v.dim)


@dataclass
class DualityReport:
    lhs: list
    rhs: list
    discrepancy: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "discrepancy": self.discrepancy}


def duality_check(v: MaxAffine, window: Window) -> DualityReport:
    """Compare Theta_i(v, B x C) with Theta_{n-i}(v*, C x B) for all i."""
    lhs = hessian_measure_finite(v, window).values
    rhs_raw = hessian_measure(conjugate_max_affine(v), window.hat()).values
    n = v.dim
    rhs = [rhs_raw[n - i] for i in range(n + 1)]
    disc = max(abs(a - b) for a, b in zip(lhs, rhs))
    return DualityReport(lhs, rhs, float(disc))


# -- Monte-Carlo volume of P_s ------------------------------------------------------

@dataclass
class _MCPiece:
    k: int
    p: np.ndarray
    g: np.ndarray
    PL: np.ndarray
    FA: np.ndarray
    Fb: np.ndarray
    QA: np.ndarray
    Qb: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def _mc_pieces(u: CellPA, s: float, window: Window) -> list[_MCPiece]:
    n = u.dim
    out = []
    for gp, fb, qc in _piece_terms(face_lattice(u), window):
        k = gp.k
        if geo.measure(fb, k) == 0 or geo.measure(qc, n - k) == 0:
            continue
        F = Polyhedron(n, fb, np.zeros((0, n)))
        Q = Polyhedron(n, qc, np.zeros((0, n)))
        _, basis = F.flat
        PL = basis.T @ basis if len(basis) else np.zeros((n, n))
        FA, Fb = F.halfspaces
        QA, Qb = Q.halfspaces
        lo = fb.min(axis=0) + s * qc.min(axis=0)
        hi = fb.max(axis=0) + s * qc.max(axis=0)
        out.append(_MCPiece(k, fb[0], qc[0], PL, FA, Fb, QA, Qb, lo, hi))
    return out


def _count_hits(pieces: list[_MCPiece], s: float, Z: np.ndarray) -> int:
    order = np.argsort(Z[:, 0], kind="stable")
    Z = Z[order]
    hit = np.zeros(len(Z), bool)
    for pc in pieces:
        i0, i1 = np.searchsorted(Z[:, 0], [pc.lo[0] - 1e-12, pc.hi[0] + 1e-12])
        if i1 <= i0:
            continue
        W = Z[i0:i1]
        sel = np.all((W >= pc.lo - 1e-12) & (W <= pc.hi + 1e-12), axis=1) & ~hit[i0:i1]
        if not sel.any():
            continue
        idx = np.nonzero(sel)[0]
        w = W[idx] - pc.p - s * pc.g
        wl = w @ pc.PL
        x = pc.p + wl
        y = pc.g + (w - wl) / s
        ok = np.all(x @ pc.FA.T <= pc.Fb + 1e-10, axis=1) & np.all(y @ pc.QA.T <= pc.Qb + 1e-10, axis=1)
        hit[i0 + idx[ok]] = True
    return int(hit.sum())


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    samples: int
    hits: int
    box_volume: float


def ps_volume_mc(u: CellPA, s: float, window: Window, samples: int, seed: int,
                 workers: int | None = None) -> MCEstimate:
    """Monte-Carlo estimate of the n-volume of P_s = {x + s y : (x, y) in graph, in window}.

    Samples come in fixed chunks, each drawn from its own counter-based stream
    keyed by (seed, chunk index), so the result does not depend on ``workers``.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    n = u.dim
    _check_dim(n)
    pieces = _mc_pieces(u, s, window)
    if not pieces:
        return MCEstimate(0.0, 0.0, samples, 0, 0.0)
    lo = np.min([p.lo for p in pieces], axis=0)
    hi = np.max([p.hi for p in pieces], axis=0)
    box_vol = float(np.prod(hi - lo))
    chunks = [(c, min(MC_CHUNK, samples - c * MC_CHUNK)) for c in range((samples + MC_CHUNK - 1) // MC_CHUNK)]

    def run(chunk):
        c, m = chunk
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), c])))
        Z = lo + (hi - lo) * rng.random((m, n))
        return _count_hits(pieces, s, Z)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            hits = sum(ex.map(run, chunks))
    else:
        hits = sum(run(c) for c in chunks)
    p = hits / samples
    est = box_vol * p
    se = max(box_vol * math.sqrt(p * (1 - p) / samples), box_vol / samples)
    return MCEstimate(est, se, samples, hits, box_vol)


# -- mixed discriminants -----------------------------------------------------------

def mixed_discriminant(*Ms) -> np.ndarray | float:
    """Polarization of the determinant; accepts stacks of matrices (..., n, n)."""
    n = len(Ms)
    if n == 0:
        raise ArityMismatch("need at least one matrix")
    arrs = [np.asarray(M, dtype=float) for M in Ms]
    for M in arrs:
        if M.shape[-2:] != (n, n):
            raise DimensionMismatch(f"need {n} matrices of size {n}x{n}")
    total = 0.0
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            total = total + (-1) ** (n - r) * np.linalg.det(sum(arrs[j] for j in S))
    out = total / math.factorial(n)
    return float(out) if np.ndim(out) == 0 else out


def elementary_symmetric(H: np.ndarray, k: int) -> np.ndarray:
    """e_k of the eigenvalues of symmetric matrices H (..., n, n) via principal minors."""
    n = H.shape[-1]
    if k == 0:
        return np.ones(H.shape[:-2])
    if k > n:
        return np.zeros(H.shape[:-2])
    total = np.zeros(H.shape[:-2])
    for S in itertools.combinations(range(n), k):
        idx = np.ix_(S, S)
        total = total + np.linalg.det(H[(...,) + idx])
    return total


# -- smooth functions on grids ------------------------------------------------------

class SmoothGridFunction:
    """Node values of a function on the cell centres of a uniform grid over a box.

    A ghost layer of nodes outside the box supplies the stencils at the
    boundary nodes, so derivatives exist at every quadrature node.
    """

    def __init__(self, lo, hi, h: float, values: np.ndarray):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self.dim = len(self.lo)
        self.h = float(h)
        self.counts = np.rint((self.hi - self.lo) / self.h).astype(int)
        if np.any(np.abs(self.counts * self.h - (self.hi - self.lo)) > 1e-9 * (self.hi - self.lo)):
            raise ValueError("box extent must be a multiple of the grid step")
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != tuple(self.counts + 2):
            raise ValueError(f"expected node array of shape {tuple(self.counts + 2)}")

    @staticmethod
    def axes(lo, hi, h, ghost: bool = True) -> list[np.ndarray]:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        out = []
        for a, b in zip(lo, hi):
            m = int(round((b - a) / h))
            i = np.arange(-1, m + 1) if ghost else np.arange(m)
            out.append(a + (i + 0.5) * h)
        return out

    @classmethod
    def from_callable(cls, f: Callable, lo, hi, h: float) -> "SmoothGridFunction":
        """f receives an array of points of shape (N, n) and returns N values."""
        ax = cls.axes(lo, hi, h)
        mesh = np.meshgrid(*ax, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(f(pts), dtype=float).reshape(mesh[0].shape)
        return cls(lo, hi, h, vals)

    @classmethod
    def quadratic(cls, A, lo, hi, h: float, b=None, c: float = 0.0) -> "SmoothGridFunction":
        """v(x) = x^T A x / 2 + <b, x> + c."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.zeros(len(A)) if b is None else np.asarray(b, dtype=float)
        return cls.from_callable(lambda X: 0.5 * np.einsum("ij,jk,ik->i", X, A, X) + X @ b + c, lo, hi, h)

    def scaled(self, lam: float) -> "SmoothGridFunction":
        return SmoothGridFunction(self.lo, self.hi, self.h, lam * self.values)

    def combine(self, coeffs: Sequence[float], others: Sequence["SmoothGridFunction"]) -> "SmoothGridFunction":
        vals = sum(c * o.values for c, o in zip(coeffs, others))
        return SmoothGridFunction(self.lo, self.hi, self.h, vals)

    def nodes(self) -> np.ndarray:
        ax = self.axes(self.lo, self.hi, self.h, ghost=False)
        mesh = np.meshgrid(*ax, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def _shift(self, offs) -> np.ndarray:
        sl = tuple(slice(1 + o, 1 + o + c) for o, c in zip(offs, self.counts))
        return self.values[sl]

    def interior_values(self) -> np.ndarray:
        return self._shift([0] * self.dim).ravel()

    def gradient(self) -> np.ndarray:
        n, h = self.dim, self.h
        g = []
        for i in range(n):
            e = np.zeros(n, int)
            e[i] = 1
            g.append(((self._shift(e) - self._shift(-e)) / (2 * h)).ravel())
        return np.stack(g, axis=1)

    def hessian(self, warn: bool = True) -> np.ndarray:
        n, h = self.dim, self.h
        c = self._shift([0] * n)
        H = np.zeros(c.shape + (n, n))
        for i in range(n):
            e = np.zeros(n, int)
            e[i] = 1
            H[..., i, i] = (self._shift(e) - 2 * c + self._shift(-e)) / h ** 2
            for j in range(i + 1, n):
                f = np.zeros(n, int)
                f[j] = 1
                mixed = (self._shift(e + f) - self._shift(e - f) - self._shift(f - e) + self._shift(-e - f)) / (4 * h * h)
                H[..., i, j] = H[..., j, i] = mixed
        H = H.reshape(-1, n, n)
        if warn:
            lam = np.linalg.eigvalsh(H).min() if len(H) else 0.0
            tol = TAU_PSD * max(1.0, float(np.abs(self.values).max()))
            if lam < -tol:
                warnings.warn(f"stencil Hessian not positive semidefinite (min eigenvalue {lam:.3g})")
        return H

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def covers(self, lo, hi) -> bool:
        lo = np.atleast_1d(lo)
        hi = np.atleast_1d(hi)
        return bool(np.all(lo >= self.lo - 1e-12) and np.all(hi <= self.hi + 1e-12))


@dataclass(frozen=True)
class BoxIndicator:
    """1 on the closed box [lo, hi], 0 elsewhere."""

    lo: tuple
    hi: tuple

    def __call__(self, X):
        X = np.atleast_2d(X)
        return np.all((X >= np.asarray(self.lo)) & (X <= np.asarray(self.hi)), axis=1).astype(float)

    def support(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)


def _slot_eval(slot, X: np.ndarray) -> np.ndarray:
    if slot is None:
        return np.ones(len(X))
    if isinstance(slot, (int, float)):
        return np.full(len(X), float(slot))
    return np.asarray(slot(X), dtype=float).reshape(-1)


def _slot_support(slot, dim: int):
    if isinstance(slot, TestFunction) and np.isfinite(slot.rho):
        return -np.full(dim, slot.rho), np.full(dim, slot.rho)
    if isinstance(slot, BoxIndicator):
        return slot.support()
    return None


@dataclass
class TestFunction3:
    """zeta(t, x, y) = zeta_t(t) * zeta_x(x) * zeta_y(y).

    Each slot is None (constant 1), a number, a TestFunction, a BoxIndicator
    or a vectorized callable.
    """

    __test__ = False

    t: object = None
    x: object = None
    y: object = None

    def __call__(self, T, X, Y):
        return _slot_eval(self.t, np.asarray(T).reshape(-1, 1)) * _slot_eval(self.x, X) * _slot_eval(self.y, Y)


def _check_support(supp, v: SmoothGridFunction, what: str):
    if supp is None:
        return
    if not v.covers(*supp):
        raise SupportExceedsGrid(f"support of {what} is not inside the grid box")


def smooth_valuation_quad(z3: TestFunction3, i: int, v: SmoothGridFunction, normalized: bool = True) -> float:
    """Midpoint rule for the integral of zeta(v, x, grad v) [Hess v]_{n-i}.

    ``[H]_k`` is the k-th elementary symmetric function of the eigenvalues,
    divided by binom(n, k) when ``normalized`` (so that [I]_k = 1).
    """
    n = v.dim
    if not 0 <= i <= n:
        raise ValueError("index must lie in 0..n")
    _check_support(_slot_support(z3.x, n), v, "the x-slot")
    X = v.nodes()
    H = v.hessian()
    e = elementary_symmetric(H, n - i)
    if normalized:
        e = e / math.comb(n, n - i)
    w = z3(v.interior_values(), X, v.gradient())
    return float(np.sum(w * e) * v.cell_volume)


def smooth_theta(v: SmoothGridFunction, i: int, B_lo, B_hi, C_lo, C_hi) -> float:
    """Theta_i(v, B x C) for boxes B, C by quadrature."""
    z3 = TestFunction3(x=BoxIndicator(tuple(np.atleast_1d(B_lo)), tuple(np.atleast_1d(B_hi))),
                       y=BoxIndicator(tuple(np.atleast_1d(C_lo)), tuple(np.atleast_1d(C_hi))))
    return smooth_valuation_quad(z3, i, v)


def _matrix_field_eval(A, X: np.ndarray, n: int) -> np.ndarray:
    if callable(A):
        out = np.asarray(A(X), dtype=float)
    else:
        out = np.broadcast_to(np.asarray(A, dtype=float), (len(X), n, n))
    if out.shape != (len(X), n, n):
        raise DimensionMismatch("matrix field returned wrong shape")
    return out


def alesker_valuation_quad(zeta: TestFunction, i: int, fields: Sequence, v: SmoothGridFunction) -> float:
    """Midpoint rule for the integral of zeta(x) D(Hess v[i], A_1, ..., A_{n-i})."""
    n = v.dim
    if i < 0 or i + len(fields) != n:
        raise ArityMismatch(f"need {n - i} matrix fields for degree {i} in dimension {n}")
    _check_support(_slot_support(zeta, n), v, "zeta")
    X = v.nodes()
    H = v.hessian()
    mats = [H] * i + [_matrix_field_eval(A, X, n) for A in fields]
    D = mixed_discriminant(*mats)
    return float(np.sum(zeta(X) * D) * v.cell_volume)


def counterexample_eval(eta: TestFunction, v: SmoothGridFunction, sign: float = 1.0) -> float:
    """Midpoint rule for the integral of exp(sign (v - <grad v, x>)) eta(x) det Hess v.

    ``sign=+1`` is the literal integrand; ``sign=-1`` uses v*(grad v) = <grad v, x> - v
    in the exponent instead.
    """
    n = v.dim
    _check_support(_slot_support(eta, n), v, "eta")
    X = v.nodes()
    g = v.gradient()
    vals = v.interior_values()
    expo = sign * (vals - np.sum(g * X, axis=1))
    w = eta(X)
    mask = w != 0
    det = np.linalg.det(v.hessian()[mask])
    return float(np.sum(np.exp(expo[mask]) * w[mask] * det) * v.cell_volume)
