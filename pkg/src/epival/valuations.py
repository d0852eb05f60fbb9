"""Valuations on piecewise-affine convex functions.

The central example integrates a test function of the gradient over the
domain; on a PA function the integral is an exact finite sum over cells.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import geometry as geo
from .convexfn import CellPA, MaxAffine, conjugate_cell_pa, conjugate_max_affine
from .errors import DimensionMismatch, DimensionUnsupported, OracleFailure, ZeroWeight
from .geometry import Polyhedron


def _parse_exponent(key, dim: int) -> tuple[int, ...]:
    if isinstance(key, str):
        parts = [p for p in key.replace(" ", "").split(",") if p != ""]
        exps = tuple(int(p) for p in parts)
    else:
        exps = tuple(int(e) for e in np.atleast_1d(key))
    if len(exps) != dim or any(e < 0 for e in exps):
        raise ValueError(f"bad monomial exponent {key!r} for dimension {dim}")
    return exps


class TestFunction:
    """zeta(y) = q(y) * (1 - |y|^2 / rho^2)_+^k with a polynomial q.

    ``poly`` maps exponent tuples (or strings like ``"2,0"``) to coefficients.
    """

    __test__ = False  # not a pytest class

    def __init__(self, dim: int, poly: dict, rho: float, k: int = 1):
        if rho <= 0:
            raise ValueError("support radius must be positive")
        if int(k) < 1:
            raise ValueError("smoothness exponent must be >= 1")
        self.dim = int(dim)
        self.poly = {_parse_exponent(e, self.dim): float(c) for e, c in poly.items()}
        self.rho = float(rho)
        self.k = int(k)
        self._callable: Callable | None = None

    @classmethod
    def constant(cls, dim: int, c: float = 1.0, rho: float = 10.0, k: int = 1) -> "TestFunction":
        return cls(dim, {(0,) * dim: c}, rho, k)

    @classmethod
    def unchecked(cls, dim: int, fn: Callable, rho: float = math.inf) -> "TestFunction":
        """Wrap an arbitrary vectorized callable; the support radius is not verified."""
        obj = cls.__new__(cls)
        obj.dim, obj.poly, obj.rho, obj.k = int(dim), {}, float(rho), 0
        obj._callable = fn
        return obj

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        single = y.ndim <= 1
        Y = np.atleast_2d(y.reshape(-1, self.dim))
        if self._callable is not None:
            out = np.asarray(self._callable(Y), dtype=float).reshape(-1)
        else:
            q = np.zeros(len(Y))
            for e, c in self.poly.items():
                q += c * np.prod(Y ** np.array(e), axis=1)
            r2 = np.sum(Y * Y, axis=1) / self.rho ** 2
            out = q * np.clip(1.0 - r2, 0.0, None) ** self.k
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        if self._callable is not None:
            raise ValueError("unchecked test functions cannot be serialized")
        return {
            "dim": self.dim,
            "poly": {",".join(str(i) for i in e): c for e, c in sorted(self.poly.items())},
            "rho": self.rho,
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestFunction":
        return cls(int(data["dim"]), data["poly"], float(data["rho"]), int(data.get("k", 1)))

    def __repr__(self):
        if self._callable is not None:
            return f"TestFunction.unchecked(dim={self.dim})"
        return f"TestFunction(dim={self.dim}, poly={self.poly}, rho={self.rho}, k={self.k})"


@dataclass
class ValuationOracle:
    """A real functional on PA convex functions with caller-asserted metadata.

    ``domain`` is ``"cellpa"`` (super-coercive functions) or ``"maxaffine"``
    (finite functions).
    """

    evaluator: Callable
    claims_epi_translation_invariant: bool = True
    claims_continuous: bool = True
    claimed_degree: int | None = None
    domain: str = "cellpa"
    name: str = "oracle"
    dual: bool = False

    def __call__(self, f) -> float:
        try:
            val = self.evaluator(f)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            if isinstance(exc, OracleFailure):
                raise
            raise OracleFailure(f"{self.name} failed: {exc}") from exc
        return float(val)


def _check(zeta: TestFunction, f):
    if zeta.dim != f.dim:
        raise DimensionMismatch(f"test function on R^{zeta.dim}, function on R^{f.dim}")


def zeta_valuation(zeta: TestFunction, u: CellPA) -> float:
    """Sum over cells of vol(cell) * zeta(slope)."""
    _check(zeta, u)
    if u.dom_dim < u.dim:
        return 0.0
    vols = np.array([geo.volume(c) for c in u.cells])
    return float(np.dot(vols, zeta(u.slopes)))


def _arrangement_vertices(v: MaxAffine) -> list[tuple[np.ndarray, np.ndarray]]:
    """Points x where the active slopes of v span a full-dimensional set.

    Returns (x, active slope array) pairs, found by solving w_i = w_j (= w_k)
    over all pairs (triples) of pieces and keeping maximal points.
    """
    n = v.dim
    if n not in (1, 2):
        raise DimensionUnsupported("dual evaluation implemented for n <= 2")
    m = len(v)
    if m <= n:
        return []
    A, b = v.slopes, v.intercepts
    found: list[np.ndarray] = []
    out = []
    scale = max(1.0, float(np.abs(A).max()), float(np.abs(b).max()))
    for S in itertools.combinations(range(m), n + 1):
        # <a_i - a_0, x> = b_0 - b_i
        M = A[list(S[1:])] - A[S[0]]
        if abs(np.linalg.det(M)) <= 1e-12 * scale ** n:
            continue
        x = np.linalg.solve(M, b[S[0]] - b[list(S[1:])])
        vals = A @ x + b
        top = vals.max()
        tol = 1e-9 * max(scale, float(np.abs(x).max()) * scale)
        if vals[S[0]] < top - tol:
            continue
        if any(np.max(np.abs(x - y)) <= 1e-9 * max(1.0, float(np.abs(x).max())) for y in found):
            continue
        found.append(x)
        out.append((x, A[vals >= top - tol]))
    return out


def dual_zeta_valuation(zeta: TestFunction, v: MaxAffine, check: bool = False) -> float:
    """Sum over vertices x of v of zeta(x) * vol(subdifferential of v at x)."""
    _check(zeta, v)
    total = 0.0
    for x, slopes in _arrangement_vertices(v):
        vol = geo.volume(Polyhedron.from_points(slopes, v.dim))
        total += zeta(x) * vol
    if check:
        ref = zeta_valuation(zeta, conjugate_max_affine(v))
        if abs(ref - total) > 1e-9 * max(1.0, abs(ref)):
            raise OracleFailure(f"dual evaluation mismatch: {total} vs {ref}")
    return float(total)


def zeta_oracle(zeta: TestFunction, name: str = "zeta") -> ValuationOracle:
    return ValuationOracle(
        lambda u: zeta_valuation(zeta, u),
        claims_epi_translation_invariant=True,
        claims_continuous=True,
        claimed_degree=zeta.dim,
        domain="cellpa",
        name=name,
    )


def dual_wrap(Z: ValuationOracle) -> ValuationOracle:
    """Z* with Z*(f) = Z(f*), mapping between the two function classes."""
    if Z.domain == "cellpa":
        ev = lambda v: Z.evaluator(conjugate_max_affine(v))  # noqa: E731
        dom = "maxaffine"
    else:
        ev = lambda u: Z.evaluator(conjugate_cell_pa(u))  # noqa: E731
        dom = "cellpa"
    return replace(Z, evaluator=ev, domain=dom, name=f"dual({Z.name})", dual=not Z.dual)


def body_valuation(Z: ValuationOracle, y, K: Polyhedron) -> float:
    """Z(l_y + I_K)."""
    return Z(CellPA.linear_on(y, K))


@dataclass
class CylinderWitness:
    function: CellPA
    value: float
    predicted: float
    volume: float


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def cylinder_witness(zeta: TestFunction, y) -> CylinderWitness:
    """l_y + I_C with C a cylinder of height 1/|zeta(y)| in the direction of y
    over the unit ball of the orthogonal complement.

    The value is sign(zeta(y)) times the volume of that unit ball.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = len(y)
    z = zeta(y)
    if z == 0:
        raise ZeroWeight("test function vanishes at y")
    h = 1.0 / abs(z)
    ny = np.linalg.norm(y)
    e = y / ny if ny > 0 else np.eye(n)[0]
    if n == 1:
        C = Polyhedron.from_points(np.array([[0.0], [h * e[0]]]), 1)
    elif n == 2:
        p = np.array([-e[1], e[0]])
        C = Polyhedron.from_points(np.array([-p, p, p + h * e, -p + h * e]), 2)
    else:
        raise DimensionUnsupported("cylinder witness implemented for n <= 2")
    u = CellPA.linear_on(y, C)
    val = zeta_valuation(zeta, u)
    pred = math.copysign(unit_ball_volume(n - 1), z)
    return CylinderWitness(u, val, pred, geo.volume(C))
