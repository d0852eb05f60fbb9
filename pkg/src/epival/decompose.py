"""Homogeneous decomposition, polarization and polynomial fits of valuations.

For an epi-translation invariant continuous valuation Z on super-coercive
functions, k -> Z(k □ u) is a polynomial of degree at most n in k. Sampling
it at k = 0..n and inverting the Vandermonde matrix gives the homogeneous
components Z_i(u).
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .convexfn import CellPA, MaxAffine, conjugate_max_affine, epi_scale, inf_convolve, linear_combination
from .errors import ArityMismatch, RankDeficient
from .hessian import SmoothGridFunction
from .valuations import ValuationOracle, dual_wrap

MAX_FLOAT_DEGREE = 6


@dataclass(frozen=True)
class DecompositionMatrix:
    """alpha = V^-1 for the Vandermonde matrix V[k, j] = nodes[k]^j."""

    n: int
    nodes: tuple
    alpha: np.ndarray
    exact: tuple | None = None

    def vandermonde(self) -> np.ndarray:
        return np.array([[float(x) ** j for j in range(self.n + 1)] for x in self.nodes])


def _exact_inverse(V: list[list[Fraction]]) -> list[list[Fraction]]:
    m = len(V)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(m)] for i, row in enumerate(V)]
    for col in range(m):
        piv = next(r for r in range(col, m) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(m):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[m:] for row in aug]


def vandermonde_coeffs(n: int, chebyshev: bool = False) -> DecompositionMatrix:
    """Inverse Vandermonde matrix at nodes 0..n, computed over the rationals.

    ``chebyshev=True`` uses Chebyshev points of [0, n] instead (floating point,
    for conditioning experiments only).
    """
    if n < 0:
        raise ValueError("degree bound must be >= 0")
    if chebyshev:
        k = np.arange(n + 1)
        nodes = tuple(float(x) for x in 0.5 * n * (1 - np.cos(np.pi * (2 * k + 1) / (2 * n + 2))))
        V = np.array([[x ** j for j in range(n + 1)] for x in nodes])
        return DecompositionMatrix(n, nodes, np.linalg.inv(V))
    V = [[Fraction(k) ** j for j in range(n + 1)] for k in range(n + 1)]
    inv = _exact_inverse(V)
    alpha = np.array([[float(x) for x in row] for row in inv])
    return DecompositionMatrix(n, tuple(range(n + 1)), alpha, tuple(tuple(r) for r in inv))


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def homogeneous_components(Z: ValuationOracle, u: CellPA, n: int, exact: bool = False,
                           workers: int | None = None, matrix: DecompositionMatrix | None = None) -> np.ndarray:
    """(Z_0(u), ..., Z_n(u)) with Z_i(u) = sum_j alpha_ij Z(j □ u).

    ``exact`` combines the sampled values in rational arithmetic, which is
    required for n > 6.
    """
    M = vandermonde_coeffs(n) if matrix is None else matrix
    if n > MAX_FLOAT_DEGREE and not (exact and M.exact is not None):
        raise ValueError(f"decomposition refuses n > {MAX_FLOAT_DEGREE} without exact coefficients")
    vals = _map(lambda lam: Z(epi_scale(u, lam)), M.nodes, workers)
    if exact and M.exact is not None:
        fv = [Fraction(v) for v in vals]
        return np.array([float(sum(a * v for a, v in zip(row, fv))) for row in M.exact])
    return M.alpha @ np.array(vals)


def component_oracle(Z: ValuationOracle, i: int, n: int) -> ValuationOracle:
    """The oracle u -> Z_i(u)."""
    M = vandermonde_coeffs(n)
    return replace(Z, evaluator=lambda u: float(homogeneous_components(Z, u, n, matrix=M)[i]),
                   claimed_degree=i, name=f"{Z.name}[{i}]")


def verify_homogeneity(Zi: ValuationOracle, u, i: int, lambdas: Sequence[float]) -> float:
    """max over lam of |Z_i(lam □ u) - lam^i Z_i(u)| / (1 + |Z_i(u)|)."""
    base = Zi(u)
    worst = 0.0
    for lam in lambdas:
        if lam <= 0:
            raise ValueError("homogeneity is checked for positive factors")
        val = Zi(_scale(u, lam))
        worst = max(worst, abs(val - lam ** i * base) / (1 + abs(base)))
    return worst


def _scale(f, lam: float):
    if isinstance(f, CellPA):
        return epi_scale(f, lam)
    if isinstance(f, MaxAffine):
        return MaxAffine(f.slopes * lam, f.intercepts * lam, f.dim, prune=False)
    if isinstance(f, SmoothGridFunction):
        return f.scaled(lam)
    raise TypeError(f"cannot scale {type(f).__name__}")


def combine(weights: Sequence[float], fns: Sequence):
    """lam_1 □ u_1 □ ... for super-coercive inputs, lam_1 v_1 + ... otherwise."""
    if isinstance(fns[0], CellPA):
        return inf_convolve(list(weights), list(fns))
    if isinstance(fns[0], MaxAffine):
        return linear_combination(list(weights), list(fns))
    if isinstance(fns[0], SmoothGridFunction):
        return fns[0].combine(weights, fns)
    raise TypeError(f"cannot combine {type(fns[0]).__name__}")


def polarize(Z: ValuationOracle, fns: Sequence, workers: int | None = None) -> float:
    """Symmetric mixed value Z̄(u_1, ..., u_m) by signed subset sums."""
    m = len(fns)
    if m == 0:
        raise ArityMismatch("need at least one argument")
    if Z.claimed_degree is not None and Z.claimed_degree != m:
        raise ArityMismatch(f"oracle claims degree {Z.claimed_degree}, got {m} arguments")
    subsets = [S for r in range(1, m + 1) for S in itertools.combinations(range(m), r)]
    vals = _map(lambda S: Z(combine([1.0] * len(S), [fns[j] for j in S])), subsets, workers)
    total = sum((-1) ** (m - len(S)) * v for S, v in zip(subsets, vals))
    return total / math.factorial(m)


def _compositions(m: int, k: int):
    """Exponent tuples (i_1..i_k) of nonnegative integers summing to m."""
    if k == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in _compositions(m - first, k - 1):
            yield (first,) + rest


def multinomial(exps: Sequence[int]) -> int:
    out = math.factorial(sum(exps))
    for e in exps:
        out //= math.factorial(e)
    return out


@dataclass
class MixedValuationTable:
    """Mixed values Z̄(u_1[i_1], ..., u_k[i_k]) indexed by exponent tuples."""

    exponents: list
    values: list
    arguments: list = field(default_factory=list)

    def value(self, exps: Sequence[int]) -> float:
        return self.values[self.exponents.index(tuple(exps))]

    def to_dict(self) -> dict:
        return {
            "arguments": list(self.arguments),
            "entries": [{"exponents": list(e), "value": float(v)} for e, v in zip(self.exponents, self.values)],
        }


@dataclass
class FitResult:
    exponents: list
    coeffs: np.ndarray
    residual: float
    max_abs_sample: float
    table: MixedValuationTable

    def to_dict(self) -> dict:
        return {
            "coefficients": [{"exponents": list(e), "value": float(c)} for e, c in zip(self.exponents, self.coeffs)],
            "residual": self.residual,
            "max_abs_sample": self.max_abs_sample,
            "mixed": self.table.to_dict(),
        }


def polynomial_fit(Z: ValuationOracle, fns: Sequence, nodes: Sequence[float], degree: int | None = None,
                   workers: int | None = None) -> FitResult:
    """Fit Z(lam_1 □ u_1 □ ... □ lam_k □ u_k) by a homogeneous polynomial of degree m.

    Samples on the tensor grid nodes^k; the residual is the max abs misfit.
    """
    m = Z.claimed_degree if degree is None else degree
    if m is None:
        raise ValueError("polynomial degree unknown: pass degree or use an oracle with a claimed degree")
    k = len(fns)
    nodes = [float(x) for x in nodes]
    if any(x <= 0 for x in nodes):
        raise ValueError("fit nodes must be positive")
    if len(set(nodes)) < m + 1:
        raise RankDeficient(f"need at least {m + 1} distinct nodes, got {len(set(nodes))}")
    exps = list(_compositions(m, k))
    grid = list(itertools.product(nodes, repeat=k))
    samples = np.array(_map(lambda lam: Z(combine(lam, fns)), grid, workers))
    L = np.array(grid)
    A = np.array([[np.prod(np.power(lam, e)) for e in exps] for lam in L])
    if np.linalg.matrix_rank(A) < len(exps):
        raise RankDeficient("design matrix is rank deficient")
    coeffs, *_ = np.linalg.lstsq(A, samples, rcond=None)
    resid = float(np.max(np.abs(A @ coeffs - samples)))
    mixed = [c / multinomial(e) for c, e in zip(coeffs, exps)]
    table = MixedValuationTable(exps, mixed, [f"u{j + 1}" for j in range(k)])
    return FitResult(exps, coeffs, resid, float(np.max(np.abs(samples))), table)


@dataclass
class DualDecomposition:
    components: np.ndarray
    crosscheck: np.ndarray | None = None
    discrepancy: float | None = None


def dual_decompose(Z: ValuationOracle, v: MaxAffine, n: int, crosscheck: bool = False) -> DualDecomposition:
    """Components of a dually invariant oracle on finite functions via Z(j v), j = 0..n."""
    M = vandermonde_coeffs(n)
    vals = []
    for j in M.nodes:
        if j == 0:
            f = MaxAffine(np.zeros((1, v.dim)), [0.0], v.dim)
        else:
            f = MaxAffine(v.slopes * j, v.intercepts * j, v.dim, prune=False)
        vals.append(Z(f))
    comps = M.alpha @ np.array(vals)
    if not crosscheck:
        return DualDecomposition(comps)
    other = homogeneous_components(dual_wrap(Z), conjugate_max_affine(v), n, matrix=M)
    return DualDecomposition(comps, other, float(np.max(np.abs(comps - other))))
