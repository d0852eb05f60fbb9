"""Random instances, property suites for valuation identities, and degeneracy demos."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry as geo
from .convexfn import (
    NOT_CONVEX,
    CellPA,
    ConeRestriction,
    MaxAffine,
    conjugate_max_affine,
    epi_distance_report,
    guarded_min,
    pointwise_max,
    restrict,
    sample_approx,
)
from .errors import DegenerateInput, RetryExhausted, ZeroWeight
from .geometry import Polyhedron
from .hessian import SmoothGridFunction, counterexample_eval
from .valuations import TestFunction, ValuationOracle, dual_zeta_valuation, zeta_oracle

MAX_RETRIES = 100


def case_rng(seed: int, task: int = 0) -> np.random.Generator:
    """Independent counter-based stream for (seed, task)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(task)])))


def default_zeta(n: int) -> TestFunction:
    """A non-symmetric bump used by the suites."""
    if n == 1:
        return TestFunction(1, {(0,): 1.0, (1,): 0.7, (2,): -0.4}, rho=2.5, k=2)
    return TestFunction(2, {(0, 0): 1.0, (1, 0): 0.7, (0, 2): -0.4, (1, 1): 0.3}, rho=2.5, k=2)


# -- generators --------------------------------------------------------------------

def gen_max_affine(seed, n: int, m: int, R: float = 1.0, spread: float = 0.5, task: int = 0) -> MaxAffine:
    """Random max of m affine functions with slopes uniform in the R-ball.

    ``seed`` may be an int or a Generator.
    """
    if m < 1:
        raise ValueError("need at least one piece")
    rng = seed if isinstance(seed, np.random.Generator) else case_rng(seed, task)
    d = rng.normal(size=(m, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = R * rng.random(m) ** (1.0 / n)
    slopes = d * r[:, None]
    inter = rng.uniform(-spread, spread, m)
    return MaxAffine(slopes, inter, n)


def random_polytope(rng: np.random.Generator, n: int, points: int = 6, size: float = 1.0) -> Polyhedron:
    for _ in range(MAX_RETRIES):
        if n == 1:
            a, b = np.sort(rng.uniform(-size, size, 2))
            if b - a > 0.1 * size:
                return Polyhedron.from_points([[a], [b]], 1)
        else:
            P = Polyhedron.from_points(rng.uniform(-size, size, (points, n)), n)
            if geo.volume(P) > 0.05 * size ** 2:
                return P
    raise RetryExhausted("could not draw a nondegenerate polytope")


def _strip(K: Polyhedron, d: np.ndarray, lo: float, hi: float) -> Polyhedron:
    return geo.intersect(K, Polyhedron.from_halfspaces(np.vstack([d, -d]), [hi, -lo], K.dim))


@dataclass
class LatticePair:
    u: CellPA
    v: CellPA
    maximum: CellPA
    minimum: CellPA
    descriptor: dict = field(default_factory=dict)


def gen_lattice_pair(seed: int, n: int, task: int = 0, m: int = 4) -> LatticePair:
    """u = w + I_P, v = w + I_Q with P, Q overlapping strips of a random polytope.

    P cup Q is the polytope itself, so the minimum is convex; the pair is
    certified with ``guarded_min``.
    """
    rng = case_rng(seed, task)
    for attempt in range(MAX_RETRIES):
        K = random_polytope(rng, n)
        w = gen_max_affine(rng, n, m)
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        h = K.vertices @ d
        lo, hi = h.min(), h.max()
        t0, t1 = np.sort(rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 2))
        P = _strip(K, d, lo - 1.0, t1)
        Q = _strip(K, d, t0, hi + 1.0)
        if P.is_empty or Q.is_empty:
            continue
        u, v = restrict(w, P), restrict(w, Q)
        mn = guarded_min(u, v)
        if mn is NOT_CONVEX:
            continue
        mx = pointwise_max(u, v)
        desc = {"seed": int(seed), "task": int(task), "attempt": attempt, "cut": [float(t0), float(t1)]}
        return LatticePair(u, v, mx, mn, desc)
    raise RetryExhausted("no certified lattice pair after 100 attempts")


# -- reports ------------------------------------------------------------------------

@dataclass
class SuiteReport:
    suite: str
    cases: int
    max_defect: float
    tolerance: float
    failures: list
    seed: int | None = None
    negative_control: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """True when no case failed (for negative controls: when some case did)."""
        return bool(self.failures) if self.negative_control else not self.failures

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _report(name, defects, tol, seeds, seed, negative=False, **extra) -> SuiteReport:
    defects = np.asarray(defects, dtype=float)
    fails = [{"case": int(i), "seed": seeds[i], "defect": float(defects[i])}
             for i in np.nonzero(~(defects <= tol))[0]]
    mx = float(np.max(defects)) if len(defects) else 0.0
    return SuiteReport(name, len(defects), mx, tol, fails, seed, negative, dict(extra))


def _oracle_for(Z, n: int) -> ValuationOracle:
    """Suites accept one oracle or a mapping from dimension to oracle."""
    return Z[n] if isinstance(Z, dict) else Z


@dataclass
class SuiteConfig:
    seed: int = 0
    cases: int = 100
    dims: tuple = (1, 2)
    tolerance: float = 1e-9
    pieces: int = 4


def valuation_identity_suite(Z: ValuationOracle, cases: int, seed: int, dims: Sequence[int] = (1, 2),
                             tol: float = 1e-9, negative_control: bool = False) -> SuiteReport:
    """|Z(u v v) + Z(u ^ v) - Z(u) - Z(v)| / (1 + max |Z|) over seeded lattice pairs."""
    defects, seeds = [], []
    for n in dims:
        for i in range(cases):
            pair = gen_lattice_pair(seed, n, task=1000 * n + i)
            Zn = _oracle_for(Z, n)
            vals = [Zn(pair.maximum), Zn(pair.minimum), Zn(pair.u), Zn(pair.v)]
            scale = 1.0 + max(abs(x) for x in vals)
            defects.append(abs(vals[0] + vals[1] - vals[2] - vals[3]) / scale)
            seeds.append({"seed": seed, "n": n, "task": 1000 * n + i})
    return _report("valuation", defects, tol, seeds, seed, negative_control, dims=list(dims))


def _strip_family(rng, n: int, m: int, pieces: int = 4):
    K = random_polytope(rng, n)
    w = gen_max_affine(rng, n, pieces)
    d = rng.normal(size=n)
    d /= np.linalg.norm(d)
    h = K.vertices @ d
    lo, hi = h.min(), h.max()
    c = rng.uniform(lo + 0.3 * (hi - lo), hi - 0.3 * (hi - lo))
    a = rng.uniform(lo - 0.1 * (hi - lo), c, m)
    b = rng.uniform(c, hi + 0.1 * (hi - lo), m)
    return [restrict(w, _strip(K, d, a[j], b[j])) for j in range(m)]


def inclusion_exclusion_suite(Z: ValuationOracle, m: int, cases: int, seed: int, dims: Sequence[int] = (1, 2),
                              tol: float = 1e-8) -> SuiteReport:
    """Z(min_j u_j) against the signed sum over maxima of subfamilies."""
    if not 2 <= m <= 4:
        raise ValueError("family size must be 2..4")
    defects, seeds = [], []
    for n in dims:
        for i in range(cases):
            task = 10000 * m + 1000 * n + i
            fam = None
            rng = case_rng(seed, task)
            for _ in range(MAX_RETRIES):
                fam = _strip_family(rng, n, m)
                low = fam[0]
                for f in fam[1:]:
                    low = guarded_min(low, f)
                    if low is NOT_CONVEX:
                        break
                if low is not NOT_CONVEX:
                    break
            else:
                raise RetryExhausted("no convex strip family")
            Zn = _oracle_for(Z, n)
            lhs = Zn(low)
            rhs, vals = 0.0, [lhs]
            for r in range(1, m + 1):
                for J in itertools.combinations(range(m), r):
                    f = fam[J[0]]
                    for j in J[1:]:
                        f = pointwise_max(f, fam[j])
                    z = Zn(f)
                    vals.append(z)
                    rhs += (-1) ** (r - 1) * z
            scale = 1.0 + max(abs(x) for x in vals)
            defects.append(abs(lhs - rhs) / scale)
            seeds.append({"seed": seed, "n": n, "task": task})
    return _report(f"inclexcl-{m}", defects, tol, seeds, seed, m=m, dims=list(dims))


# -- continuity -------------------------------------------------------------------

def continuity_zeta(n: int) -> TestFunction:
    """(1 - |y|^2)^3_+, supported in the unit ball."""
    return TestFunction(n, {(0,) * n: 1.0}, rho=1.0, k=3)


def continuity_limit(n: int) -> float:
    """Integral of (1 - |y|^2)^3 over the unit ball."""
    return 32.0 / 35.0 if n == 1 else math.pi / 4.0


def half_square(X):
    X = np.atleast_2d(X)
    return 0.5 * np.sum(X * X, axis=-1)


def quadratic_sequence(n: int, counts: Sequence[int], R: float = 1.0) -> list[CellPA]:
    """Conjugates of tangent-plane approximations of |x|^2/2 with probes on [-R, R]^n.

    In the plane, ``counts`` are probes per axis.
    """
    out = []
    for k in counts:
        ax = np.linspace(-R, R, k)
        probes = ax.reshape(-1, 1) if n == 1 else np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
        v = sample_approx(lambda x: float(0.5 * x @ x), probes, grad=lambda x: x)
        out.append(conjugate_max_affine(v))
    return out


def continuity_suite(Z: ValuationOracle, n: int, counts: Sequence[int] = (4, 8, 16, 32, 64),
                     limit: float | None = None, sequence: Sequence[CellPA] | None = None,
                     rel_tol: float = 0.01, t_grid: Sequence[float] = (0.1, 0.3),
                     negative_control: bool = False) -> SuiteReport:
    """Evaluate Z along a PA sequence epi-converging to the quadratic target.

    The check passes when the errors decrease strictly and the last one is
    within ``rel_tol`` of the limit. Epi-distances are reported against the
    finest member of the sequence.
    """
    seq = list(sequence) if sequence is not None else quadratic_sequence(n, counts)
    vals = [Z(u) for u in seq]
    if limit is None:
        limit = vals[-1]
    errs = [abs(v - limit) for v in vals]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    final_rel = errs[-1] / max(abs(limit), 1e-300)
    ok = monotone and final_rel <= rel_tol
    epi = epi_distance_report(seq[:-1], seq[-1], list(t_grid)).to_dict() if len(seq) > 1 else {}
    defect = 0.0 if ok else max(final_rel, 1.0 if not monotone else final_rel)
    return SuiteReport(
        f"continuity-n{n}", len(seq), float(defect), rel_tol,
        [] if ok else [{"case": len(seq) - 1, "seed": None, "defect": float(defect)}],
        None, negative_control,
        {"counts": list(counts), "values": vals, "errors": errs, "limit": limit,
         "monotone": monotone, "final_relative_error": final_rel, "epi_distances": epi},
    )


# -- degeneracy demos ------------------------------------------------------------------

@dataclass
class CoerciveDemo:
    radii: list
    values: list
    ratios: list
    predicted_ratio: float

    @property
    def max_relative_deviation(self) -> float:
        if self.predicted_ratio == 0:
            return float(max(abs(r) for r in self.ratios))
        return float(max(abs(r / self.predicted_ratio - 1) for r in self.ratios))

    def to_dict(self) -> dict:
        return {**asdict(self), "max_relative_deviation": self.max_relative_deviation}


def _cone_ball_volume(gens: np.ndarray) -> float:
    n = gens.shape[1]
    if n == 1:
        return 1.0
    ang = np.arctan2(gens[:, 1], gens[:, 0])
    a0, a1 = ang[0], ang[1]
    width = (a1 - a0) % (2 * np.pi)
    if width > np.pi:
        width = 2 * np.pi - width
    return width / 2.0


def coercive_divergence_demo(zeta: TestFunction, y, generators, radii: Sequence[float],
                             allow_zero: bool = False) -> CoerciveDemo:
    """zeta-valuation of l_y + I_{C cap R ball} for a pointed cone C and growing R."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    G = np.asarray(generators, dtype=float).reshape(-1, len(y))
    if np.any(G @ y <= 0):
        raise DegenerateInput("l_y + I_C must be coercive: need <g, y> > 0 for all generators")
    zy = zeta(y)
    if zy == 0 and not allow_zero:
        raise ZeroWeight("test function vanishes at y")
    n = len(y)
    rec = ConeRestriction(y, G)
    vals, ratios = [], []
    for R in radii:
        u = rec.truncation(R)
        val = zeta_oracle(zeta)(u)
        vals.append(val)
        ratios.append(val / R ** n)
    return CoerciveDemo(list(radii), vals, ratios, float(zy * _cone_ball_volume(G)))


def growth_eta(n: int) -> TestFunction:
    """Bump with eta >= 1 on |x| <= 2, supported in the ball of radius 3."""
    return TestFunction(n, {(0,) * n: 1.8}, rho=3.0, k=1)


@dataclass
class GrowthDemo:
    lambdas: list
    values: list
    c0: float
    c1: float
    other_sign_c1: float
    control_values: list
    control_c1: float

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_growth(lambdas, values, n) -> tuple[float, float]:
    lam = np.asarray(lambdas, dtype=float)
    val = np.asarray(values, dtype=float)
    if np.any(val <= 0):
        raise ValueError("growth fit needs positive values")
    A = np.column_stack([np.ones_like(lam), lam])
    coef, *_ = np.linalg.lstsq(A, np.log(val) - n * np.log(lam), rcond=None)
    return float(coef[0]), float(coef[1])


def growth_demo(eta: TestFunction, lambdas: Sequence[float], n: int | None = None, h: float = 1 / 16,
                sign: float = -1.0, control_seed: int = 7) -> GrowthDemo:
    """Sweep lam -> Z(lam v) for v = |x|^2/2 and fit log Z = c0 + n log lam + c1 lam.

    ``sign`` selects the exponent convention of the integrand; the other
    convention is fitted too. The control is a dual zeta valuation of lam w for
    a fixed random finite PA w, which is exactly homogeneous of degree n.
    """
    n = eta.dim if n is None else n
    L = eta.rho
    v = SmoothGridFunction.quadratic(np.eye(n), [-L] * n, [L] * n, h)
    vals = [counterexample_eval(eta, v.scaled(lam), sign) for lam in lambdas]
    other = [counterexample_eval(eta, v.scaled(lam), -sign) for lam in lambdas]
    c0, c1 = _fit_growth(lambdas, vals, n)
    _, c1o = _fit_growth(lambdas, other, n)
    w = gen_max_affine(control_seed, n, 6)
    zc = TestFunction(n, {(0,) * n: 1.0}, rho=50.0, k=1)
    ctrl = [dual_zeta_valuation(zc, MaxAffine(w.slopes * lam, w.intercepts * lam, n, prune=False)) for lam in lambdas]
    _, cc1 = _fit_growth(lambdas, ctrl, n)
    return GrowthDemo(list(lambdas), vals, c0, c1, c1o, ctrl, cc1)


# -- negative-control oracles --------------------------------------------------------

def squared_volume_oracle() -> ValuationOracle:
    def ev(u):
        return geo.volume(u.dom) ** 2 if u.dom_dim == u.dim else 0.0
    return ValuationOracle(ev, True, True, None, "cellpa", "squared-volume")


def cell_count_oracle() -> ValuationOracle:
    """Discontinuous: counts cells of the given representation."""
    return ValuationOracle(lambda u: float(len(u.cells)), True, False, None, "cellpa", "cell-count")


def constant_oracle(c: float = 1.0) -> ValuationOracle:
    return ValuationOracle(lambda u: float(c), True, True, 0, "cellpa", "constant")
