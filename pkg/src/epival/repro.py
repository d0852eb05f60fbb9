"""Reproduction runners for the acceptance criteria.

Each runner returns a ``CriterionResult`` holding the measured quantities,
the threshold they are compared against and a pass flag. Runners are shared
by the acceptance tests, the ``epival repro`` command and
``scripts/run_acceptance.py``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull

from . import geometry as geo
from .convexfn import CellPA, MaxAffine, conjugate_max_affine, inf_convolve
from .decompose import (
    component_oracle,
    homogeneous_components,
    polarize,
    polynomial_fit,
    verify_homogeneity,
)
from .geometry import Polyhedron
from .harness import (
    case_rng,
    coercive_divergence_demo,
    continuity_limit,
    continuity_suite,
    continuity_zeta,
    default_zeta,
    gen_max_affine,
    growth_demo,
    growth_eta,
    inclusion_exclusion_suite,
    random_polytope,
    squared_volume_oracle,
    valuation_identity_suite,
)
from .hessian import (
    SmoothGridFunction,
    Window,
    alesker_valuation_quad,
    duality_check,
    hessian_measure,
    mixed_discriminant,
    ps_volume_mc,
    smooth_theta,
)
from .valuations import (
    TestFunction,
    ValuationOracle,
    body_valuation,
    dual_zeta_valuation,
    zeta_oracle,
    zeta_valuation,
)


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: dict
    thresholds: dict
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        meas = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        thr = ", ".join(f"{k}{_short(v)}" for k, v in self.thresholds.items())
        return f"[{status}] criterion {self.cid:2d} {self.name}: {meas} (need {thr})"

    def to_dict(self) -> dict:
        return {"criterion": self.cid, "name": self.name, "passed": self.passed,
                "measured": self.measured, "thresholds": self.thresholds, "detail": self.detail}


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, str):
        return v
    return str(v)


def _zeta_oracles():
    return {n: zeta_oracle(default_zeta(n), name=f"zeta{n}") for n in (1, 2)}


def random_cellpa(seed: int, task: int, n: int, m: int = 5) -> CellPA:
    return conjugate_max_affine(gen_max_affine(seed, n, m, task=task))


def random_box(rng, n: int, lo=(-1.2, -0.1), hi=(0.1, 1.2)) -> Polyhedron:
    a = rng.uniform(lo[0], lo[1], n)
    b = rng.uniform(hi[0], hi[1], n)
    return Polyhedron.box(a, b)


# -- 1 ------------------------------------------------------------------------------

def criterion_1(seed: int = 0, cases: int = 1000, neg_cases: int = 200) -> CriterionResult:
    rep = valuation_identity_suite(_zeta_oracles(), cases, seed, dims=(1, 2), tol=1e-9)
    neg = valuation_identity_suite(squared_volume_oracle(), neg_cases, seed, dims=(1, 2), tol=1e-9,
                                   negative_control=True)
    ok = rep.passed and neg.max_defect >= 1e-3
    return CriterionResult(1, "valuation identity", ok,
                           {"max_defect": rep.max_defect, "failures": len(rep.failures),
                            "negative_max_defect": neg.max_defect},
                           {"max_defect<=": 1e-9, "negative_max_defect>=": 1e-3},
                           {"cases_per_dim": cases})


# -- 2 ------------------------------------------------------------------------------

def criterion_2(seed: int = 0, cases: int = 200) -> CriterionResult:
    Z = _zeta_oracles()
    r3 = inclusion_exclusion_suite(Z, 3, cases, seed, tol=1e-8)
    r4 = inclusion_exclusion_suite(Z, 4, cases, seed, tol=1e-8)
    return CriterionResult(2, "inclusion-exclusion", r3.passed and r4.passed,
                           {"m3_max_defect": r3.max_defect, "m4_max_defect": r4.max_defect},
                           {"max_defect<=": 1e-8}, {"cases_per_dim": cases})


# -- 3 ------------------------------------------------------------------------------

def criterion_3(seed: int = 0, cases: int = 500) -> CriterionResult:
    Z = _zeta_oracles()
    worst = 0.0
    for i in range(cases):
        n = 1 + i % 2
        rng = case_rng(seed, 30000 + i)
        K = random_polytope(rng, n)
        y = rng.uniform(-2.0, 2.0, n)
        zeta = default_zeta(n)
        pts = K.vertices
        vol = float(pts.max() - pts.min()) if n == 1 else ConvexHull(pts).volume
        ref = zeta(y) * vol
        val = body_valuation(Z[n], y, K)
        err = abs(val - ref) / abs(ref) if ref != 0 else abs(val)
        worst = max(worst, err)
    return CriterionResult(3, "representation on bodies", worst <= 1e-12,
                           {"max_relative_defect": worst}, {"max_relative_defect<=": 1e-12})


# -- 4 ------------------------------------------------------------------------------

def criterion_4(seed: int = 0, cases: int = 20) -> CriterionResult:
    comp_def = recon_def = hom_def = 0.0
    for n in (1, 2):
        zeta = default_zeta(n)
        for c0, cn in ((5.0, 2.0), (-1.5, 0.25), (0.0, 1.0)):
            Z = ValuationOracle(lambda u, z=zeta, a=c0, b=cn: a + b * zeta_valuation(z, u),
                                claimed_degree=None, name="affine-zeta")
            comps_or = [component_oracle(Z, i, n) for i in range(n + 1)]
            for i in range(cases):
                u = random_cellpa(seed, 40000 + 100 * n + i, n)
                zu = zeta_valuation(zeta, u)
                comps = homogeneous_components(Z, u, n)
                scale = 1 + abs(c0) + abs(cn * zu)
                expect = np.zeros(n + 1)
                expect[0], expect[n] = c0, cn * zu
                comp_def = max(comp_def, float(np.max(np.abs(comps - expect))) / scale)
                total = Z(u)
                recon_def = max(recon_def, abs(comps.sum() - total) / (1 + abs(total)))
                if i < 5:
                    for k in (0, n):
                        hom_def = max(hom_def, verify_homogeneity(comps_or[k], u, k, [0.5, 1, 2, 3]))
    ok = comp_def <= 1e-8 and recon_def <= 1e-10 and hom_def <= 1e-9
    return CriterionResult(4, "homogeneous decomposition", ok,
                           {"component_defect": comp_def, "reconstruction_defect": recon_def,
                            "homogeneity_defect": hom_def},
                           {"component_defect<=": 1e-8, "reconstruction_defect<=": 1e-10,
                            "homogeneity_defect<=": 1e-9})


# -- 5 ------------------------------------------------------------------------------

def mixed_degree_oracle(zeta: TestFunction, u1: CellPA) -> ValuationOracle:
    """u -> Z_zeta(u □ u1); has nonzero components in every degree."""
    return ValuationOracle(lambda u: zeta_valuation(zeta, inf_convolve([1.0, 1.0], [u, u1])),
                           name="mixed-degree")


def criterion_5(seed: int = 0, cases: int = 100) -> CriterionResult:
    worst = 0.0
    spreads = {}
    for n in (1, 2):
        zeta = default_zeta(n)
        u1 = random_cellpa(seed, 50000 + n, n, m=4)
        oracles = {
            "zeta": zeta_oracle(zeta),
            "affine-zeta": ValuationOracle(lambda u, z=zeta: 3.0 + 2.0 * zeta_valuation(z, u)),
            "mixed-degree": mixed_degree_oracle(zeta, u1),
        }
        for name, Z in oracles.items():
            z0 = [homogeneous_components(Z, random_cellpa(seed, 50100 + 1000 * n + i, n), n)[0]
                  for i in range(cases // 2)]
            spread = (max(z0) - min(z0)) / (1 + max(abs(x) for x in z0))
            spreads[f"{name}-n{n}"] = spread
            worst = max(worst, spread)
    return CriterionResult(5, "degree-0 component constant", worst <= 1e-8,
                           {"max_relative_spread": worst}, {"max_relative_spread<=": 1e-8},
                           {"spreads": spreads, "inputs_per_oracle": 2 * (cases // 2)})


# -- 6 ------------------------------------------------------------------------------

def criterion_6(seed: int = 0, cases: int = 100, windows: int = 10) -> CriterionResult:
    zeta_def = theta_def = 0.0
    for i in range(cases):
        n = 1 + i % 2
        v = gen_max_affine(seed, n, 6, task=60000 + i)
        zeta = default_zeta(n)
        a = dual_zeta_valuation(zeta, v)
        b = zeta_valuation(zeta, conjugate_max_affine(v))
        zeta_def = max(zeta_def, abs(a - b) / (1 + abs(b)))
        rng = case_rng(seed, 61000 + i)
        for _ in range(windows):
            W = Window(random_box(rng, n, (-2.0, -0.2), (0.2, 2.0)), random_box(rng, n))
            rep = duality_check(v, W)
            scale = 1 + max(abs(x) for x in rep.lhs + rep.rhs)
            theta_def = max(theta_def, rep.discrepancy / scale)
    ok = zeta_def <= 1e-9 and theta_def <= 1e-9
    return CriterionResult(6, "duality", ok, {"zeta_defect": zeta_def, "theta_defect": theta_def},
                           {"zeta_defect<=": 1e-9, "theta_defect<=": 1e-9})


# -- 7 ------------------------------------------------------------------------------

def criterion_7(seed: int = 0, cases: int = 50, samples: int = 10 ** 6, workers: int | None = None) -> CriterionResult:
    inside = total = 0
    worst_z = 0.0
    for i in range(cases):
        u = random_cellpa(seed, 70000 + i, 2)
        rng = case_rng(seed, 71000 + i)
        W = Window(random_box(rng, 2), random_box(rng, 2))
        table = hessian_measure(u, W)
        for j, s in enumerate((0.5, 1.0, 2.0)):
            est = ps_volume_mc(u, s, W, samples, seed=1000 * i + j, workers=workers)
            exact = table.ps_polynomial(s)
            z = abs(est.estimate - exact) / est.stderr if est.stderr > 0 else (0.0 if exact == 0 else math.inf)
            worst_z = max(worst_z, z)
            inside += z <= 3
            total += 1
    frac = inside / total
    return CriterionResult(7, "P_s polynomial vs Monte Carlo", frac >= 0.95,
                           {"fraction_within_3se": frac, "max_z": worst_z},
                           {"fraction_within_3se>=": 0.95}, {"triples": total, "samples": samples})


# -- 8 ------------------------------------------------------------------------------

def criterion_8(steps=(1 / 16, 1 / 32, 1 / 64)) -> CriterionResult:
    errs = {}
    ok = True
    worst_final = 0.0
    for n in (1, 2):
        b = 5.0 / 3.0
        volB = (2 * b) ** n
        for j in range(n + 1):
            seq = []
            for h in steps:
                v = SmoothGridFunction.quadratic(np.eye(n), [-2.0] * n, [2.0] * n, h)
                val = smooth_theta(v, j, [-b] * n, [b] * n, [-3.0] * n, [3.0] * n)
                seq.append(abs(val - volB) / volB)
            errs[f"n{n}-j{j}"] = seq
            ok &= all(e2 < e1 for e1, e2 in zip(seq, seq[1:])) and seq[-1] <= 0.01
            worst_final = max(worst_final, seq[-1])
    return CriterionResult(8, "smooth Hessian measures", ok,
                           {"max_final_relative_error": worst_final, "decreasing": ok},
                           {"max_final_relative_error<=": 0.01}, {"errors": errs, "steps": list(steps)})


# -- 9 ------------------------------------------------------------------------------

def criterion_9(seed: int = 0, cases: int = 5) -> CriterionResult:
    nodes = [0.5, 1.0, 1.5, 2.0]
    zeta = default_zeta(2)
    Z = zeta_oracle(zeta)
    fit_def = pol_def = add_def = 0.0
    for i in range(cases):
        u1 = random_cellpa(seed, 90000 + i, 2)
        u2 = random_cellpa(seed, 90100 + i, 2)
        fit = polynomial_fit(Z, [u1, u2], nodes)
        fit_def = max(fit_def, fit.residual / fit.max_abs_sample)
        mixed = fit.table.value((1, 1))
        pol = polarize(Z, [u1, u2])
        pol_def = max(pol_def, abs(pol - mixed) / max(1.0, abs(mixed)))
    for n in (1, 2):
        zeta_n = default_zeta(n)
        for i in range(cases):
            u1 = random_cellpa(seed, 91000 + 10 * n + i, n, m=4)
            Z1 = component_oracle(mixed_degree_oracle(zeta_n, u1), 1, n)
            u = random_cellpa(seed, 92000 + 10 * n + i, n)
            v = random_cellpa(seed, 93000 + 10 * n + i, n)
            a = Z1(inf_convolve([1.0, 1.0], [u, v]))
            b = Z1(u) + Z1(v)
            add_def = max(add_def, abs(a - b) / (1 + abs(a)))
    ok = fit_def <= 1e-9 and pol_def <= 1e-7 and add_def <= 1e-8
    return CriterionResult(9, "polynomiality and polarization", ok,
                           {"fit_residual_rel": fit_def, "polarize_vs_fit": pol_def, "epi_additivity": add_def},
                           {"fit_residual_rel<=": 1e-9, "polarize_vs_fit<=": 1e-7, "epi_additivity<=": 1e-8})


# -- 10 -----------------------------------------------------------------------------

def _spd(rng, n):
    M = rng.normal(size=(n, n))
    return M @ M.T + 0.5 * np.eye(n)


def criterion_10(seed: int = 0, cases: int = 3, h: float = 1 / 32) -> CriterionResult:
    n = 2
    rho, k = 1.5, 2
    zeta = TestFunction(n, {(0, 0): 1.0}, rho=rho, k=k)
    int_zeta = math.pi * rho ** 2 / (k + 1)
    lo, hi = [-2.0] * n, [2.0] * n
    worst = 0.0
    Zdet = ValuationOracle(lambda v: alesker_valuation_quad(zeta, 2, [], v), claimed_degree=2, domain="grid")
    for i in range(cases):
        rng = case_rng(seed, 100000 + i)
        A1, A2, A3 = _spd(rng, n), _spd(rng, n), _spd(rng, n)
        v1 = SmoothGridFunction.quadratic(A1, lo, hi, h)
        v2 = SmoothGridFunction.quadratic(A2, lo, hi, h)
        fit = polynomial_fit(Zdet, [v1, v2], [0.5, 1.0, 1.5, 2.0])
        for exps, ref in (((2, 0), np.linalg.det(A1)), ((1, 1), mixed_discriminant(A1, A2)),
                          ((0, 2), np.linalg.det(A2))):
            worst = max(worst, abs(fit.table.value(exps) - ref * int_zeta) / abs(ref * int_zeta))
        # degree-1 valuation with one fixed matrix slot
        Z1 = ValuationOracle(lambda v, A=A3: alesker_valuation_quad(zeta, 1, [A], v), claimed_degree=1,
                             domain="grid")
        fit1 = polynomial_fit(Z1, [v1, v2], [0.5, 1.0, 1.5])
        for exps, A in (((1, 0), A1), ((0, 1), A2)):
            ref = mixed_discriminant(A, A3) * int_zeta
            worst = max(worst, abs(fit1.table.value(exps) - ref) / abs(ref))
    return CriterionResult(10, "mixed valuations vs mixed discriminants", worst <= 0.01,
                           {"max_relative_error": worst}, {"max_relative_error<=": 0.01}, {"h": h})


# -- 11 -----------------------------------------------------------------------------

def criterion_11(seed: int = 0, cases: int = 200) -> CriterionResult:
    """Black-box recovery of (zeta_0, zeta_1) and the 1-d representation residual."""
    zeta1 = default_zeta(1)
    zeta0 = 0.75
    Z = ValuationOracle(lambda u: zeta0 + zeta_valuation(zeta1, u), name="zeta0+Z_zeta1")
    unit = Polyhedron.box([0.0], [1.0])
    rec0 = float(homogeneous_components(Z, CellPA.origin_indicator(1), 1)[0])

    def rec1(y):
        return float(homogeneous_components(Z, CellPA.linear_on([y], unit), 1)[1])

    worst = 0.0
    for i in range(cases):
        u = random_cellpa(seed, 110000 + i, 1, m=5)
        lens = [geo.volume(c) for c in u.cells]
        pred = rec0 + sum(L * rec1(a[0]) for L, a in zip(lens, u.slopes))
        worst = max(worst, abs(Z(u) - pred))
    return CriterionResult(11, "1-d classification residual", worst <= 1e-10,
                           {"max_residual": worst, "recovered_zeta0": rec0}, {"max_residual<=": 1e-10})


# -- 12 -----------------------------------------------------------------------------

def criterion_12() -> CriterionResult:
    zeta = default_zeta(2)
    demo = coercive_divergence_demo(zeta, [0.5, 0.4], [[1.0, 0.2], [0.3, 1.0]], [1.0, 2.0, 4.0, 8.0, 16.0])
    dev = demo.max_relative_deviation
    g = growth_demo(growth_eta(2), [1, 2, 3, 4, 5, 6, 7, 8], sign=-1.0)
    ok = dev <= 0.01 and g.c1 > 0.1 and abs(g.control_c1) <= 1e-3
    return CriterionResult(12, "degeneracy demos", ok,
                           {"coercive_ratio_deviation": dev, "growth_c1": g.c1,
                            "control_c1": g.control_c1, "literal_sign_c1": g.other_sign_c1},
                           {"coercive_ratio_deviation<=": 0.01, "growth_c1>": 0.1, "|control_c1|<=": 1e-3},
                           {"coercive": demo.to_dict(), "growth": g.to_dict()})


# -- 13 -----------------------------------------------------------------------------

def criterion_13(counts=(4, 8, 16, 32, 64)) -> CriterionResult:
    errs, ok = {}, True
    worst = 0.0
    for n in (1, 2):
        rep = continuity_suite(zeta_oracle(continuity_zeta(n)), n, counts, limit=continuity_limit(n))
        errs[f"n{n}"] = rep.extra["errors"]
        ok &= rep.passed
        worst = max(worst, rep.extra["final_relative_error"])
    return CriterionResult(13, "continuity diagnostic", ok, {"max_final_relative_error": worst, "monotone": ok},
                           {"max_final_relative_error<=": 0.01}, {"errors": errs, "counts": list(counts)})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}


def run(cid: int, **kwargs) -> CriterionResult:
    if cid not in CRITERIA:
        raise ValueError(f"unknown criterion {cid}; choose 1..{len(CRITERIA)}")
    return CRITERIA[cid](**kwargs)
