#!/usr/bin/env python3
"""Values of the zeta valuation along PA approximations of |x|^2/2.

Prints probes, value, |value - limit|, and the Hausdorff distance of the
sublevel sets to those of the finest member.
"""
from epival import harness
from epival.valuations import zeta_oracle


def main():
    for n in (1, 2):
        rep = harness.continuity_suite(zeta_oracle(harness.continuity_zeta(n)), n,
                                       limit=harness.continuity_limit(n))
        ex = rep.extra
        print(f"n={n} limit={ex['limit']:.10f} passed={rep.passed}")
        D = ex["epi_distances"]["distances"]
        for i, (k, v, e) in enumerate(zip(ex["counts"], ex["values"], ex["errors"])):
            dist = " ".join(f"{d:.3e}" for d in D[i]) if i < len(D) else "-"
            print(f"  k={k:3d}  value={v:.10f}  error={e:.3e}  epi={dist}")


if __name__ == "__main__":
    main()
