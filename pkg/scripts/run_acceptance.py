#!/usr/bin/env python3
"""Run acceptance criteria and print one line each.

    python3 scripts/run_acceptance.py            # all
    python3 scripts/run_acceptance.py 1 7 12     # a subset
    python3 scripts/run_acceptance.py --json out.json
"""
import argparse
import sys
import time

from epival import repro
from epival.serialize import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("ids", nargs="*", type=int)
    ap.add_argument("--json", default=None, help="write full results here")
    args = ap.parse_args()
    ids = args.ids or sorted(repro.CRITERIA)
    results, ok = [], True
    for cid in ids:
        t0 = time.perf_counter()
        res = repro.run(cid)
        print(f"{res.line()} [{time.perf_counter() - t0:.1f}s]", flush=True)
        results.append(res)
        ok &= res.passed
    if args.json:
        write_json(results, args.json)
    return 0 if ok else 4


if __name__ == "__main__":
    sys.exit(main())
