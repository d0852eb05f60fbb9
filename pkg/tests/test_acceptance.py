"""One pass/fail line per acceptance criterion; thresholds live in epival.repro."""
import time

import pytest

from epival import repro


@pytest.mark.slow
@pytest.mark.parametrize("cid", sorted(repro.CRITERIA))
def test_criterion(cid, acceptance_log):
    t0 = time.perf_counter()
    res = repro.run(cid)
    line = f"{res.line()} [{time.perf_counter() - t0:.1f}s]"
    acceptance_log.append(line)
    print(line)
    assert res.passed, line
