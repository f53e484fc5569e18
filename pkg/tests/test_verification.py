import time

from snapspiral.verification import run_all


def test_all_oracles_pass():
    t0 = time.perf_counter()
    results = run_all()
    elapsed = time.perf_counter() - t0
    failed = [r.line() for r in results if not r.passed]
    assert not failed, "\n".join(failed)
    assert len(results) >= 6
    # the truss continuation oracles must stay within their runtime budget
    assert elapsed < 30.0
