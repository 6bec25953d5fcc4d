"""Outcome of each acceptance criterion, filled in by test_acceptance."""
RESULTS: dict = {}


def record(number, ok, detail=""):
    RESULTS[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {number} failed: {detail}"
