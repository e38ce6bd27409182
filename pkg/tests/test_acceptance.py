"""Runs every acceptance criterion at its stated tolerance.

One PASS/FAIL line per criterion is printed (and repeated in the pytest
terminal summary).  Run directly with ``python tests/test_acceptance.py``.
"""

import pytest

from majorana_berry.acceptance import CHECKS, run_check

RESULTS = []


@pytest.mark.parametrize("number", [num for num, _, _ in CHECKS],
                         ids=[f"criterion_{num}" for num, _, _ in CHECKS])
def test_criterion(number):
    result = run_check(number)
    RESULTS.append(result)
    print(result.line())
    assert result.passed, result.detail


def test_injected_tolerance_makes_a_check_fail():
    result = run_check(7, {"entanglement_identity": 0.0})
    assert not result.passed


if __name__ == "__main__":
    import sys

    failed = 0
    for num, _, _ in CHECKS:
        result = run_check(num)
        print(result.line(), flush=True)
        failed += not result.passed
    sys.exit(1 if failed else 0)
