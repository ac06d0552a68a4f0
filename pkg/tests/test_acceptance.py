"""End-to-end acceptance criteria against the reference-device targets.

Each test runs one criterion from cryodrum.reproduce (the same functions
behind `cryodrum reproduce`) and prints its PASS/FAIL line; the whole suite
runs single-threaded in well under five minutes.
"""

import pytest

from cryodrum import reproduce


@pytest.mark.parametrize(
    "criterion", reproduce.CRITERIA,
    ids=[f"criterion_{i}" for i in range(1, len(reproduce.CRITERIA) + 1)])
def test_criterion(criterion):
    result = criterion()
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] {result.index}. {result.name}: {result.detail}")
    assert result.passed, result.detail


def test_format_table_reports_all():
    results = [reproduce.criterion_4_squeezing_bookkeeping(),
               reproduce.criterion_7_noise_budgets()]
    table = reproduce.format_table(results)
    assert "[PASS] 4." in table
    assert "2/2 criteria passed" in table
