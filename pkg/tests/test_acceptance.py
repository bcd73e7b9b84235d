"""Acceptance battery: one test per criterion, at the stated tolerances.

Each test prints its criterion's PASS/FAIL line plus the per-case
details, then asserts the criterion outcome.  The detail lines make a
failed sub-case immediately attributable.
"""

import pytest

from orbiteig import reproduce

NAMES = {
    1: "cone closed form",
    2: "cone/ball eigenvalue relation",
    3: "partition certificate",
    4: "second-variation integral",
    5: "tilted-family perturbation",
    6: "round-off and optimizer beat the cone",
    7: "transformation monotonicity suite",
    8: "solver property suite",
    9: "large-p trend",
}


def _report(result):
    print()
    print(result.summary())
    for line in result.lines:
        print("   ", line)


@pytest.mark.parametrize("index", sorted(NAMES))
def test_criterion(index):
    if index == 7:
        result = reproduce.criterion_7_monotonicity_suite(curves=100)
    else:
        result = reproduce.run_criterion(index)
    _report(result)
    assert result.passed, "\n".join([result.summary()] + result.lines)
