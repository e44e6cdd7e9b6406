"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the lines alone.
"""

import sys

import pytest

from jsqlab.acceptance import CRITERIA, SuiteContext

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []


@pytest.fixture(scope="module")
def ctx():
    return SuiteContext(seed=0)


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, ctx):
    res = CRITERIA[number](ctx)
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, line


if __name__ == "__main__":
    shared = SuiteContext(seed=0)
    ok = True
    for number in sorted(CRITERIA):
        res = CRITERIA[number](shared)
        print(res.line(), flush=True)
        ok = ok and res.passed
    sys.exit(0 if ok else 1)
