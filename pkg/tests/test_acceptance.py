"""The ten acceptance criteria at their stated tolerances and time budgets.

Each test prints one ``[PASS]``/``[FAIL]`` line (visible with ``pytest -v``
or ``-s``) and fails if its criterion does.
"""
import pytest

from dynloc.acceptance import CRITERIA


@pytest.mark.parametrize("number", range(1, 11), ids=lambda k: f"criterion_{k}")
def test_criterion(number, capsys):
    result = CRITERIA[number - 1]()
    with capsys.disabled():
        print("\n" + result.line)
    assert result.number == number
    assert result.passed, result.line
