"""One check per acceptance criterion; each prints a PASS/FAIL line with its sub-items.

The same checks run from the command line with ``lll-lab repro <id|name|all>``.
"""

import pytest

from lll_lab.acceptance import CRITERIA, run_check


@pytest.mark.parametrize("cid", list(CRITERIA), ids=[f"{k}-{v[0]}" for k, v in CRITERIA.items()])
def test_criterion(cid, capsys):
    res = run_check(cid)
    with capsys.disabled():
        print()
        print("\n".join(res.lines()))
    failed = [f"{i.label}: {i.detail}" for i in res.items if not i.passed]
    assert res.passed, "; ".join(failed)
