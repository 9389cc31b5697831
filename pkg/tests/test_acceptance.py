"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import json

import pytest

from heins_lab import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda fn: fn.__name__)
def test_criterion(criterion, capsys):
    res = criterion()
    with capsys.disabled():
        print(f"\n[{'PASS' if res['passed'] else 'FAIL'}] {res['name']}: {res['seconds']:.1f}s "
              f"(limit {res['limit']:.0f}s)")
    assert res["checks_passed"], json.dumps(res["details"], default=str)[:4000]
    assert res["seconds"] < res["limit"]
