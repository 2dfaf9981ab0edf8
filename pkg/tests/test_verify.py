import math

import pytest

from treecount.verify import SUITES, SuiteResult, run_suite


def test_suite_result_accounting():
    res = SuiteResult("x", required=0.5)
    res.check(0.3)
    res.check(-0.1, note="a")
    assert (res.passed, res.total) == (1, 2)
    assert res.ok and res.worst_margin == -0.1
    assert res.as_dict()["failures"] == [{"note": "a", "margin": -0.1}]
    assert not SuiteResult("empty").ok
    assert SuiteResult("empty").as_dict()["worst_margin"] is None


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope", 0)


@pytest.mark.parametrize("name,trials", [("elimination", 200), ("localization", 100), ("subset", 200), ("estimators", 40)])
def test_suites_pass(name, trials):
    res = run_suite(name, 1, trials)
    assert res.total == trials
    assert res.ok, res.failures


def test_end2end_small():
    res = run_suite("end2end", 1, 10)
    assert res.total == 10 and res.ok
    assert math.isfinite(res.worst_margin)


def test_registry():
    assert set(SUITES) == {"elimination", "localization", "subset", "estimators", "end2end"}
