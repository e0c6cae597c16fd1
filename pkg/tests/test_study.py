from __future__ import annotations

import pytest

from geonets.integrands import make_integrand
from geonets.regions import ProductSpace
from geonets.study import BudgetError, StudyRow, check_budget, convergence_study, fit_slope, top_half


def test_top_half():
    assert top_half(range(4, 11)) == [7, 8, 9, 10]
    assert top_half([2, 3]) == [3]
    assert top_half([5, 1, 3, 2]) == [3, 5]


def test_fit_slope_exact_power_law():
    rows = [StudyRow(m, "plain-MC", 2 ** m, 0.0, 3.0 * (2 ** m) ** -2.25, 0.0) for m in range(3, 11)]
    rows[0] = StudyRow(3, "plain-MC", 8, 0.0, 1e9, 0.0)  # outside the fitted half
    assert fit_slope(rows, "plain-MC") == pytest.approx(-2.25, abs=1e-12)


def test_fit_slope_errors():
    rows = [StudyRow(4, "plain-MC", 16, 0.0, 1.0, 0.0)]
    with pytest.raises(ValueError):
        fit_slope(rows, "plain-MC")
    zero = [StudyRow(m, "plain-MC", 2 ** m, 0.0, 0.0, 0.0) for m in range(4)]
    with pytest.raises(ValueError):
        fit_slope(zero, "plain-MC")


def test_budget_guard():
    check_budget(2, 16, 30, 2)
    with pytest.raises(BudgetError):
        check_budget(2, 26, 30, 1)


def test_small_study():
    sp = ProductSpace.of(["interval-b2"])
    f = make_integrand("smooth", sp)
    rows = convergence_study(f, sp, range(2, 8), 20, seed=4)
    assert [(r.m, r.method) for r in rows[:2]] == [(2, "scrambled-geometric-net"), (2, "plain-MC")]
    assert all(r.n == 2 ** r.m for r in rows)
    assert fit_slope(rows, "scrambled-geometric-net") < -2
    assert fit_slope(rows, "plain-MC") == pytest.approx(-1, abs=0.15)
    with pytest.raises(ValueError):
        convergence_study(f, sp, [2, 3], 5, 1, methods=("bogus",))
