"""Convergence studies: replicate variance against n on log-log axes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from geonets.integrands import Integrand
from geonets.nets import NetSpec
from geonets.quad import EstimateReport, monte_carlo, replicate_variance
from geonets.regions import ProductSpace

METHODS = ("scrambled-geometric-net", "plain-MC")

# Largest b**m_max * R * s a study may request.
POINT_BUDGET = 2 ** 26


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class StudyRow:
    m: int
    method: str
    n: int
    mean: float
    variance: float
    stderr: float


def top_half(m_values) -> list[int]:
    """The largest ``ceil(len/2)`` levels, where pre-asymptotic effects have faded."""
    ms = sorted(m_values)
    return ms[len(ms) // 2:]


def fit_slope(rows: list[StudyRow], method: str) -> float:
    """Least-squares slope of log variance against log n over the top half of the m range."""
    sel = [r for r in rows if r.method == method]
    keep = set(top_half([r.m for r in sel]))
    pts = [(math.log(r.n), math.log(r.variance)) for r in sel if r.m in keep]
    if len(pts) < 2:
        raise ValueError("need at least two levels to fit a slope")
    if any(not math.isfinite(y) for _, y in pts):
        raise ValueError("cannot fit a slope through zero variance")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def check_budget(b: int, m_max: int, R: int, s: int) -> None:
    need = b ** m_max * R * s
    if need > POINT_BUDGET:
        raise BudgetError(f"b^m_max * R * s = {need} exceeds the budget of {POINT_BUDGET}")


def convergence_study(f: Integrand, space: ProductSpace, m_values, R: int, seed: int,
                      methods=METHODS, depth: int | None = None) -> list[StudyRow]:
    """One row per ``(m, method)``; scrambled nets use ``net_for(b, s, m)``."""
    m_values = sorted(m_values)
    b, s = space.base, space.s
    check_budget(b, m_values[-1], R, s)
    for meth in methods:
        if meth not in METHODS:
            raise ValueError(f"unknown method {meth!r}; choose from {', '.join(METHODS)}")
    rows = []
    for m in m_values:
        for meth in methods:
            if meth == "scrambled-geometric-net":
                rep: EstimateReport = replicate_variance(f, space, NetSpec(b, s, m), seed, R, depth)
            else:
                rep = monte_carlo(f, space, b ** m, seed, R, depth)
            rows.append(StudyRow(m, meth, rep.n, rep.mean, rep.variance, rep.stderr))
    return rows
