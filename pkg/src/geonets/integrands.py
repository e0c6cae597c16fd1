"""Catalog of test integrands with known mean and variance.

Most entries are products ``f(x) = prod_j g_j(x_j)`` of one factor function
per region, so ``mu = prod E g_j`` and ``sigma^2 = prod E g_j^2 - mu^2``.
Factor moments are closed forms for the default roots (unit interval,
triangle (0,0),(1,0),(0,1), unit disk, positive octant of the sphere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from geonets.regions import DEFAULT_ROOTS, ProductSpace, locate

SMOOTHNESS = ("smooth", "discontinuous", "L2-only")


@dataclass(frozen=True)
class Integrand:
    """``fn`` takes one ``(n, dim)`` point array per factor and returns ``n`` values."""

    name: str
    variants: tuple[str, ...]
    fn: Callable[[list[np.ndarray]], np.ndarray]
    smoothness: str = "smooth"
    mu: float | None = None
    sigma2: float | None = None

    def __post_init__(self) -> None:
        if self.smoothness not in SMOOTHNESS:
            raise ValueError(f"smoothness must be one of {SMOOTHNESS}")

    @property
    def s(self) -> int:
        return len(self.variants)

    def __call__(self, xs: list[np.ndarray]) -> np.ndarray:
        n = len(xs[0])
        return np.broadcast_to(np.asarray(self.fn(xs), dtype=np.float64), (n,))


# ---------------------------------------------------------------- polynomials

def _monomial_mean(variant: str, exps: tuple[int, ...]) -> float:
    if variant == "interval":
        return 1.0 / (exps[0] + 1)
    if variant == "triangle":
        p, q = exps
        return 2.0 * math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)
    if variant == "polar":
        p, q = exps
        if p % 2 or q % 2:
            return 0.0
        g = math.gamma
        return 2.0 * g((p + 1) / 2) * g((q + 1) / 2) / g((p + q + 2) / 2) / (math.pi * (p + q + 2))
    p, q, r = exps
    g = math.gamma
    # octant average of x^p y^q z^r over area pi/2
    return 0.25 * g((p + 1) / 2) * g((q + 1) / 2) * g((r + 1) / 2) / g((p + q + r + 3) / 2) / (math.pi / 2)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _poly_mean(variant: str, poly: dict) -> float:
    return sum(c * _monomial_mean(variant, e) for e, c in poly.items())


def _poly_eval(poly: dict, x: np.ndarray) -> np.ndarray:
    out = np.zeros(len(x))
    for e, c in poly.items():
        term = np.full(len(x), c)
        for i, p in enumerate(e):
            if p:
                term = term * x[:, i] ** p
        out += term
    return out


_SMOOTH_POLYS = {
    "interval": {(1,): 1.0, (2,): 1.0},
    "triangle": {(2, 0): 1.0, (1, 1): 1.0, (0, 1): 1.0},
    "polar": {(2, 0): 1.0, (1, 1): 1.0, (0, 1): 1.0},
    "spherical": {(2, 0, 0): 1.0, (0, 1, 1): 1.0, (0, 0, 1): 1.0},
}


@dataclass(frozen=True)
class _Factor:
    g: Callable[[np.ndarray], np.ndarray]
    mean: float
    second: float


def _smooth_factor(variant: str) -> _Factor:
    poly = _SMOOTH_POLYS[variant]
    return _Factor(lambda x, p=poly: _poly_eval(p, x), _poly_mean(variant, poly),
                   _poly_mean(variant, _poly_mul(poly, poly)))


def _step_factor(variant: str) -> _Factor:
    if variant == "interval":
        p, g = 1 / 3, lambda x: (x[:, 0] < 1 / 3).astype(float)
    elif variant == "triangle":
        p, g = 0.49, lambda x: (x[:, 0] > 0.3).astype(float)
    elif variant == "polar":
        h = 0.25
        p = (math.acos(h) - h * math.sqrt(1 - h * h)) / math.pi

        def g(x):
            return (x[:, 0] > h).astype(float)
    else:
        # z is uniform on [0, 1] over the octant
        p, g = 0.5, lambda x: (x[:, 2] > 0.5).astype(float)
    return _Factor(g, p, p)


def _cusp_factor(variant: str) -> _Factor:
    if variant == "interval":
        c = 1 / 3
        return _Factor(lambda x: np.abs(x[:, 0] - c) ** -0.25,
                       (4 / 3) * (c ** 0.75 + (1 - c) ** 0.75), 2 * (c ** 0.5 + (1 - c) ** 0.5))
    if variant == "triangle":
        # r^(-1/2) about the vertex (0, 0)
        mean = 2 * integrate.quad(lambda t: (2 / 3) * (math.cos(t) + math.sin(t)) ** -1.5, 0, math.pi / 2,
                                  epsabs=1e-14, epsrel=1e-13)[0]
        return _Factor(lambda x: np.hypot(x[:, 0], x[:, 1]) ** -0.5, mean,
                       2 * math.sqrt(2) * math.log(1 + math.sqrt(2)))
    if variant == "polar":
        return _Factor(lambda x: np.hypot(x[:, 0], x[:, 1]) ** -0.5, 4 / 3, 2.0)
    # (chord distance to the pole (0,0,1))^(-1/2) = (2(1 - z))^(-1/4)
    return _Factor(lambda x: (2 * (1 - x[:, 2])) ** -0.25, 2 ** -0.25 * 4 / 3, math.sqrt(2))


_FAMILIES = {
    "smooth": (_smooth_factor, "smooth"),
    "step": (_step_factor, "discontinuous"),
    "cusp": (_cusp_factor, "L2-only"),
}

CATALOG = ("smooth", "step", "cusp", "cell", "product", "const")


def _default_roots(space: ProductSpace) -> bool:
    return all(r == DEFAULT_ROOTS[sc.variant] for r, sc in space.factors)


def make_integrand(name: str, space: ProductSpace) -> Integrand:
    """Build catalog integrand ``name`` on ``space``.

    ``smooth``, ``step`` and ``cusp`` are products over all factors.
    ``cell`` is the indicator that factor 1 lies in its level-1 cell 0.
    ``product`` is ``x_1 x_2 ... x_s`` on interval factors.  ``const`` is 7.
    Moments are ``None`` when a factor uses a non-default root.
    """
    variants = tuple(sc.variant for _, sc in space.factors)
    known = _default_roots(space)
    if name in _FAMILIES:
        make, smooth = _FAMILIES[name]
        facs = [make(v) for v in variants]

        def fn(xs, facs=facs):
            out = facs[0].g(xs[0])
            for fac, x in zip(facs[1:], xs[1:]):
                out = out * fac.g(x)
            return out

        mu = math.prod(f.mean for f in facs)
        sigma2 = math.prod(f.second for f in facs) - mu * mu
        return Integrand(name, variants, fn, smooth, mu if known else None, sigma2 if known else None)
    if name == "cell":
        root, scheme = space.factors[0]
        b = scheme.base
        return Integrand(name, variants, lambda xs: (locate(xs[0], root, scheme, 1) == 0).astype(float),
                         "discontinuous", 1 / b, (1 / b) * (1 - 1 / b))
    if name == "product":
        if any(v != "interval" for v in variants):
            raise ValueError("the product integrand is defined on interval factors only")

        def prod(xs):
            out = xs[0][:, 0]
            for x in xs[1:]:
                out = out * x[:, 0]
            return out

        mu = 0.5 ** space.s
        return Integrand(name, variants, prod, "smooth", mu if known else None,
                         (3.0 ** -space.s - mu * mu) if known else None)
    if name == "const":
        return Integrand(name, variants, lambda xs: np.full(len(xs[0]), 7.0), "smooth", 7.0, 0.0)
    raise ValueError(f"unknown integrand {name!r}; choose from {', '.join(CATALOG)}")
