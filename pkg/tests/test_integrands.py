from __future__ import annotations

import math
import zlib

import numpy as np
import pytest

from geonets.integrands import CATALOG, Integrand, make_integrand
from geonets.regions import Interval, ProductSpace

N = 400_000


def uniform(variant: str, rng: np.random.Generator, n: int) -> np.ndarray:
    """Direct uniform samplers on the default roots, independent of phi."""
    if variant == "interval":
        return rng.random((n, 1))
    if variant == "triangle":
        u = rng.random((n, 2))
        flip = u.sum(axis=1) > 1
        u[flip] = 1 - u[flip]
        return u
    if variant == "polar":
        r = np.sqrt(rng.random(n))
        th = 2 * np.pi * rng.random(n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    g = np.abs(rng.standard_normal((n, 3)))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


SPACES = [["interval-b2"], ["triangle-b2"], ["disk-aspect-b2"], ["sphertri-b2"], ["triangle-b4"],
          ["interval-b2", "interval-b2"], ["triangle-b2", "sphertri-b2"]]


@pytest.mark.parametrize("schemes", SPACES, ids=lambda s: "+".join(s))
@pytest.mark.parametrize("name", CATALOG)
def test_moments_match_sampling(name, schemes):
    sp = ProductSpace.of(schemes)
    if name == "product" and any(not s.startswith("interval") for s in schemes):
        with pytest.raises(ValueError):
            make_integrand(name, sp)
        return
    f = make_integrand(name, sp)
    rng = np.random.default_rng(zlib.crc32(f"{name}:{schemes}".encode()))
    v = f([uniform(sc.variant, rng, N) for _, sc in sp.factors])
    assert abs(v.mean() - f.mu) <= 4.5 * v.std() / math.sqrt(N) + 1e-15
    second = f.sigma2 + f.mu ** 2
    if name == "cusp":
        # heavy tail: check the second moment loosely
        assert np.mean(v ** 2) == pytest.approx(second, rel=0.05)
    else:
        assert abs(np.mean(v ** 2) - second) <= 4.5 * np.std(v ** 2) / math.sqrt(N) + 1e-15


def test_integrand_metadata():
    sp = ProductSpace.of(["triangle-b2"])
    f = make_integrand("cusp", sp)
    assert f.smoothness == "L2-only" and f.s == 1
    assert make_integrand("step", sp).smoothness == "discontinuous"
    with pytest.raises(ValueError):
        make_integrand("nope", sp)
    with pytest.raises(ValueError):
        Integrand("bad", ("interval",), lambda xs: xs[0], smoothness="rough")


def test_nondefault_root_has_no_moments():
    sp = ProductSpace.of(["interval-b2"], roots=[Interval(0, 2)])
    f = make_integrand("smooth", sp)
    assert f.mu is None and f.sigma2 is None
