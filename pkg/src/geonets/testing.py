"""Test-only hooks.  Nothing in the library or CLI imports this module."""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable

import numpy as np

from geonets.regions import _INTERVAL_BREAKS
from geonets.scramble import _PERMUTATION_HOOK


@contextmanager
def forced_permutations(hook: Callable):
    """Route node permutations through ``hook(j, k, prefix, digit)``.

    ``prefix`` is the integer value of the first ``k`` digits.  Return the
    permuted digits, or ``None`` to fall back to the keyed permutation.
    """
    token = _PERMUTATION_HOOK.set(hook)
    try:
        yield
    finally:
        _PERMUTATION_HOOK.reset(token)


def identity_hook(j, k, prefix, digit):
    return digit


@contextmanager
def unequal_interval_split(breaks):
    """Split intervals at cumulative fractions ``breaks`` (length ``b + 1``, from 0 to 1)."""
    br = np.asarray(breaks, dtype=np.float64)
    if br[0] != 0 or br[-1] != 1 or np.any(np.diff(br) <= 0):
        raise ValueError("breaks must increase from 0 to 1")
    token = _INTERVAL_BREAKS.set(br)
    try:
        yield
    finally:
        _INTERVAL_BREAKS.reset(token)
