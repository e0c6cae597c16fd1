"""Nested uniform scrambling of digit-form point sets.

The permutation applied to digit ``k+1`` of coordinate ``j`` is a function of
``(seed, replicate_id, j, k, a_1..a_k)`` only.  It is recomputed on demand
from a keyed splitmix64 hash instead of storing the ``b**K`` node tree, so all
points sharing a prefix see the same permutation and nothing depends on the
point index or on how the work is scheduled.
"""

from __future__ import annotations

import itertools
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from geonets.digits import DigitVector
from geonets.nets import PointSet, prefix_index

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)

# Permutation tables are used up to this base; larger bases shuffle in place.
_TABLE_MAX_BASE = 7

# test-only override: hook(j, k, prefix, digit) -> permuted digit array or None
_PERMUTATION_HOOK: ContextVar[Callable | None] = ContextVar("_PERMUTATION_HOOK", default=None)


@np.errstate(over="ignore")
def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = z ^ (z >> np.uint64(30))
    z = z * _C1
    z = z ^ (z >> np.uint64(27))
    z = z * _C2
    return z ^ (z >> np.uint64(31))


_S27, _S30, _S31 = np.uint64(27), np.uint64(30), np.uint64(31)


@np.errstate(over="ignore")
def _mix_inplace(z: np.ndarray) -> np.ndarray:
    """``_mix`` on a scratch array, overwriting it."""
    t = z >> _S30
    z ^= t
    z *= _C1
    np.right_shift(z, _S27, out=t)
    z ^= t
    z *= _C2
    np.right_shift(z, _S31, out=t)
    z ^= t
    return z


def _u64(x) -> np.ndarray:
    if isinstance(x, (int, np.integer)):
        return np.array(int(x) & _MASK64, dtype=np.uint64)
    return np.asarray(x).astype(np.uint64)


def _below(h: np.ndarray, bound: int) -> np.ndarray:
    """Map 64-bit hashes to integers in ``[0, bound)`` by multiply-high on the top 32 bits."""
    return (((h >> np.uint64(32)) * np.uint64(bound)) >> np.uint64(32)).astype(np.int64)


_TABLES: dict[int, np.ndarray] = {}


def _perm_table(b: int) -> np.ndarray:
    if b not in _TABLES:
        _TABLES[b] = np.array(list(itertools.permutations(range(b))), dtype=np.int64)
    return _TABLES[b]


@np.errstate(over="ignore")
def _apply_node_permutations(h: np.ndarray, a: np.ndarray, b: int) -> np.ndarray:
    """Image of digit ``a`` under the uniform permutation of Z_b keyed by ``h``."""
    if b <= _TABLE_MAX_BASE:
        table = _perm_table(b)
        return table.ravel()[_below(h, len(table)) * b + a]
    n = a.shape[0]
    perm = np.tile(np.arange(b, dtype=np.int64), (n, 1))
    rows = np.arange(n)
    for i in range(b - 1, 0, -1):
        r = _below(_mix(h + np.uint64(i) * _GOLDEN), i + 1)
        tmp = perm[rows, i].copy()
        perm[rows, i] = perm[rows, r]
        perm[rows, r] = tmp
    return perm[rows, a]


@dataclass(frozen=True)
class ScrambleKey:
    seed: int
    replicate_id: int = 0


@np.errstate(over="ignore")
def _coordinate_hash(seed, replicate, j: int) -> np.ndarray:
    h = _mix(_u64(seed) + _GOLDEN)
    h = _mix(h ^ _mix(_u64(replicate) + _C1))
    return _mix(h ^ _mix(_u64(j + 1) * _GOLDEN))


@np.errstate(over="ignore")
def scramble_digits(digits: np.ndarray, b: int, seed: int, replicate, depth: int | None = None) -> np.ndarray:
    """Nested uniform scramble of a ``(n, s, K)`` digit array.

    ``replicate`` is a scalar or one replicate id per point; the latter is how
    many independent scrambles of a single point are drawn at once.  Output
    has ``depth`` digits (default ``K``); input digits past ``K`` count as 0.
    """
    digits = np.asarray(digits)
    n, s, K = digits.shape
    depth = K if depth is None else depth
    hook = _PERMUTATION_HOOK.get()
    src = np.ascontiguousarray(np.transpose(digits, (1, 2, 0)), dtype=np.int64)
    out = np.empty((s, depth, n), dtype=np.int64)
    zeros = np.zeros(n, dtype=np.int64)
    ub = np.uint64(b)
    for j in range(s):
        hj = _coordinate_hash(seed, replicate, j)
        prefix = np.zeros(n, dtype=np.uint64)
        for k in range(depth):
            a = src[j, k] if k < K else zeros
            res = hook(j, k, prefix, a) if hook is not None else None
            if res is None:
                hk = _mix(hj ^ _mix(np.uint64(k) * _C2 + _GOLDEN))
                z = prefix * _GOLDEN
                z ^= hk
                res = _apply_node_permutations(_mix_inplace(z), a, b)
            out[j, k] = res
            prefix *= ub
            prefix += a.view(np.uint64)
    return np.transpose(out, (2, 0, 1))


def scramble_point_set(ps: PointSet, key: ScrambleKey, depth: int | None = None) -> PointSet:
    """Apply one nested uniform scramble (the same tree to every point)."""
    if ps.depth < 1:
        raise ValueError("point set has no digits to scramble")
    d = scramble_digits(ps.digits, ps.spec.b, key.seed, key.replicate_id, depth)
    return PointSet(ps.spec, d)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    counts: np.ndarray

    @property
    def pvalue(self) -> float:
        return float(stats.chi2.sf(self.statistic, self.dof))

    def passes(self, level: float = 0.999) -> bool:
        return self.statistic <= stats.chi2.ppf(level, self.dof)


def chi_square(counts: np.ndarray, expected: np.ndarray | None = None) -> ChiSquareResult:
    counts = np.asarray(counts, dtype=np.float64)
    if expected is None:
        expected = np.full(counts.shape, counts.sum() / counts.size)
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return ChiSquareResult(stat, counts.size - 1, counts.astype(np.int64))


def uniformity_check(point: Sequence[DigitVector] | DigitVector, seed: int, trials: int, level: int,
                     first_replicate: int = 0) -> ChiSquareResult:
    """Chi-square of the depth-``level`` cells hit by ``trials`` independent scrambles of one point."""
    if isinstance(point, DigitVector):
        point = [point]
    b = point[0].base
    if any(p.base != b for p in point):
        raise ValueError("all coordinates must share a base")
    s = len(point)
    cells = b ** (level * s)
    if trials < 50 * cells:
        raise ValueError(f"need at least {50 * cells} trials for {cells} cells, got {trials}")
    K = max(level, max(p.depth for p in point))
    base = np.zeros((s, K), dtype=np.int64)
    for j, p in enumerate(point):
        base[j, :p.depth] = p.digits
    digits = np.broadcast_to(base, (trials, s, K))
    reps = np.arange(first_replicate, first_replicate + trials, dtype=np.int64)
    x = scramble_digits(digits, b, seed, reps, depth=level)
    idx = np.zeros(trials, dtype=np.int64)
    for j in range(s):
        idx = idx * b ** level + prefix_index(x[:, j, :], b, level)
    return chi_square(np.bincount(idx, minlength=cells))
