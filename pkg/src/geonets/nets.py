"""Digital (t,m,s)-nets in digit form and exhaustive net verification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from geonets.digits import default_depth, digit_matrix_to_values, int_digit_matrix


class NetConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class NetSpec:
    b: int
    s: int
    m: int
    t: int = 0
    generators: tuple[np.ndarray, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.b < 2:
            raise ValueError("base must be at least 2")
        if self.s < 1:
            raise ValueError("need at least one dimension")
        if not 0 <= self.t <= self.m:
            raise ValueError(f"need 0 <= t <= m, got t={self.t}, m={self.m}")

    @property
    def n(self) -> int:
        return self.b ** self.m


@dataclass(frozen=True)
class PointSet:
    """``n`` points in ``[0,1)^s`` held as base-``b`` digits.

    ``digits`` has shape ``(n, s, K)`` with the most significant fractional
    digit first.  Digits past the net's ``m`` meaningful ones are zero until
    the set is scrambled.
    """

    spec: NetSpec
    digits: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.digits)
        if d.ndim != 3 or d.shape[1] != self.spec.s:
            raise ValueError(f"digits must have shape (n, {self.spec.s}, K), got {d.shape}")
        if d.size and (d.min() < 0 or d.max() >= self.spec.b):
            raise ValueError("digit out of range")
        object.__setattr__(self, "digits", d.astype(np.uint8 if self.spec.b <= 256 else np.int64))

    @property
    def n(self) -> int:
        return self.digits.shape[0]

    @property
    def depth(self) -> int:
        return self.digits.shape[2]

    def values(self) -> np.ndarray:
        """Coordinates as doubles, shape ``(n, s)``."""
        return digit_matrix_to_values(self.digits, self.spec.b)

    def with_depth(self, K: int) -> PointSet:
        """Truncate or zero-pad the digit expansions to ``K`` digits."""
        cur = self.depth
        if K <= cur:
            return PointSet(self.spec, self.digits[:, :, :K])
        pad = np.zeros(self.digits.shape[:2] + (K - cur,), dtype=self.digits.dtype)
        return PointSet(self.spec, np.concatenate([self.digits, pad], axis=2))


def is_prime(b: int) -> bool:
    if b < 2:
        return False
    return all(b % p for p in range(2, int(b ** 0.5) + 1))


def pascal_matrix(m: int, b: int) -> np.ndarray:
    """Upper triangular Pascal matrix mod ``b``: entry (r, c) is C(c, r)."""
    P = np.zeros((m, m), dtype=np.int64)
    for r in range(m):
        for c in range(r, m):
            P[r, c] = comb(c, r) % b
    return P


def _matpow_mod(P: np.ndarray, e: int, b: int) -> np.ndarray:
    out = np.eye(P.shape[0], dtype=np.int64)
    for _ in range(e):
        out = (out @ P) % b
    return out


def digital_net(b: int, m: int, generators: list[np.ndarray] | tuple[np.ndarray, ...], t: int = 0,
                depth: int | None = None) -> PointSet:
    """Digital net from ``s`` generator matrices of shape ``(m, m)`` over Z_b.

    Point ``i`` has coordinate-``j`` digits ``C_j @ digits(i) mod b`` where
    ``digits(i)`` lists the base-``b`` digits of ``i`` least significant first.
    The claimed quality ``t`` is recorded, not checked; use :func:`verify_net`.
    """
    K = default_depth(b) if depth is None else depth
    if K < m:
        raise ValueError(f"depth {K} cannot hold {m} digits")
    gens = tuple(np.asarray(C, dtype=np.int64) % b for C in generators)
    for C in gens:
        if C.shape != (m, m):
            raise ValueError(f"generator matrices must be {m}x{m}")
    n = b ** m
    a = int_digit_matrix(np.arange(n), b, m)  # (n, m)
    out = np.zeros((n, len(gens), K), dtype=np.int64)
    for j, C in enumerate(gens):
        out[:, j, :m] = (a @ C.T) % b
    return PointSet(NetSpec(b, len(gens), m, t, gens), out)


def faure_net(b: int, s: int, m: int, depth: int | None = None) -> PointSet:
    """Faure (0,m,s)-net: coordinate ``j`` uses the ``j``-th power of the Pascal matrix.

    With ``s == 1`` the generator is the identity and any base ``b >= 2`` works
    (this is the van der Corput net).  For ``s >= 2`` the base must be a prime
    with ``s <= b``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if s < 1:
        raise NetConstructionError("need s >= 1")
    if s > 1 and not is_prime(b):
        raise NetConstructionError(f"base {b} is not prime; the built-in construction needs a prime base for s > 1")
    if s > b:
        raise NetConstructionError(f"Faure construction needs s <= b, got s={s}, b={b}")
    P = pascal_matrix(m, b)
    gens = [_matpow_mod(P, j, b) for j in range(s)]
    return digital_net(b, m, gens, t=0, depth=depth)


def vdc_points(b: int, n: int, depth: int | None = None) -> PointSet:
    """First ``n`` van der Corput points ``phi_b(0), ..., phi_b(n-1)``."""
    if n < 1:
        raise ValueError("n must be positive")
    K = default_depth(b) if depth is None else depth
    m = 0
    while b ** m < n:
        m += 1
    if m > K:
        raise ValueError("depth too small for n points")
    out = np.zeros((n, 1, K), dtype=np.int64)
    out[:, 0, :m] = int_digit_matrix(np.arange(n), b, m)
    return PointSet(NetSpec(b, 1, m, 0), out)


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def log_b(n: int, b: int) -> int:
    """Exact ``m`` with ``b**m == n``; raises if ``n`` is not a power of ``b``."""
    m, p = 0, 1
    while p < n:
        p *= b
        m += 1
    if p != n:
        raise ValueError(f"{n} points is not a power of base {b}")
    return m


def prefix_index(digits: np.ndarray, b: int, k: int) -> np.ndarray:
    """Integer formed by the first ``k`` digits (leading digit most significant)."""
    out = np.zeros(digits.shape[:-1], dtype=np.int64)
    for i in range(k):
        out = out * b + digits[..., i]
    return out


def box_counts(ps: PointSet, ks: tuple[int, ...]) -> np.ndarray:
    """Point counts in every b-adic box with side exponents ``ks``."""
    b = ps.spec.b
    idx = np.zeros(ps.n, dtype=np.int64)
    for j, k in enumerate(ks):
        idx = idx * b ** k + prefix_index(ps.digits[:, j, :], b, k)
    return np.bincount(idx, minlength=b ** sum(ks))


def verify_net(ps: PointSet, t: int) -> bool:
    """True iff every b-adic box of volume ``b**(t-m)`` holds exactly ``b**t`` points."""
    b, s = ps.spec.b, ps.spec.s
    m = log_b(ps.n, b)
    if not 0 <= t <= m:
        return False
    if m - t > ps.depth:
        raise ValueError("digit depth is shorter than the boxes being tested")
    target = b ** t
    for ks in compositions(m - t, s):
        if not np.all(box_counts(ps, ks) == target):
            return False
    return True


def _prime_power(b: int) -> tuple[int, int] | None:
    for p in range(2, b + 1):
        if b % p == 0:
            e, q = 0, b
            while q % p == 0:
                q //= p
                e += 1
            return (p, e) if q == 1 else None
    return None


def regroup_digits(ps: PointSet, e: int) -> PointSet:
    """Read base-``p`` digits ``e`` at a time as base-``p**e`` digits."""
    p = ps.spec.b
    b = p ** e
    if ps.spec.m % e or ps.depth % e:
        raise ValueError(f"digit counts must be multiples of {e}")
    d = ps.digits.astype(np.int64).reshape(ps.n, ps.spec.s, ps.depth // e, e)
    w = p ** np.arange(e - 1, -1, -1)
    spec = NetSpec(b, ps.spec.s, ps.spec.m // e, -(-ps.spec.t // e))
    return PointSet(spec, (d * w).sum(axis=3))


def net_for(b: int, s: int, m: int, depth: int | None = None) -> PointSet:
    """A (0,m,s)-net in base ``b``.

    Uses :func:`faure_net` when it applies.  For a prime power ``b = p**e``
    with ``s <= p``, a base-``p`` Faure (0,em,s)-net is read ``e`` digits at a
    time: each base-``b`` box of volume ``b**-m`` is a base-``p`` box of
    volume ``p**-(em)``, so it still holds exactly one point.
    """
    if s == 1 or (is_prime(b) and s <= b):
        return faure_net(b, s, m, depth)
    pe = _prime_power(b)
    if pe is None or s > pe[0]:
        raise NetConstructionError(f"base {b} is not prime (nor a power of a prime p >= s={s}); "
                                   "no built-in construction")
    p, e = pe
    K = default_depth(b) if depth is None else depth
    return regroup_digits(faure_net(p, s, e * m, depth=e * K), e)
