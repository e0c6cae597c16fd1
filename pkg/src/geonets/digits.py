"""Exact base-b digit arithmetic.

Two digit orders are in use.  Integer expansions ``i = sum a_k b**(k-1)`` are
stored least significant first.  Fractional expansions ``x = sum a_k b**-k``
(:class:`DigitVector`) are stored most significant first, so ``digits[0]`` is
the digit that picks the level-1 cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_BASE = 64


def default_depth(b: int) -> int:
    """Number of base-``b`` digits that survive conversion to a double."""
    _check_base(b)
    return int(52 // math.log2(b))


def _check_base(b: int) -> None:
    if not 2 <= b <= MAX_BASE:
        raise ValueError(f"base must be in [2, {MAX_BASE}], got {b}")


@dataclass(frozen=True)
class DigitVector:
    """Fractional base-``b`` expansion ``0.a_1 a_2 ... a_K``."""

    base: int
    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_base(self.base)
        object.__setattr__(self, "digits", tuple(int(a) for a in self.digits))
        for a in self.digits:
            if not 0 <= a < self.base:
                raise ValueError(f"digit {a} out of range for base {self.base}")

    @property
    def depth(self) -> int:
        return len(self.digits)

    @classmethod
    def from_value(cls, x: float | Fraction, base: int, depth: int | None = None) -> DigitVector:
        """Truncated expansion of ``x`` in [0, 1); canonical (trailing zeros) form."""
        depth = default_depth(base) if depth is None else depth
        x = Fraction(x)
        if not 0 <= x < 1:
            raise ValueError("value must lie in [0, 1)")
        out = []
        for _ in range(depth):
            x *= base
            a = int(x)  # floor for nonnegative x
            out.append(a)
            x -= a
        return cls(base, tuple(out))

    def value(self) -> float:
        return digits_to_value(self)

    def exact(self) -> Fraction:
        num = 0
        for a in self.digits:
            num = num * self.base + a
        return Fraction(num, self.base ** self.depth)


def int_to_digits(i: int, b: int, K: int) -> list[int]:
    """Digits of ``i`` in base ``b``, least significant first, exactly ``K`` of them."""
    _check_base(b)
    if i < 0:
        raise ValueError("i must be nonnegative")
    if i >= b ** K:
        raise OverflowError(f"{i} needs more than {K} base-{b} digits")
    out = []
    for _ in range(K):
        i, a = divmod(i, b)
        out.append(a)
    return out


def radical_inverse(i: int, b: int) -> float:
    """Van der Corput radical inverse ``sum a_k(i) b**-k``."""
    _check_base(b)
    if i < 0:
        raise ValueError("i must be nonnegative")
    num, den = 0, 1
    while i:
        i, a = divmod(i, b)
        num = num * b + a
        den *= b
    return num / den


def digits_to_value(d: DigitVector) -> float:
    # integer numerator keeps the sum exact until the final division
    return float(d.exact())


def digit_matrix_to_values(digits: np.ndarray, b: int) -> np.ndarray:
    """Vectorised ``digits_to_value`` over the last axis of an integer array."""
    digits = np.asarray(digits)
    K = digits.shape[-1]
    if b ** K > 2 ** 62:
        # too deep for an int64 numerator; only the leading digits matter for a double
        K = int(62 // math.log2(b))
        digits = digits[..., :K]
    num = np.zeros(digits.shape[:-1], dtype=np.int64)
    for k in range(K):
        num = num * b + digits[..., k]
    return num / float(b ** K)


def int_digit_matrix(indices: np.ndarray, b: int, K: int) -> np.ndarray:
    """Digits of each index, least significant first, shape ``(n, K)``."""
    idx = np.asarray(indices, dtype=np.int64).copy()
    out = np.empty(idx.shape + (K,), dtype=np.int64)
    for k in range(K):
        out[..., k] = idx % b
        idx //= b
    if np.any(idx):
        raise OverflowError(f"indices need more than {K} base-{b} digits")
    return out
