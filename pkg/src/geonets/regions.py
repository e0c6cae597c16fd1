"""Regions, recursive equal-volume splits and the digit-to-region map.

Every split works on batches: a region variant is stored as a float array
with one row per cell (``(n, 2)`` interval bounds, ``(n, 3, 2)`` triangle
vertices, ``(n, 4)`` polar bounds ``r_lo, r_hi, theta_lo, theta_hi``,
``(n, 3, 3)`` spherical triangle vertices) and one digit per row picks the
child.  The scalar helpers below are thin wrappers over size-1 batches, so
there is a single implementation of each rule.
"""

from __future__ import annotations

import math
from contextvars import ContextVar
from dataclasses import dataclass
from typing import ClassVar, Sequence, Union

import numpy as np

from geonets.digits import DigitVector, default_depth
from geonets.scramble import ChiSquareResult, chi_square, scramble_digits


class NonConvergentSplitError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float = 0.0
    hi: float = 1.0

    variant: ClassVar[str] = "interval"
    dim: ClassVar[int] = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError("interval needs finite lo < hi")

    def _row(self) -> np.ndarray:
        return np.array([self.lo, self.hi], dtype=np.float64)

    @classmethod
    def _from_row(cls, row: np.ndarray) -> Interval:
        return cls(float(row[0]), float(row[1]))

    @property
    def volume(self) -> float:
        return self.hi - self.lo


def _pt(p, size: int) -> tuple[float, ...]:
    p = tuple(float(x) for x in p)
    if len(p) != size:
        raise ValueError(f"expected a {size}-vector, got {p}")
    return p


@dataclass(frozen=True)
class Triangle:
    A: tuple[float, float] = (0.0, 0.0)
    B: tuple[float, float] = (1.0, 0.0)
    C: tuple[float, float] = (0.0, 1.0)

    variant: ClassVar[str] = "triangle"
    dim: ClassVar[int] = 2

    def __post_init__(self) -> None:
        for name in "ABC":
            object.__setattr__(self, name, _pt(getattr(self, name), 2))
        if not self.volume > 0:
            raise ValueError("degenerate triangle")

    def _row(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C], dtype=np.float64)

    @classmethod
    def _from_row(cls, row: np.ndarray) -> Triangle:
        return cls(tuple(row[0]), tuple(row[1]), tuple(row[2]))

    @property
    def volume(self) -> float:
        return float(_triangle_area(self._row()[None])[0])


@dataclass(frozen=True)
class PolarCell:
    """Annular sector ``r_lo <= r < r_hi``, ``theta_lo <= theta < theta_hi``.

    Angles are kept unwrapped (``theta_hi > theta_lo``, possibly past 2*pi);
    they are reduced only when points are emitted.
    """

    r_lo: float = 0.0
    r_hi: float = 1.0
    theta_lo: float = 0.0
    theta_hi: float = 2 * math.pi

    variant: ClassVar[str] = "polar"
    dim: ClassVar[int] = 2

    def __post_init__(self) -> None:
        if not (0 <= self.r_lo < self.r_hi and math.isfinite(self.r_hi)):
            raise ValueError("polar cell needs 0 <= r_lo < r_hi")
        if not (self.theta_lo < self.theta_hi <= self.theta_lo + 2 * math.pi + 1e-12):
            raise ValueError("polar cell needs 0 < theta_hi - theta_lo <= 2*pi")

    def _row(self) -> np.ndarray:
        return np.array([self.r_lo, self.r_hi, self.theta_lo, self.theta_hi], dtype=np.float64)

    @classmethod
    def _from_row(cls, row: np.ndarray) -> PolarCell:
        return cls(*(float(x) for x in row))

    @property
    def volume(self) -> float:
        return float(_polar_area(self._row()[None])[0])


@dataclass(frozen=True)
class SphericalTriangle:
    A: tuple[float, float, float] = (1.0, 0.0, 0.0)
    B: tuple[float, float, float] = (0.0, 1.0, 0.0)
    C: tuple[float, float, float] = (0.0, 0.0, 1.0)

    variant: ClassVar[str] = "spherical"
    dim: ClassVar[int] = 2

    def __post_init__(self) -> None:
        for name in "ABC":
            p = _pt(getattr(self, name), 3)
            if abs(math.hypot(*p) - 1.0) > 1e-12:
                raise ValueError(f"vertex {name} is not a unit vector")
            object.__setattr__(self, name, p)
        if abs(np.linalg.det(self._row())) < 1e-300:
            raise ValueError("degenerate spherical triangle")

    def _row(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C], dtype=np.float64)

    @classmethod
    def _from_row(cls, row: np.ndarray) -> SphericalTriangle:
        row = row / np.linalg.norm(row, axis=1, keepdims=True)
        return cls(tuple(row[0]), tuple(row[1]), tuple(row[2]))

    @property
    def volume(self) -> float:
        return spherical_area(self)


Region = Union[Interval, Triangle, PolarCell, SphericalTriangle]


@dataclass(frozen=True)
class SplitScheme:
    """A recursive split rule and its base, named like ``triangle-b4``."""

    rule: str
    base: int

    RULES: ClassVar[dict[str, str]] = {
        "interval": "interval",
        "triangle": "triangle",
        "disk-aspect": "polar",
        "sphertri": "spherical",
    }

    def __post_init__(self) -> None:
        if self.rule not in self.RULES:
            raise ValueError(f"unknown split rule {self.rule!r}")
        if self.rule == "interval" and not 2 <= self.base <= 64:
            raise ValueError("interval splits need 2 <= b <= 64")
        if self.rule == "triangle" and self.base not in (2, 3, 4):
            raise ValueError("triangle splits exist for b = 2, 3, 4")
        if self.rule in ("disk-aspect", "sphertri") and self.base != 2:
            raise ValueError(f"{self.rule} splits are binary")

    @classmethod
    def parse(cls, name: str) -> SplitScheme:
        rule, sep, b = name.rpartition("-b")
        if not sep or not b.isdigit():
            raise ValueError(f"bad scheme name {name!r}; expected e.g. 'triangle-b4'")
        return cls(rule, int(b))

    @property
    def name(self) -> str:
        return f"{self.rule}-b{self.base}"

    @property
    def variant(self) -> str:
        return self.RULES[self.rule]

    @property
    def convergent(self) -> bool:
        return not (self.rule == "triangle" and self.base == 3)

    def __str__(self) -> str:
        return self.name


def _check_compatible(r: Region, scheme: SplitScheme) -> None:
    if r.variant != scheme.variant:
        raise ValueError(f"scheme {scheme} does not apply to a {r.variant} region")


# test-only override of interval split points (cumulative fractions, length b+1)
_INTERVAL_BREAKS: ContextVar[np.ndarray | None] = ContextVar("_INTERVAL_BREAKS", default=None)


# ---------------------------------------------------------------- batch geometry

def _triangle_area(V: np.ndarray) -> np.ndarray:
    e1 = V[:, 1] - V[:, 0]
    e2 = V[:, 2] - V[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _polar_area(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P[:, 3] - P[:, 2]) * (P[:, 1] - P[:, 0]) * (P[:, 1] + P[:, 0])


def _sph_area(V: np.ndarray) -> np.ndarray:
    """Spherical excess via tan(E/2) = |A.(BxC)| / (1 + A.B + B.C + C.A).

    The triple product is formed from edge vectors, which keeps its relative
    accuracy for very small cells.
    """
    A, B, C = V[:, 0], V[:, 1], V[:, 2]
    triple = np.einsum("ij,ij->i", A, np.cross(B - A, C - A))
    denom = 1.0 + np.einsum("ij,ij->i", A, B) + np.einsum("ij,ij->i", B, C) + np.einsum("ij,ij->i", C, A)
    return 2.0 * np.arctan2(np.abs(triple), denom)


def _polar_centroid_radius(P: np.ndarray) -> np.ndarray:
    lo, hi = P[:, 0], P[:, 1]
    # (2/3)(hi^3 - lo^3)/(hi^2 - lo^2) without the cancellation
    return (2.0 / 3.0) * (hi * hi + hi * lo + lo * lo) / (hi + lo)


def _polar_aspect(P: np.ndarray) -> np.ndarray:
    return (P[:, 3] - P[:, 2]) * _polar_centroid_radius(P) / (P[:, 1] - P[:, 0])


def _volumes(variant: str, X: np.ndarray) -> np.ndarray:
    if variant == "interval":
        return X[:, 1] - X[:, 0]
    if variant == "triangle":
        return _triangle_area(X)
    if variant == "polar":
        return _polar_area(X)
    return _sph_area(X)


_TRIANGLE_MATRICES = {
    2: np.array([
        [[0, .5, .5], [1, 0, 0], [0, 1, 0]],
        [[0, .5, .5], [0, 0, 1], [1, 0, 0]],
    ]),
    3: np.array([
        [[1 / 3, 1 / 3, 1 / 3], [0, 1, 0], [0, 0, 1]],
        [[1 / 3, 1 / 3, 1 / 3], [0, 0, 1], [1, 0, 0]],
        [[1 / 3, 1 / 3, 1 / 3], [1, 0, 0], [0, 1, 0]],
    ]),
    4: np.array([
        [[0, .5, .5], [.5, 0, .5], [.5, .5, 0]],  # medial
        [[1, 0, 0], [.5, .5, 0], [.5, 0, .5]],  # corner at A
        [[.5, .5, 0], [0, 1, 0], [0, .5, .5]],  # corner at B
        [[.5, 0, .5], [0, .5, .5], [0, 0, 1]],  # corner at C
    ]),
}


def _split_interval(X: np.ndarray, a: np.ndarray, b: int) -> np.ndarray:
    lo, w = X[:, 0], X[:, 1] - X[:, 0]
    breaks = _INTERVAL_BREAKS.get()
    if breaks is not None:
        return np.stack([lo + w * breaks[a], lo + w * breaks[a + 1]], axis=1)
    return np.stack([lo + a * w / b, lo + (a + 1) * w / b], axis=1)


def _split_triangle(V: np.ndarray, a: np.ndarray, b: int) -> np.ndarray:
    M = _TRIANGLE_MATRICES[b][a]
    return np.einsum("nij,njk->nik", M, V)


def _split_polar(P: np.ndarray, a: np.ndarray, mode: str = "auto") -> np.ndarray:
    r_lo, r_hi, t_lo, t_hi = P.T
    if mode == "auto":
        angular = _polar_aspect(P) > 1.0
    else:
        angular = np.full(len(P), mode == "angular")
    t_mid = 0.5 * (t_lo + t_hi)
    r_mid = np.sqrt(0.5 * (r_lo * r_lo + r_hi * r_hi))
    upper = a == 1
    out = P.copy()
    ang_lo = angular & ~upper
    ang_hi = angular & upper
    rad_lo = ~angular & ~upper
    rad_hi = ~angular & upper
    out[ang_lo, 3] = t_mid[ang_lo]
    out[ang_hi, 2] = t_mid[ang_hi]
    out[rad_lo, 1] = r_mid[rad_lo]
    out[rad_hi, 0] = r_mid[rad_hi]
    return out


_BISECTION_STEPS = 52


def _sph_bisect_point(V: np.ndarray) -> np.ndarray:
    """Point P on arc BC with area(A, B, P) = area(A, B, C) / 2, by bisection."""
    A, B, C = V[:, 0], V[:, 1], V[:, 2]
    half = 0.5 * _sph_area(V)
    lo = np.zeros(len(V))
    hi = np.ones(len(V))
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        P = _arc_point(B, C, mid)
        too_big = _sph_area(np.stack([A, B, P], axis=1)) > half
        hi = np.where(too_big, mid, hi)
        lo = np.where(too_big, lo, mid)
    return _arc_point(B, C, 0.5 * (lo + hi))


def _arc_point(B: np.ndarray, C: np.ndarray, u: np.ndarray) -> np.ndarray:
    P = B + u[:, None] * (C - B)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _sph_split_point(V: np.ndarray) -> np.ndarray:
    """Closed-form point P on arc BC with area(A, B, P) = area(A, B, C) / 2.

    With Q(u) = B + u (C - B) and P = Q/|Q|, the half-angle formula for the
    spherical excess of (A, B, P) reads u |T| = tau (|Q| c0 + c0 + u beta),
    where T = A.(B x C), c0 = 1 + A.B, beta = (A + B).(C - B) and tau is
    tan of a quarter of the parent area.  Squaring, with
    |Q|^2 = 1 - 2 gamma u (1 - u) and gamma = 1 - B.C, leaves a linear
    equation for u.  All small quantities are formed from edge vectors.
    """
    A, B, C = V[:, 0], V[:, 1], V[:, 2]
    dBC = C - B
    T = np.abs(np.einsum("ij,ij->i", A, np.cross(B - A, C - A)))
    D = 1.0 + np.einsum("ij,ij->i", A, B) + np.einsum("ij,ij->i", B, C) + np.einsum("ij,ij->i", C, A)
    tau = T / (D + np.sqrt(D * D + T * T))
    c0 = 1.0 + np.einsum("ij,ij->i", A, B)
    beta = np.einsum("ij,ij->i", A + B, dBC)
    gamma = 0.5 * np.einsum("ij,ij->i", dBC, dBC)
    p = T - tau * beta
    q = tau * c0
    u = 2.0 * q * (p - gamma * q) / (p * p - 2.0 * gamma * q * q)
    return _arc_point(B, C, u)


def _split_spherical(V: np.ndarray, a: np.ndarray) -> np.ndarray:
    P = _sph_split_point(V)
    A, B, C = V[:, 0], V[:, 1], V[:, 2]
    first = (a == 0)[:, None]
    return np.stack([P, np.where(first, A, C), np.where(first, B, A)], axis=1)


def _split_batch(scheme: SplitScheme, X: np.ndarray, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if scheme.rule == "interval":
        return _split_interval(X, a, scheme.base)
    if scheme.rule == "triangle":
        return _split_triangle(X, a, scheme.base)
    if scheme.rule == "disk-aspect":
        return _split_polar(X, a)
    return _split_spherical(X, a)


def _representatives(variant: str, X: np.ndarray) -> np.ndarray:
    if variant == "interval":
        return (0.5 * (X[:, 0] + X[:, 1]))[:, None]
    if variant == "triangle":
        return X.mean(axis=1)
    if variant == "polar":
        rc = _polar_centroid_radius(X)
        th = np.mod(0.5 * (X[:, 2] + X[:, 3]), 2 * math.pi)
        return np.stack([rc * np.cos(th), rc * np.sin(th)], axis=1)
    S = X.sum(axis=1)
    return S / np.linalg.norm(S, axis=1, keepdims=True)


def _diameters(variant: str, X: np.ndarray) -> np.ndarray:
    if variant == "interval":
        return X[:, 1] - X[:, 0]
    if variant in ("triangle", "spherical"):
        # chord diameter of a (spherical) triangle is attained at its vertices
        d = [np.linalg.norm(X[:, i] - X[:, j], axis=1) for i, j in ((0, 1), (1, 2), (0, 2))]
        return np.max(d, axis=0)
    # annular sector: densely sampled boundary
    u = np.linspace(0.0, 1.0, 65)
    th = X[:, 2:3] + u[None, :] * (X[:, 3:4] - X[:, 2:3])
    pts = np.concatenate([
        np.stack([X[:, 0:1] * np.cos(th), X[:, 0:1] * np.sin(th)], axis=2),
        np.stack([X[:, 1:2] * np.cos(th), X[:, 1:2] * np.sin(th)], axis=2),
    ], axis=1)
    diff = pts[:, :, None, :] - pts[:, None, :, :]
    return np.sqrt((diff ** 2).sum(axis=3)).max(axis=(1, 2))


def _inside_score(variant: str, X: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Smallest normalised barycentric-style coordinate; nonnegative iff ``p`` lies in the cell."""
    if variant == "interval":
        x = p[:, 0]
        w = X[:, 1] - X[:, 0]
        return np.minimum(x - X[:, 0], X[:, 1] - x) / w
    if variant == "triangle":
        A, B, C = X[:, 0], X[:, 1], X[:, 2]
        T = np.stack([B - A, C - A], axis=2)
        lam = np.linalg.solve(T, (p - A)[:, :, None])[:, :, 0]
        return np.minimum(np.minimum(lam[:, 0], lam[:, 1]), 1.0 - lam.sum(axis=1))
    if variant == "polar":
        r = np.hypot(p[:, 0], p[:, 1])
        th = np.arctan2(p[:, 1], p[:, 0])
        th = X[:, 2] + np.mod(th - X[:, 2], 2 * math.pi)
        dr = X[:, 1] - X[:, 0]
        dt = X[:, 3] - X[:, 2]
        return np.min(np.stack([(r - X[:, 0]) / dr, (X[:, 1] - r) / dr,
                                (th - X[:, 2]) / dt, (X[:, 3] - th) / dt]), axis=0)
    lam = np.linalg.solve(np.transpose(X, (0, 2, 1)), p[:, :, None])[:, :, 0]
    return lam.min(axis=1) / lam.sum(axis=1)


def _batch(r: Region, n: int = 1) -> np.ndarray:
    row = r._row()
    return np.broadcast_to(row, (n,) + row.shape).copy()


# ---------------------------------------------------------------- public API

def split_cell(r: Region, scheme: SplitScheme | str, digit: int, mode: str = "auto") -> Region:
    """Child ``digit`` of ``r`` under ``scheme``.

    ``mode`` only affects polar cells: ``"radial"`` or ``"angular"`` force the
    split direction instead of choosing it from the aspect ratio.
    """
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    _check_compatible(r, scheme)
    if not 0 <= digit < scheme.base:
        raise ValueError(f"digit {digit} out of range for base {scheme.base}")
    X = _batch(r)
    a = np.array([digit])
    if scheme.rule == "disk-aspect":
        Y = _split_polar(X, a, mode)
    else:
        Y = _split_batch(scheme, X, a)
    return type(r)._from_row(Y[0])


def children(r: Region, scheme: SplitScheme | str) -> list[Region]:
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    return [split_cell(r, scheme, a) for a in range(scheme.base)]


def aspect_ratio(c: PolarCell) -> float:
    """Arc length through the centroid over radial length through it."""
    if c.r_hi - c.r_lo <= 0 or c.theta_hi - c.theta_lo <= 0:
        raise ValueError("degenerate polar cell")
    return float(_polar_aspect(c._row()[None])[0])


def centroid_radius(c: PolarCell) -> float:
    return float(_polar_centroid_radius(c._row()[None])[0])


def representative(r: Region) -> np.ndarray:
    """Interval midpoint, triangle centroid, polar centroid, or normalised vertex sum."""
    return _representatives(r.variant, r._row()[None])[0]


def diameter(r: Region) -> float:
    return float(_diameters(r.variant, r._row()[None])[0])


def volume(r: Region) -> float:
    return r.volume


def _vertex_angle(P: np.ndarray, Q: np.ndarray, R: np.ndarray) -> float:
    tq = Q - np.dot(P, Q) * P
    tr = R - np.dot(P, R) * P
    return math.atan2(np.linalg.norm(np.cross(tq, tr)), float(np.dot(tq, tr)))


def spherical_area(t: SphericalTriangle) -> float:
    """Spherical excess ``alpha + beta + gamma - pi`` from the three vertex angles."""
    A, B, C = (np.array(v) for v in (t.A, t.B, t.C))
    if np.linalg.norm(np.cross(B - A, C - A)) < 1e-15:
        raise ValueError("degenerate spherical triangle")
    excess = _vertex_angle(A, B, C) + _vertex_angle(B, C, A) + _vertex_angle(C, A, B) - math.pi
    if not excess > 0:
        raise ValueError("degenerate spherical triangle")
    return excess


def enumerate_cells(root: Region, scheme: SplitScheme | str, k: int) -> np.ndarray:
    """All level-``k`` cells as a batch, ordered by digit path (``a_1`` most significant)."""
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    _check_compatible(root, scheme)
    b = scheme.base
    X = _batch(root)
    for _ in range(k):
        parents = np.repeat(X, b, axis=0)
        digits = np.tile(np.arange(b), len(X))
        X = _split_batch(scheme, parents, digits)
    return X


def cell_volumes(root: Region, scheme: SplitScheme | str, k: int) -> np.ndarray:
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    return _volumes(scheme.variant, enumerate_cells(root, scheme, k))


def cell_representatives(root: Region, scheme: SplitScheme | str, k: int) -> np.ndarray:
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    return _representatives(scheme.variant, enumerate_cells(root, scheme, k))


_CHUNK_TABLES: dict[tuple[int, int], np.ndarray] = {}


def _triangle_chunk_table(b: int, c: int) -> np.ndarray:
    """Products ``M[d_c] ... M[d_1]`` for every digit string of length ``c``, by digit path."""
    key = (b, c)
    if key not in _CHUNK_TABLES:
        M = _TRIANGLE_MATRICES[b]
        T = np.eye(3)[None]
        for _ in range(c):
            T = np.einsum("dij,tjk->tdik", M, T).reshape(-1, 3, 3)
        _CHUNK_TABLES[key] = T
    return _CHUNK_TABLES[key]


def _phi_triangle(digits: np.ndarray, root: Triangle, b: int) -> np.ndarray:
    """Centroid of the final cell as barycentric weights on the root vertices.

    The weights are ``(1/3, 1/3, 1/3) M[d_K] ... M[d_1]``; digits are consumed
    several at a time through precomposed tables, last chunk first.
    """
    n, K = digits.shape
    c = max(1, int(8 // math.log2(b)))
    w = np.full((n, 3), 1.0 / 3.0)
    for start in reversed(range(0, K, c)):
        stop = min(start + c, K)
        T = _triangle_chunk_table(b, stop - start)
        idx = np.zeros(n, dtype=np.int64)
        for k in range(start, stop):
            idx = idx * b + digits[:, k]
        w = np.einsum("ni,nij->nj", w, T[idx])
    return w @ root._row()


def phi_digits(digits: np.ndarray, root: Region, scheme: SplitScheme | str) -> np.ndarray:
    """Map rows of base-``b`` digits (most significant first) into ``root``.

    Descends one split per digit and returns the representative point of the
    final cell, shape ``(n, ambient_dim)``.
    """
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    _check_compatible(root, scheme)
    if not scheme.convergent:
        raise NonConvergentSplitError(f"{scheme} is not a convergent split; phi is undefined")
    digits = np.asarray(digits)
    if digits.ndim == 1:
        digits = digits[None]
    if scheme.rule == "triangle":
        return _phi_triangle(digits.astype(np.int64), root, scheme.base)
    X = _batch(root, digits.shape[0])
    for k in range(digits.shape[1]):
        X = _split_batch(scheme, X, digits[:, k])
    return _representatives(scheme.variant, X)


def phi(u: DigitVector, root: Region, scheme: SplitScheme | str) -> np.ndarray:
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    if u.base != scheme.base:
        raise ValueError(f"digit base {u.base} does not match scheme base {scheme.base}")
    return phi_digits(np.array([u.digits]), root, scheme)[0]


def locate(points: np.ndarray, root: Region, scheme: SplitScheme | str, k: int) -> np.ndarray:
    """Digit-path index (``a_1`` most significant) of the level-``k`` cell holding each point.

    At each level the child with the largest containment score wins, which
    settles points that sit on a shared boundary.
    """
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    _check_compatible(root, scheme)
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n, b = len(points), scheme.base
    X = _batch(root, n)
    idx = np.zeros(n, dtype=np.int64)
    for _ in range(k):
        kids = [_split_batch(scheme, X, np.full(n, a)) for a in range(b)]
        scores = np.stack([_inside_score(scheme.variant, Y, points) for Y in kids], axis=1)
        best = np.argmax(scores, axis=1)
        X = np.stack(kids, axis=1)[np.arange(n), best]
        idx = idx * b + best
    return idx


def sphericity_profile(root: Region, scheme: SplitScheme | str, depth: int) -> np.ndarray:
    """``max diam(cell) * b**(k/d)`` over level-``k`` cells, for ``k = 0..depth``."""
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    _check_compatible(root, scheme)
    if scheme.base ** depth > 2 ** 16:
        raise ValueError("cell enumeration too large")
    b, d = scheme.base, root.dim
    out = []
    X = _batch(root)
    for k in range(depth + 1):
        if k:
            X = _split_batch(scheme, np.repeat(X, b, axis=0), np.tile(np.arange(b), len(X)))
        out.append(float(_diameters(scheme.variant, X).max()) * b ** (k / d))
    return np.array(out)


def sphericity_probe(root: Region, scheme: SplitScheme | str, depth: int) -> float:
    """Empirical sphericity constant: the largest profile value up to ``depth``."""
    return float(sphericity_profile(root, scheme, depth).max())


def measure_preservation_check(root: Region, scheme: SplitScheme | str, seed: int, samples: int,
                               level: int, depth: int | None = None) -> ChiSquareResult:
    """Chi-square of scrambled, phi-mapped uniform digit vectors over the level-``level`` cells.

    Each sample gets its own scramble (replicate id = sample index).  Cells
    are identified geometrically with :func:`locate`, and expected counts are
    proportional to measured cell volumes, which for a valid split are all
    ``b**-level`` of the root.
    """
    scheme = SplitScheme.parse(scheme) if isinstance(scheme, str) else scheme
    b = scheme.base
    cells = b ** level
    if samples < 50 * cells:
        raise ValueError(f"need at least {50 * cells} samples for {cells} cells, got {samples}")
    K = default_depth(b) if depth is None else depth
    rng = np.random.default_rng([seed, 0x6D70])
    raw = rng.integers(0, b, size=(samples, 1, K))
    u = scramble_digits(raw, b, seed, np.arange(samples), depth=K)[:, 0, :]
    x = phi_digits(u, root, scheme)
    idx = locate(x, root, scheme, level)
    vols = cell_volumes(root, scheme, level)
    expected = samples * vols / root.volume
    return chi_square(np.bincount(idx, minlength=cells), expected)


DEFAULT_ROOTS: dict[str, Region] = {
    "interval": Interval(),
    "triangle": Triangle(),
    "polar": PolarCell(),
    "spherical": SphericalTriangle(),
}


def default_root(scheme: SplitScheme) -> Region:
    return DEFAULT_ROOTS[scheme.variant]


def ambient_dim(variant: str) -> int:
    return {"interval": 1, "triangle": 2, "polar": 2, "spherical": 3}[variant]


@dataclass(frozen=True)
class ProductSpace:
    """Product of ``s`` regions, each with its own split, all in one base."""

    factors: tuple[tuple[Region, SplitScheme], ...]

    def __post_init__(self) -> None:
        facs = tuple((r, SplitScheme.parse(sc) if isinstance(sc, str) else sc) for r, sc in self.factors)
        if not facs:
            raise ValueError("need at least one factor")
        for r, sc in facs:
            _check_compatible(r, sc)
        if len({sc.base for _, sc in facs}) != 1:
            raise ValueError("all factors must share a common base")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of(cls, schemes: Sequence[SplitScheme | str], roots: Sequence[Region] | None = None) -> ProductSpace:
        schemes = [SplitScheme.parse(s) if isinstance(s, str) else s for s in schemes]
        roots = [default_root(s) for s in schemes] if roots is None else list(roots)
        return cls(tuple(zip(roots, schemes)))

    @property
    def s(self) -> int:
        return len(self.factors)

    @property
    def base(self) -> int:
        return self.factors[0][1].base

    def map(self, digits: np.ndarray) -> list[np.ndarray]:
        """Componentwise phi of an ``(n, s, K)`` digit array; one point array per factor."""
        if digits.shape[1] != self.s:
            raise ValueError(f"points have {digits.shape[1]} coordinates, space has {self.s} factors")
        return [phi_digits(digits[:, j, :], r, sc) for j, (r, sc) in enumerate(self.factors)]
