"""Estimation over product spaces, replicate variances, gain coefficients and
small-instance variance-decomposition oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from geonets.digits import default_depth
from geonets.integrands import Integrand
from geonets.nets import NetSpec, PointSet, digital_net, net_for, prefix_index
from geonets.regions import ProductSpace, cell_representatives
from geonets.scramble import scramble_digits


@dataclass(frozen=True)
class EstimateReport:
    n: int
    R: int
    estimates: np.ndarray
    mean: float
    variance: float
    stderr: float

    @classmethod
    def from_estimates(cls, n: int, estimates) -> EstimateReport:
        est = np.asarray(estimates, dtype=np.float64)
        var = float(np.var(est, ddof=1)) if len(est) > 1 else float("nan")
        return cls(n, len(est), est, float(est.mean()), var, math.sqrt(var / len(est)))

    def variance_stderr(self) -> float:
        """Standard error of the sample variance, from the sample fourth moment."""
        R = self.R
        dev = self.estimates - self.mean
        m4 = float(np.mean(dev ** 4))
        v = float(np.mean(dev ** 2))
        return math.sqrt(max(m4 - v * v * (R - 3) / (R - 1), 0.0) / R)


@dataclass
class SigmaTable:
    """Variance components: ANOVA ``sigma2_u`` and multiresolution ``sigma2_{u,kappa}``.

    Keys use 1-based factor labels, e.g. ``(1, 2)`` for u = {1, 2}.
    """

    mu: float
    sigma2: float
    anova: dict[tuple[int, ...], float] = field(default_factory=dict)
    mr: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = field(default_factory=dict)


def _check_dims(space: ProductSpace, ps: PointSet) -> None:
    if ps.spec.s != space.s:
        raise ValueError(f"point set has {ps.spec.s} coordinates, space has {space.s} factors")
    if ps.spec.b != space.base:
        raise ValueError(f"point set base {ps.spec.b} differs from split base {space.base}")


def estimate(f: Integrand, space: ProductSpace, pts: PointSet) -> float:
    """Equal-weight rule on the componentwise phi images of ``pts``."""
    _check_dims(space, pts)
    return float(np.mean(f(space.map(pts.digits))))


def base_net(spec: NetSpec, depth: int | None = None) -> PointSet:
    if spec.generators is not None:
        return digital_net(spec.b, spec.m, spec.generators, spec.t, depth)
    return net_for(spec.b, spec.s, spec.m, depth)


def replicate_variance(f: Integrand, space: ProductSpace, spec: NetSpec | PointSet, seed: int, R: int,
                       depth: int | None = None) -> EstimateReport:
    """Estimates from ``R`` independent scrambles (replicate ids ``1..R``)."""
    if R < 2:
        raise ValueError("need at least two replicates")
    net = spec if isinstance(spec, PointSet) else base_net(spec, depth)
    _check_dims(space, net)
    return EstimateReport.from_estimates(net.n, replicate_estimates(f, space, net, seed, range(1, R + 1), depth))


_BATCH_POINTS = 2 ** 17


def replicate_estimates(f: Integrand, space: ProductSpace, net: PointSet, seed: int, replicates,
                        depth: int | None = None) -> np.ndarray:
    """One estimate per replicate id; several replicates are scrambled per batch.

    Batching only stacks copies of the net with per-point replicate ids, so
    the result equals scrambling each replicate on its own.
    """
    reps = np.asarray(list(replicates), dtype=np.int64)
    n = net.n
    per = max(1, _BATCH_POINTS // n)
    out = np.empty(len(reps))
    for start in range(0, len(reps), per):
        chunk = reps[start:start + per]
        digits = np.broadcast_to(net.digits, (len(chunk),) + net.digits.shape).reshape(-1, *net.digits.shape[1:])
        ids = np.repeat(chunk, n)
        x = scramble_digits(digits, net.spec.b, seed, ids, depth)
        vals = f(space.map(x)).reshape(len(chunk), n)
        out[start:start + len(chunk)] = vals.mean(axis=1)
    return out


def monte_carlo(f: Integrand, space: ProductSpace, n: int, seed: int, R: int,
                depth: int | None = None) -> EstimateReport:
    """Plain Monte Carlo control: iid uniform digits pushed through phi.

    The points are iid, so ``Var(mu_hat) = sigma^2 / n`` and the report's
    variance is the pooled sample variance of all ``R * n`` values over ``n``.
    That estimates the same quantity as the spread of the ``R`` replicate
    means, with far less noise.
    """
    if R < 2:
        raise ValueError("need at least two replicates")
    b = space.base
    K = default_depth(b) if depth is None else depth
    est = np.empty(R)
    within = np.empty(R)
    for r in range(1, R + 1):
        rng = np.random.default_rng([seed, r, 0x4D43])
        d = rng.integers(0, b, size=(n, space.s, K), dtype=np.uint8)
        v = f(space.map(d))
        est[r - 1] = v.mean()
        within[r - 1] = np.sum((v - v.mean()) ** 2)
    pooled = float(within.sum() / (R * n - 1)) if n > 1 else float(np.var(est, ddof=1))
    # the pooled sum of squares ignores the between-replicate part; add it back
    if n > 1:
        pooled += float(n * np.sum((est - est.mean()) ** 2) / (R * n - 1))
    var = pooled / n
    return EstimateReport(n, R, est, float(est.mean()), var, math.sqrt(var / R))


# ---------------------------------------------------------------- gain coefficients

def gain_coefficients(pts: PointSet, u, kappa) -> float:
    """Gain coefficient for factor labels ``u`` (1-based) and levels ``kappa``.

    Each ``Upsilon`` factor is ``(b*[k+1 digits agree] - [k digits agree])/(b-1)``;
    expanding the product over ``j in u`` turns the double sum over point
    pairs into sums of squared box counts, so the cost is ``O(n 2^|u|)``.
    """
    u = tuple(u)
    kappa = tuple(kappa)
    if not u:
        raise ValueError("u must be nonempty")
    if len(u) != len(kappa):
        raise ValueError("kappa needs one level per element of u")
    if any(not 1 <= j <= pts.spec.s for j in u) or len(set(u)) != len(u):
        raise ValueError(f"u must be distinct labels in 1..{pts.spec.s}")
    b, n = pts.spec.b, pts.n
    need = max(kappa) + 1
    if pts.depth < need:
        pts = pts.with_depth(need)
    prefixes = {}
    for j, k in zip(u, kappa):
        for kk in (k, k + 1):
            prefixes[j, kk] = prefix_index(pts.digits[:, j - 1, :].astype(np.int64), b, kk)
    total = 0
    for fine in itertools.product((0, 1), repeat=len(u)):
        _, inv = np.unique(
            np.stack([prefixes[j, k + e] for j, k, e in zip(u, kappa, fine)], axis=1),
            axis=0, return_inverse=True)
        counts = np.bincount(inv.ravel())
        sq = int(np.sum(counts.astype(np.int64) ** 2))
        nf = sum(fine)
        total += (-1) ** (len(u) - nf) * b ** nf * sq
    return total / (n * (b - 1) ** len(u))


def subsets(s: int):
    """Nonempty subsets of ``1..s`` as sorted tuples."""
    for r in range(1, s + 1):
        yield from itertools.combinations(range(1, s + 1), r)


def kappas(size: int, max_sum: int):
    """Level tuples of length ``size`` with entries >= 0 and total <= ``max_sum``."""
    for kap in itertools.product(range(max_sum + 1), repeat=size):
        if sum(kap) <= max_sum:
            yield kap


def gain_table(pts: PointSet, max_total: int) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """All gains with ``|u| + |kappa| <= max_total``."""
    out = {}
    for u in subsets(pts.spec.s):
        for kap in kappas(len(u), max_total - len(u)):
            out[u, kap] = gain_coefficients(pts, u, kap)
    return out


def gain_bound(b: int, t: int, s: int) -> float:
    return b ** t * ((b + 1) / (b - 1)) ** s


# ---------------------------------------------------------------- oracles

_GRID_BUDGET = 2 ** 24


def _grid_values(f: Integrand, space: ProductSpace, levels: tuple[int, ...]) -> np.ndarray:
    """``f`` at the representatives of all level-``levels[j]`` cells, on the product grid.

    Axis ``j`` follows digit-path order, so level-``k`` cells are contiguous blocks.
    """
    if space.s > 2:
        raise ValueError("grid oracles support s <= 2")
    b = space.base
    if b ** sum(levels) > _GRID_BUDGET:
        raise ValueError("oracle grid exceeds budget")
    nodes = [cell_representatives(r, sc, k) for (r, sc), k in zip(space.factors, levels)]
    if space.s == 1:
        return f([nodes[0]])
    n1, n2 = len(nodes[0]), len(nodes[1])
    i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    vals = f([nodes[0][i1.ravel()], nodes[1][i2.ravel()]])
    return vals.reshape(n1, n2)


def _default_levels(space: ProductSpace, total_log2: int) -> tuple[int, ...]:
    per = total_log2 // space.s
    return tuple(max(1, int(per // math.log2(space.base))) for _ in range(space.s))


def anova_components(f: Integrand, space: ProductSpace, levels: tuple[int, ...] | int | None = None) -> SigmaTable:
    """ANOVA variances on a tensor midpoint grid over level-``k`` cells of each factor.

    The grid measure is a product of equal-weight rules, so the components
    add up to the grid variance exactly.
    """
    if space.s > 2:
        raise ValueError("ANOVA oracle supports s <= 2")
    if levels is None:
        levels = _default_levels(space, 24)
    elif isinstance(levels, int):
        levels = (levels,) * space.s
    F = _grid_values(f, space, tuple(levels))
    mu = float(F.mean())
    sigma2 = float(np.mean((F - mu) ** 2))
    if space.s == 1:
        return SigmaTable(mu, sigma2, {(1,): sigma2})
    f1 = F.mean(axis=1) - mu
    f2 = F.mean(axis=0) - mu
    f12 = F - mu - f1[:, None] - f2[None, :]
    anova = {(1,): float(np.mean(f1 ** 2)), (2,): float(np.mean(f2 ** 2)), (1, 2): float(np.mean(f12 ** 2))}
    return SigmaTable(mu, sigma2, anova)


def _cell_average(F: np.ndarray, axis: int, k: int, b: int) -> np.ndarray:
    """Replace values along ``axis`` by their level-``k`` cell averages."""
    L = F.shape[axis]
    moved = np.moveaxis(F, axis, 0)
    blocks = moved.reshape((b ** k, L // b ** k) + moved.shape[1:])
    avg = np.broadcast_to(blocks.mean(axis=1, keepdims=True), blocks.shape).reshape(moved.shape)
    return np.moveaxis(avg, 0, axis)


def _nu(F: np.ndarray, u: tuple[int, ...], kappa: tuple[int, ...], b: int) -> np.ndarray:
    """Block ``nu_{u,kappa}`` of the grid function via differences of cell averages."""
    levels = dict(zip(u, kappa))
    out = F
    for j in range(1, F.ndim + 1):
        ax = j - 1
        if j in levels:
            k = levels[j]
            out = _cell_average(out, ax, k + 1, b) - _cell_average(out, ax, k, b)
        else:
            out = _cell_average(out, ax, 0, b)
    return out


def _oracle_levels(space: ProductSpace, depth: int | tuple[int, ...] | None) -> tuple[int, ...]:
    if depth is None:
        return _default_levels(space, 20 if space.s == 1 else 22)
    if isinstance(depth, int):
        return (depth,) * space.s
    return tuple(depth)


def mr_sigma(f: Integrand, space: ProductSpace, u, kappa, depth: int | tuple[int, ...] | None = None) -> float:
    """``sigma^2_{u,kappa}`` from nested cell averages of ``f`` on a level-``depth`` grid."""
    u, kappa = tuple(u), tuple(kappa)
    levels = _oracle_levels(space, depth)
    for j, k in zip(u, kappa):
        if k + 1 > levels[j - 1]:
            raise ValueError(f"level {k} needs an oracle depth above {k}")
    F = _grid_values(f, space, levels)
    return float(np.mean(_nu(F, u, kappa, space.base) ** 2))


def mr_sigma_table(f: Integrand, space: ProductSpace, max_total: int,
                   depth: int | tuple[int, ...] | None = None) -> SigmaTable:
    """All ``sigma^2_{u,kappa}`` with ``|kappa| <= max_total`` (within the oracle depth)."""
    levels = _oracle_levels(space, depth)
    F = _grid_values(f, space, levels)
    mu = float(F.mean())
    table = SigmaTable(mu, float(np.mean((F - mu) ** 2)))
    for u in subsets(space.s):
        for kap in kappas(len(u), max_total):
            if all(k + 1 <= levels[j - 1] for j, k in zip(u, kap)):
                table.mr[u, kap] = float(np.mean(_nu(F, u, kap, space.base) ** 2))
    return table


@dataclass(frozen=True)
class IdentityReport:
    empirical: float
    theoretical: float
    tolerance: float
    truncated_mass: float
    sigma2: float
    passed: bool


def variance_identity_check(f: Integrand, space: ProductSpace, spec: NetSpec, seed: int, R: int,
                            depth: int | tuple[int, ...] | None = None) -> IdentityReport:
    """Compare the replicate variance with ``(1/n) sum Gamma_{u,kappa} sigma^2_{u,kappa}``.

    Levels are truncated at ``|kappa| <= 4 + m - t``.  The tolerance is three
    standard errors of the sample variance plus the truncated variance mass
    times the worst-case gain.
    """
    if space.s > 2 or spec.m > 4:
        raise ValueError("identity check is limited to s <= 2, m <= 4")
    net = base_net(spec)
    table = mr_sigma_table(f, space, 4 + spec.m - spec.t, depth)
    n = net.n
    theoretical = sum(gain_coefficients(net, u, kap) * s2 for (u, kap), s2 in table.mr.items()) / n
    sigma2 = f.sigma2 if f.sigma2 is not None else table.sigma2
    truncated = max(sigma2 - sum(table.mr.values()), 0.0)
    rep = replicate_variance(f, space, net, seed, R)
    tol = 3 * rep.variance_stderr() + gain_bound(spec.b, spec.t, spec.s) * truncated / n
    return IdentityReport(rep.variance, theoretical, tol, truncated, sigma2,
                          abs(rep.variance - theoretical) <= tol)
