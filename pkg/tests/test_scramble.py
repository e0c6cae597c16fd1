from __future__ import annotations

import math

import numpy as np
import pytest

from geonets.digits import DigitVector
from geonets.nets import PointSet, faure_net, prefix_index, vdc_points, verify_net
from geonets.scramble import (ScrambleKey, _apply_node_permutations, chi_square, scramble_digits,
                              scramble_point_set, uniformity_check)
from geonets.testing import forced_permutations, identity_hook


def test_identity_hook_is_identity():
    ps = faure_net(2, 2, 4)
    with forced_permutations(identity_hook):
        out = scramble_point_set(ps, ScrambleKey(99, 3))
    assert np.array_equal(out.digits, ps.digits)
    # the hook is gone after the block
    assert not np.array_equal(scramble_point_set(ps, ScrambleKey(99, 3)).digits, ps.digits)


def test_single_point_first_digit_frequency():
    trials = 10_000
    zero = np.zeros((trials, 1, 52), dtype=np.int64)
    x = scramble_digits(zero, 2, seed=7, replicate=np.arange(trials))
    p = x[:, 0, 0].mean()
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / trials)
    # deep digits are scrambled too, so values spread over the whole grid
    vals = PointSet(vdc_points(2, 1).spec, x[:, :, :]).values()
    assert len(np.unique(vals)) == trials


@pytest.mark.parametrize("seed", range(5))
def test_vdc_stays_a_net(seed):
    ps = vdc_points(2, 16)
    assert verify_net(scramble_point_set(ps, ScrambleKey(seed, seed + 1)), 0)


def test_same_tree_property():
    rng = np.random.default_rng(1)
    b, K = 3, 12
    base = rng.integers(0, b, size=K)
    pts = np.tile(base, (40, 1))
    shared = rng.integers(1, K, size=40)
    for i, k in enumerate(shared):
        pts[i, k:] = rng.integers(0, b, size=K - k)
    x = scramble_digits(pts[:, None, :], b, seed=5, replicate=2)[:, 0, :]
    for i in range(40):
        for i2 in range(40):
            # agreement length before scrambling equals agreement length after
            same = np.concatenate([pts[i] == pts[i2], [False]])
            same_x = np.concatenate([x[i] == x[i2], [False]])
            assert np.argmin(same) == np.argmin(same_x)


def test_determinism_and_independence():
    ps = faure_net(3, 2, 3)
    a = scramble_point_set(ps, ScrambleKey(11, 4))
    b = scramble_point_set(ps, ScrambleKey(11, 4))
    c = scramble_point_set(ps, ScrambleKey(11, 5))
    d = scramble_point_set(ps, ScrambleKey(12, 4))
    assert np.array_equal(a.digits, b.digits)
    assert not np.array_equal(a.digits, c.digits)
    assert not np.array_equal(a.digits, d.digits)


def test_batched_replicates_match_single_scrambles():
    ps = faure_net(2, 2, 3)
    R = 6
    stacked = np.concatenate([ps.digits] * R)
    ids = np.repeat(np.arange(1, R + 1), ps.n)
    x = scramble_digits(stacked, 2, 9, ids)
    for r in range(R):
        single = scramble_point_set(ps, ScrambleKey(9, r + 1)).digits
        assert np.array_equal(x[r * ps.n:(r + 1) * ps.n], single)


def test_output_depth():
    ps = faure_net(2, 1, 3).with_depth(3)
    assert scramble_point_set(ps, ScrambleKey(1), depth=10).depth == 10
    assert scramble_point_set(ps, ScrambleKey(1)).depth == 3
    with pytest.raises(ValueError):
        scramble_point_set(ps.with_depth(0), ScrambleKey(1))


@pytest.mark.parametrize("b", [2, 3, 5, 7, 11, 13])
def test_node_permutations_are_uniform(b):
    """Each of the b! permutations (or each image digit, for large b) is equally likely."""
    rng = np.random.default_rng(b)
    h = rng.integers(0, 2 ** 63, size=200_000, dtype=np.int64).astype(np.uint64) * np.uint64(2) + np.uint64(1)
    images = np.stack([_apply_node_permutations(h, np.full(len(h), a), b) for a in range(b)], axis=1)
    # every row is a permutation
    assert np.all(np.sort(images, axis=1) == np.arange(b))
    res = chi_square(np.bincount(images[:, 0], minlength=b))
    assert res.passes(0.999)
    res = chi_square(np.bincount(images[:, 0] * b + images[:, 1], minlength=b * b)[
        [i * b + j for i in range(b) for j in range(b) if i != j]])
    assert res.passes(0.999)


def test_uniformity_check_passes():
    assert uniformity_check(DigitVector(2, (0, 1, 1)), seed=3, trials=4000, level=2).passes()
    pt = [DigitVector(3, (2, 0)), DigitVector(3, (1, 1))]
    assert uniformity_check(pt, seed=4, trials=50 * 81, level=2).passes()


def test_uniformity_check_needs_enough_trials():
    with pytest.raises(ValueError):
        uniformity_check(DigitVector(2, (0,)), seed=1, trials=100, level=2)


def test_fair_hook_calibration():
    """With a hook drawing fresh uniform bits, the k=1 statistic behaves like chi-square(1)."""
    rng = np.random.default_rng(2024)

    def fair(j, k, prefix, digit):
        return digit ^ rng.integers(0, 2, size=digit.shape)

    stats_ = []
    with forced_permutations(fair):
        for r in range(300):
            stats_.append(uniformity_check(DigitVector(2, (0,)), seed=r, trials=1000, level=1).statistic)
    assert abs(np.mean(stats_) - 1.0) <= 4 * math.sqrt(2 / 300)


def test_adversarial_hook_fails():
    def pinned(j, k, prefix, digit):
        return digit if k == 0 else None

    with forced_permutations(pinned):
        res = uniformity_check(DigitVector(2, (0, 1)), seed=1, trials=1000, level=1)
    assert res.counts.tolist() == [1000, 0]
    assert not res.passes()


def test_prefix_index():
    d = np.array([[1, 0, 2], [2, 2, 2]])
    assert prefix_index(d, 3, 2).tolist() == [3, 8]
    assert prefix_index(d, 3, 0).tolist() == [0, 0]
