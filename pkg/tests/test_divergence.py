import math

import numpy as np
import pytest

from chanrel import channels as ch
from chanrel.divergence import (DivergenceKind, channel_divergence, channel_entropy,
                                divergence_to_depolarizing, ordering_check)
from chanrel.linalg import DimensionMismatch
from chanrel.optimizer import OptimizerConfig
from chanrel.properties import product_input
from chanrel.states import von_neumann_entropy

K = DivergenceKind


def test_kind_metadata():
    assert [k for k in K if k.closed_form] == [K.DPhi, K.SPhi]
    assert K.parse("sab") is K.SAB and K.parse("DA") is K.DA
    assert K.DA.sibling("AB") is K.DAB
    with pytest.raises(ValueError):
        K.parse("dX")


def test_closed_form_examples(n0, dep2):
    assert channel_divergence(K.DPhi, ch.identity(2), dep2).value == pytest.approx(2.0, abs=1e-12)
    assert channel_divergence(K.DPhi, n0, dep2).value == pytest.approx(math.log2(4 / 3), abs=1e-12)
    r = channel_divergence(K.SPhi, n0, dep2)
    assert r.value == pytest.approx(0.5, abs=1e-12)
    assert not r.lower_bound_only and r.achieving_input is None


def test_search_examples(n0, dep2, small_cfg):
    r = channel_divergence(K.DA, n0, dep2, small_cfg)
    assert r.lower_bound_only
    assert 1 - 1e-6 <= r.value <= 1 + 1e-9
    assert channel_divergence(K.SAB, ch.identity(2), dep2, small_cfg).value == pytest.approx(2.0, abs=1e-6)


def test_self_divergence_is_zero(rng, small_cfg):
    n = ch.random_channel(2, 2, rng, rank=4)
    for kind in K:
        assert channel_divergence(kind, n, n, small_cfg).value == pytest.approx(0.0, abs=1e-6)


def test_dimension_mismatch(n0):
    with pytest.raises(DimensionMismatch):
        channel_divergence(K.DA, n0, ch.depolarizing(2, 3))


def test_depolarizing_shortcuts_match_generic(n0, small_cfg):
    for kind in K:
        fast = divergence_to_depolarizing(kind, n0, small_cfg).value
        slow = channel_divergence(kind, n0, ch.depolarizing(2), small_cfg).value
        assert fast == pytest.approx(slow, abs=1e-6), kind


def test_entropy_examples(n0, small_cfg):
    assert channel_entropy(K.SPhi, n0) == pytest.approx(0.5, abs=1e-12)
    assert channel_entropy(K.SA, ch.depolarizing(2), small_cfg) == pytest.approx(1.0, abs=1e-9)
    assert channel_entropy(K.DA, ch.identity(2), small_cfg) == pytest.approx(0.0, abs=1e-6)
    assert channel_entropy(K.SAB, ch.identity(2), small_cfg) == pytest.approx(-1.0, abs=1e-6)


def test_state_preparation_entropy(small_cfg):
    rho = np.diag([0.25, 0.75])
    prep = ch.state_preparation(rho)
    h = von_neumann_entropy(rho)
    for kind in (K.SA, K.SAB, K.SPhi):
        assert channel_entropy(kind, prep, small_cfg) == pytest.approx(h, abs=1e-6)


def test_ordering_examples(n0, dep2, small_cfg):
    ident = ordering_check(ch.identity(2), dep2, small_cfg)
    assert ident.holds
    assert ident.values[K.DAB] == pytest.approx(2.0, abs=1e-6)
    assert ident.values[K.DA] == pytest.approx(1.0, abs=1e-6)
    rep = ordering_check(n0, dep2, small_cfg)
    v = rep.values
    assert v[K.DAB] == pytest.approx(1.0, abs=1e-6) and v[K.DA] == pytest.approx(1.0, abs=1e-6)
    assert v[K.DPhi] < v[K.DA]
    same = ordering_check(n0, n0, small_cfg)
    assert all(abs(x) <= 1e-9 for x in same.values.values())


def test_non_negative_on_random_pairs(rng):
    cfg = OptimizerConfig(restarts=2, max_iters=20)
    for d in (2, 3):
        for _ in range(3):
            n, m = ch.random_channel(d, d, rng), ch.random_channel(d, d, rng)
            for kind in K:
                assert channel_divergence(kind, n, m, cfg).value >= -1e-9


def test_post_composition_monotonicity(rng):
    cfg = OptimizerConfig(restarts=4, max_iters=60)
    for _ in range(3):
        n, m, x = (ch.random_channel(2, 2, rng) for _ in range(3))
        for kind in (K.DA, K.SA, K.DAB, K.SAB):
            lhs = channel_divergence(kind, ch.compose(x, n), ch.compose(x, m), cfg)
            rhs = channel_divergence(kind, n, m, cfg.with_warm_starts([lhs.achieving_input]))
            assert lhs.value <= rhs.value + 1e-6


def test_super_additivity_with_product_warm_start(rng):
    cfg = OptimizerConfig(restarts=2, max_iters=20)
    n0_, m0 = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
    n1, m1 = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
    for kind in (K.SA, K.DAB):
        a, b = channel_divergence(kind, n0_, m0, cfg), channel_divergence(kind, n1, m1, cfg)
        x = product_input(kind, a.achieving_input.amplitudes, 2, b.achieving_input.amplitudes, 2)
        t = channel_divergence(kind, ch.tensor(n0_, n1), ch.tensor(m0, m1),
                               OptimizerConfig(restarts=1, max_iters=1).with_warm_starts([x]))
        assert t.value >= a.value + b.value - 1e-9


def test_infinite_divergence():
    ident = ch.identity(2)
    rep = ch.replacement(2, np.diag([1.0, 0.0]))
    assert channel_divergence(K.SA, ident, rep, OptimizerConfig(restarts=2)).value == math.inf
    assert channel_divergence(K.DPhi, ident, rep).value > 0


def test_worker_count_does_not_change_results(rng):
    n, m = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
    for kind in (K.DA, K.SAB):
        one = channel_divergence(kind, n, m, OptimizerConfig(restarts=6, workers=1))
        three = channel_divergence(kind, n, m, OptimizerConfig(restarts=6, workers=3))
        assert one.value == three.value
        assert np.array_equal(one.achieving_input.amplitudes, three.achieving_input.amplitudes)
