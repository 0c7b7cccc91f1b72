import json
import math

import numpy as np
import pytest

from chanrel import channels as ch
from chanrel import linalg
from chanrel.channels import KrausChannel, Superchannel
from chanrel.linalg import DimensionMismatch
from chanrel.states import DensityState, basis_state, maximally_entangled

PHI2 = np.outer(maximally_entangled(2).amplitudes, maximally_entangled(2).amplitudes.conj())
CHOI_N0 = np.diag([0.25, 0, 0.25, 0.5])


def test_validate_examples(n0):
    assert ch.validate(n0).passed
    assert ch.validate(ch.identity(3)).passed
    bad = KrausChannel(np.diag([1.0, 0.0])[None])
    report = ch.validate(bad)
    assert not report.passed
    np.testing.assert_allclose(report.residual, np.diag([0.0, 1.0]), atol=1e-15)
    assert report.kraus_shapes == [(2, 2)]


def test_apply_examples(n0, rng):
    np.testing.assert_allclose(ch.apply(n0, np.diag([0, 1.0])).matrix, np.diag([0, 1.0]))
    rho = ch.random_state(3, rng)
    np.testing.assert_allclose(ch.apply(ch.identity(3), rho).matrix, rho.matrix)
    np.testing.assert_allclose(ch.apply(ch.depolarizing(3, 2), rho).matrix, np.eye(2) / 2, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        ch.apply(n0, rho)


def test_apply_extended_examples(n0, rng):
    phi = maximally_entangled(2)
    np.testing.assert_allclose(ch.apply_extended(n0, phi).matrix, CHOI_N0, atol=1e-12)
    psi = ch.random_state(4, rng)
    psi = DensityState(psi.matrix, (2, 2))
    np.testing.assert_allclose(ch.apply_extended(ch.identity(2), psi).matrix, psi.matrix)
    np.testing.assert_allclose(ch.apply_extended(ch.depolarizing(2), phi).matrix, np.eye(4) / 4, atol=1e-12)


def test_choi_examples(n0):
    np.testing.assert_allclose(ch.to_choi(n0).matrix, CHOI_N0, atol=1e-12)
    np.testing.assert_allclose(ch.to_choi(ch.identity(2)).matrix, PHI2, atol=1e-12)
    np.testing.assert_allclose(ch.to_choi(ch.depolarizing(2)).matrix, np.eye(4) / 4, atol=1e-12)


def test_from_choi_round_trips(n0, rng):
    dep = ch.from_choi(ch.ChoiMatrix(np.eye(4) / 4, 2, 2))
    for i in range(2):
        np.testing.assert_allclose(ch.apply(dep, basis_state(2, i)).matrix, np.eye(2) / 2, atol=1e-12)
    unitary = ch.from_choi(ch.ChoiMatrix(PHI2, 2, 2))
    assert unitary.rank == 1
    k = unitary.kraus[0]
    np.testing.assert_allclose(np.abs(k), np.eye(2), atol=1e-12)
    back = ch.from_choi(ch.to_choi(n0))
    for _ in range(8):
        rho = ch.random_state(2, rng)
        np.testing.assert_allclose(back(rho).matrix, n0(rho).matrix, atol=1e-9)
    with pytest.raises(ch.InvalidChoi):
        ch.from_choi(ch.ChoiMatrix(np.diag([1.0, 0, 0, 0]), 2, 2))


def test_compose_and_tensor(n0, rng):
    assert ch.channel_distance(ch.compose(ch.identity(2), n0), n0) < 1e-12
    assert ch.channel_distance(ch.compose(n0, ch.identity(2)), n0) < 1e-12
    deph = ch.dephasing(3)
    assert ch.channel_distance(ch.compose(deph, deph), deph) < 1e-10
    with pytest.raises(DimensionMismatch):
        ch.compose(n0, ch.identity(3))
    assert ch.channel_distance(ch.tensor(ch.identity(2), ch.identity(2)), ch.identity(4)) < 1e-12
    assert ch.channel_distance(ch.tensor(ch.depolarizing(2), ch.depolarizing(2)), ch.depolarizing(4)) < 1e-12


def test_choi_of_tensor_is_permuted_product(n0, rng):
    m = ch.random_channel(2, 3, rng)
    t = ch.to_choi(ch.tensor(n0, m)).matrix
    # Choi(N (x) M) lives on (out_N, out_M, in_N, in_M); the factor product is (out_N, in_N, out_M, in_M)
    prod = np.kron(ch.to_choi(n0).matrix, ch.to_choi(m).matrix)
    np.testing.assert_allclose(t, linalg.permute_factors(prod, (2, 2, 3, 2), (0, 2, 1, 3)), atol=1e-10)
    ti = ch.to_choi(ch.tensor(n0, ch.identity(2))).matrix
    prod = np.kron(CHOI_N0, PHI2)
    np.testing.assert_allclose(ti, linalg.permute_factors(prod, (2, 2, 2, 2), (0, 2, 1, 3)), atol=1e-10)


def test_results_are_valid_channels(n0, rng):
    e = 2
    pre = ch.random_channel(2, 2 * e, rng).with_dims((2,), (2, e))
    post = ch.random_channel(2 * e, 2, rng).with_dims((2, e), (2,))
    phi = Superchannel(pre, e, post)
    out = ch.apply_superchannel(phi, n0)
    assert ch.validate(out).passed
    ch.to_choi(out).check()
    for made in (ch.compose(n0, ch.random_channel(3, 2, rng)), ch.tensor(n0, ch.random_channel(2, 3, rng)),
                 ch.mixture([n0, ch.identity(2)], [0.3, 0.7])):
        ch.to_choi(made).check()


def test_superchannel_special_cases(n0, rng):
    trivial = Superchannel(ch.identity(2), 1, ch.identity(2))
    assert ch.channel_distance(ch.apply_superchannel(trivial, n0), n0) < 1e-12
    pre, post = ch.random_channel(3, 2, rng), ch.random_channel(2, 3, rng)
    sandwich = ch.apply_superchannel(Superchannel(pre, 1, post), n0)
    assert ch.channel_distance(sandwich, ch.compose(post, ch.compose(n0, pre))) < 1e-10
    with pytest.raises(DimensionMismatch):
        ch.apply_superchannel(Superchannel(ch.identity(3), 1, ch.identity(3)), n0)


def test_constructors():
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(ch.dephasing(2)(plus).matrix, np.eye(2) / 2, atol=1e-12)
    target = basis_state(2, 1)
    rep = ch.replacement(2, target)
    np.testing.assert_allclose(rep(plus).matrix, np.diag([0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(ch.depolarizing(2, 2)(np.diag([1.0, 0])).matrix, np.eye(2) / 2)
    with pytest.raises(ch.NotIsometry):
        ch.isometry(np.array([[1.0, 1.0], [0.0, 1.0]]))
    sw = ch.swap(2, 3)
    a, b = np.diag([1.0, 0]), np.diag([0.2, 0.3, 0.5])
    np.testing.assert_allclose(sw(np.kron(a, b)).matrix, np.kron(b, a), atol=1e-12)


def test_measurement_channel():
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    povm = (np.outer(plus, plus), np.outer(minus, minus))
    m = ch.Measurement(povm, (np.diag([1.0, 0]), np.diag([0, 1.0])))
    out = ch.measurement_channel(m)(np.outer(plus, plus)).matrix
    np.testing.assert_allclose(out, np.diag([1.0, 0]), atol=1e-12)
    with pytest.raises(ValueError):
        ch.Measurement((np.eye(2), np.eye(2)), (np.eye(2) / 2, np.eye(2) / 2))


def test_random_channel_is_valid(rng):
    for d_in, d_out in ((2, 2), (3, 2), (4, 2), (2, 3)):
        for _ in range(10):
            c = ch.random_channel(d_in, d_out, rng)
            assert ch.validate(c).passed
            assert math.ceil(d_in / d_out) <= c.rank <= d_in * d_out
    with pytest.raises(ValueError):
        ch.random_channel(4, 2, rng, rank=1)


def test_kraus_and_choi_actions_agree(rng):
    for _ in range(5):
        c = ch.random_channel(3, 2, rng)
        rebuilt = ch.from_choi(ch.to_choi(c))
        rho = ch.random_state(3, rng)
        np.testing.assert_allclose(c(rho).matrix, rebuilt(rho).matrix, atol=1e-9)


def test_subchannel_examples(rng):
    frozen = ch.random_state(2, rng)
    ii = ch.tensor(ch.identity(2), ch.identity(2))
    assert ch.channel_distance(ch.subchannel(ii, "A", frozen), ch.identity(2)) < 1e-12
    sw = ch.swap(2, 2)
    assert ch.channel_distance(ch.subchannel(sw, "A", frozen), ch.replacement(2, frozen)) < 1e-12
    di = ch.tensor(ch.depolarizing(2), ch.identity(2))
    assert ch.channel_distance(ch.subchannel(di, "C", frozen), ch.identity(2)) < 1e-12
    na, nc = ch.random_channel(2, 2, rng), ch.random_channel(3, 2, rng)
    prod = ch.tensor(na, nc)
    for _ in range(3):
        assert ch.channel_distance(ch.subchannel(prod, "A", ch.random_state(3, rng)), na) < 1e-9
    with pytest.raises(DimensionMismatch):
        ch.subchannel(ch.identity(4), "A", frozen)


def test_channel_distance():
    assert ch.channel_distance(ch.identity(2), ch.identity(2)) == 0
    d = ch.channel_distance(ch.identity(2), ch.depolarizing(2))
    assert d == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    assert d == pytest.approx(ch.channel_distance(ch.depolarizing(2), ch.identity(2)))


def test_json_round_trip(tmp_path, n0):
    p = tmp_path / "n0.json"
    ch.save_channel(n0, p, note="x")
    back = ch.load_channel(p)
    assert ch.channel_distance(back, n0) < 1e-15
    assert ch.load_channel_meta(p)["note"] == "x"
    bell = ch.state_preparation(maximally_entangled(2)).with_dims((1, 1), (2, 2))
    ch.save_channel(bell, p)
    assert ch.load_channel(p).out_dims == (2, 2)


def test_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ch.ParseError):
        ch.load_channel(p)
    p.write_text(json.dumps({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0], [0, 1]]]}))
    with pytest.raises(ch.ParseError):
        ch.load_channel(p)
    with pytest.raises(ch.ParseError):
        ch.load_channel(tmp_path / "missing.json")
    p.write_text(json.dumps({"dim_in": 2, "dim_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]}))
    with pytest.raises(ch.ChannelValidationError) as info:
        ch.load_channel(p)
    assert info.value.report.residual_norm == pytest.approx(1.0)
