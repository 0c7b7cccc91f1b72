import json
import math

import numpy as np
import pytest

from chanrel import channels as ch
from chanrel import properties as props
from chanrel.divergence import DivergenceKind, channel_divergence, pair_objective
from chanrel.optimizer import OptimizerConfig

K = DivergenceKind


@pytest.mark.parametrize("kind,after", [(K.DPhi, 1.0), (K.SPhi, 1.0)])
def test_phi_witness(kind, after):
    v = props.phi_monotonicity_violation(kind)
    assert v.verdict == props.VIOLATED and v.observed == "No" and v.matches
    assert v.witness["values"]["after"] == pytest.approx(after, abs=1e-9)
    assert v.max_residual > props.WITNESS_SLACK
    with pytest.raises(ValueError):
        props.phi_monotonicity_violation(K.DA)


@pytest.mark.parametrize("kind", [K.DA, K.SA])
def test_tensor_witness(kind):
    v = props.stability_violation_A(kind)
    assert v.verdict == props.VIOLATED
    assert v.witness["values"]["lhs"] == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(ValueError):
        props.stability_violation_A(K.DAB)


def test_witnesses_recheck_from_json():
    for v in (props.phi_monotonicity_violation(K.SPhi), props.stability_violation_A(K.DA)):
        w = json.loads(json.dumps(v.witness))
        check = props.recheck_witness(w)
        assert check.confirmed, check


def test_recheck_rejects_tampered_witness():
    w = json.loads(json.dumps(props.stability_violation_A(K.DA).witness))
    w["channels"]["m"] = ch.channel_to_dict(ch.dephasing(2))
    assert not props.recheck_witness(w).confirmed
    w["construction"] = "other"
    assert "unknown" in props.recheck_witness(w).reason


def test_verdict_mapping():
    v = props.PropertyVerdict("StrictAdditivity", K.DAB, props.NOT_ASSERTED)
    assert v.observed == "open" and v.matches
    v = props.PropertyVerdict("Stability", K.DA, props.HOLDS)
    assert v.observed == "Yes" and not v.matches
    v = props.PropertyVerdict("Additivity", K.SAB, props.CONSTRUCTION, samples=3, max_residual=-math.inf)
    d = v.as_dict()
    assert d["observed"] == "Yes" and d["expected"] == "Yes"
    json.dumps(d)


def test_through_pre_preserves_value(rng):
    """The transferred input reaches the same objective on the undecorated pair."""
    n, m = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
    pre = ch.random_channel(2, 2, rng)
    cfg = props.sample_config(0)
    lhs = props.light_search(K.SAB, ch.compose(n, pre), ch.compose(m, pre), cfg)
    x = props.through_pre(lhs.achieving_input.amplitudes, pre, 2, 2)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    rhs = props.light_search(K.SAB, n, m, cfg, [x])
    assert lhs.value <= rhs.value + 1e-9


def test_product_input_lower_bounds_tensor(rng):
    cfg = OptimizerConfig(restarts=2, max_iters=20)
    for kind in (K.DA, K.SAB):
        n0, m0 = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
        n1, m1 = ch.random_channel(3, 2, rng), ch.random_channel(3, 2, rng)
        a, b = channel_divergence(kind, n0, m0, cfg), channel_divergence(kind, n1, m1, cfg)
        x = props.product_input(kind, a.achieving_input.amplitudes, 2, b.achieving_input.amplitudes, 3)
        nt, mt = ch.tensor(n0, n1), ch.tensor(m0, m1)
        anc = 6 if kind.strategy == "AB" else 1
        assert x.shape == (6 * anc,)
        f = pair_objective(nt, mt, kind.smooth, anc)
        assert float(f(x[None])[0]) >= a.value + b.value - 1e-9


def test_small_table_subset_is_deterministic():
    kinds = [K.DA, K.SPhi]
    a = props.run_table1(seed=3, samples=4, kinds=kinds)
    b = props.run_table1(seed=3, samples=4, kinds=kinds, workers=2)
    assert [v.as_dict() for v in a] == [v.as_dict() for v in b]
    assert props.pattern_matches(a)
    grid = props.table_grid(a)
    assert grid["dA"]["Stability"] == "No" and grid["sPhi"]["Stability"] == "Yes"


def test_state_battery():
    b = props.state_battery(seed=1, samples=10)
    assert b.samples == 20
    assert b.joint_convexity <= 1e-9 and b.additivity <= 1e-9
