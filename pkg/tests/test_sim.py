import numpy as np
import pytest
import scipy.sparse as sp

from oracles import two_state_model
from seumrm import engine
from seumrm.model import DEGRADED, OPERATIONAL, FAILED_SAFE, MarkovRewardModel, failure_rates
from seumrm.sim import (
    BLOCK, ClassTime, Estimate, Invariance, ReachTime, SimConfig, SimError, Sojourns, TransientIndicator, estimate,
    sample, simulate_measures,
)


def _good(m):
    return m.label_mask(OPERATIONAL) | m.label_mask(DEGRADED)


def test_absorbing_state_invariance():
    rates = sp.csr_matrix((1, 1))
    m = MarkovRewardModel(rates, 0, (OPERATIONAL,), {"one": np.ones(1)})
    inv = Invariance(np.array([True]), 50.0)
    ct = ClassTime(np.array([True]), 50.0)
    est = simulate_measures(m, SimConfig(50.0, 100, 1), [inv, ct])
    assert est[inv] == Estimate(1.0, 0.0, 100)
    assert est[ct].mean == 50.0 and est[ct].half_width == 0.0


def test_same_seed_identical(c1):
    ms = [ClassTime("operational", 100.0), Invariance(_good(c1), 30.0)]
    a = sample(c1, SimConfig(100.0, 700, 42), ms)
    b = sample(c1, SimConfig(100.0, 700, 42), ms)
    assert a.tobytes() == b.tobytes()
    c = sample(c1, SimConfig(100.0, 700, 43), ms)
    assert not np.array_equal(a, c)


def test_prefix_stable(c1):
    ms = [ClassTime("degraded", 50.0)]
    small = sample(c1, SimConfig(50.0, BLOCK + 10, 9), ms)
    big = sample(c1, SimConfig(50.0, 3 * BLOCK, 9), ms)
    assert np.array_equal(small, big[:BLOCK + 10])


def test_config_validation():
    with pytest.raises(SimError):
        SimConfig(10.0, 0)
    with pytest.raises(SimError):
        SimConfig(-1.0, 10)
    with pytest.raises(SimError):
        SimConfig(1.0, 10, confidence=1.0)


def test_unknown_measure(c1):
    with pytest.raises(SimError, match="unknown measure"):
        sample(c1, SimConfig(1.0, 10), ["class-time"])


def test_estimate_interval():
    e = estimate(np.array([1.0, 2.0, 3.0, 4.0]), 0.95)
    assert e.mean == 2.5 and e.n == 4
    assert e.half_width == pytest.approx(1.959964 * np.std([1, 2, 3, 4], ddof=1) / 2, rel=1e-5)
    assert e.contains(2.5) and not e.contains(10)


def test_two_state_transient():
    m = two_state_model(0.3, 1.7)
    down = np.array([False, True])
    tr = TransientIndicator(down, 2.0)
    est = simulate_measures(m, SimConfig(2.0, 20000, 5), [tr])[tr]
    assert est.contains(engine.transient(m, [1, 0], 2.0)[1])


def test_holding_time_includes_self_loop(case, c1):
    lam = failure_rates(case.configs["C1"], case.library)
    init = c1.label_mask("init")
    ct, so = ClassTime(init, 400.0), Sojourns(init, 400.0)
    data = sample(c1, SimConfig(400.0, 2000, 11), [ct, so])
    holding = data[:, 0].sum() / data[:, 1].sum()
    assert holding == pytest.approx(1 / (1 + 2 * lam["add"] + 2 * lam["mul"]), rel=0.01)


def test_mean_time_to_failure(c1):
    failed = c1.label_mask("failed")
    rt = ReachTime(failed)
    est = simulate_measures(c1, SimConfig(0.0, 20000, 3), [rt])[rt]
    assert est.contains(engine.reach_reward(c1, np.ones(c1.n_states), failed))


def test_safety_dominates_reliability(c1):
    safe = _good(c1) | c1.label_mask(FAILED_SAFE)
    data = sample(c1, SimConfig(90.0, 2000, 8), [Invariance(_good(c1), 90.0), Invariance(safe, 90.0)])
    assert np.all(data[:, 1] >= data[:, 0])


def test_statistical_contract(case, c1):
    """Engine values sit inside the 99% CI in at least 95% of 20 seeded runs."""
    T_long = 1e4
    measures = [ClassTime("operational", 3650.0), Invariance(_good(c1), 90.0), ClassTime("failed", T_long)]
    exact = [
        engine.cumulative_reward(c1, "operational", 3650.0),
        engine.invariance_prob(c1, _good(c1), 90.0),
        engine.expected_steady_reward(c1, "failed") * T_long,
    ]
    hits = np.zeros(len(measures), dtype=int)
    for seed in range(20):
        est = simulate_measures(c1, SimConfig(T_long, 2 * BLOCK, 1000 + seed), measures)
        hits += [est[m].contains(v) for m, v in zip(measures, exact)]
    assert np.all(hits >= 19), hits
