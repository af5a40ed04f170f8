import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seumrm.cdfg import Cdfg, Node
from seumrm.model import (
    CLASSES, DEGRADED, FAILED_SAFE, FAILED_UNSAFE, OPERATIONAL, ConfigError, Configuration, ModelError, area,
    build_model, failure_rates, overall_reward, parse_configuration,
)


def _config(**kw):
    base = dict(base_alloc={"add": 2, "mul": 2}, spares={}, min_alloc={"add": 1, "mul": 1}, coverage=0.99,
                scrub_interval_days=1.0, binding={"add": "Kogge-Stone Adder", "mul": "Wallace Tree Multiplier"},
                environment="HEO")
    base.update(kw)
    return Configuration(**base)


def state_index(mrm, add, mul):
    i = mrm.variables.index("add")
    j = mrm.variables.index("mul")
    hit = np.flatnonzero((mrm.values[:, i] == add) & (mrm.values[:, j] == mul))
    assert hit.size == 1
    return int(hit[0])


@pytest.mark.parametrize("name, n", [("C1", 16), ("C2", 20), ("C3", 20), ("C4", 25)])
def test_state_counts(case, name, n):
    m = case.model(name, 1.0, 0.99)
    assert m.n_states == n
    assert m.initial == 0
    assert m.labels[m.initial] == OPERATIONAL


def test_c1_transitions(case, c1):
    lam = failure_rates(case.configs["C1"], case.library)
    s = state_index(c1, 2, 2)
    R = c1.rates
    assert R[s, state_index(c1, 1, 2)] == pytest.approx(0.99 * 2 * lam["add"])
    assert R[s, state_index(c1, 3, 2)] == pytest.approx(0.01 * 2 * lam["add"])
    assert R[s, state_index(c1, 2, 1)] == pytest.approx(0.99 * 2 * lam["mul"])
    assert R[s, s] == pytest.approx(1.0)  # scrub self-loop
    # one healthy adder left: only that one can fail
    s1 = state_index(c1, 1, 2)
    assert R[s1, state_index(c1, 0, 2)] == pytest.approx(0.99 * lam["add"])
    assert R[s1, 0] == pytest.approx(1.0)


def test_cold_spare_rate(case):
    m = case.model("C3", 1.0, 0.99)
    lam = failure_rates(case.configs["C3"], case.library)["add"]
    # three healthy adders but only two active
    s = state_index(m, 3, 2)
    assert m.rates[s, state_index(m, 2, 2)] == pytest.approx(0.99 * 2 * lam)


def test_labels(c1):
    lab = dict(zip(map(tuple, c1.values), c1.labels))
    order = c1.variables
    key = lambda add, mul: (add, mul) if order == ("add", "mul") else (mul, add)
    assert lab[key(2, 2)] == OPERATIONAL
    assert lab[key(1, 2)] == DEGRADED
    assert lab[key(0, 2)] == FAILED_SAFE
    assert lab[key(3, 2)] == FAILED_UNSAFE
    # unsafe wins over safe
    assert lab[key(3, 0)] == FAILED_UNSAFE


def test_every_state_scrubs_to_initial(case):
    for name in ("C1", "C2", "C3", "C4"):
        m = case.model(name, 2.0, 0.95)
        assert np.all(m.rates[:, 0].toarray().ravel() >= 0.5 - 1e-12)


def test_throughput_rewards(c1):
    thr = c1.rewards["throughput"]
    failed = c1.label_mask("failed")
    assert np.all(thr[failed] == 0)
    assert thr[c1.initial] == 1.0
    assert np.all((thr[~failed] > 0) & (thr[~failed] <= 1))
    assert thr[state_index(c1, 1, 2)] == pytest.approx(14 / 16)


def test_class_indicators_partition(c4):
    total = sum(c4.rewards[c] for c in CLASSES)
    assert np.all(total == 1)


def test_areas(case):
    assert [case.area(c) for c in ("C1", "C2", "C3", "C4")] == [1810, 2532, 1993, 2715]


def test_overall_reward():
    assert overall_reward(0.955, 0.667) == pytest.approx(1.432, abs=5e-4)
    with pytest.raises(ValueError, match="zero area"):
        overall_reward(0.9, 0)


def test_coverage_out_of_range():
    with pytest.raises(ConfigError, match="coverage"):
        _config(coverage=1.2)


def test_min_alloc_above_base():
    with pytest.raises(ConfigError, match="exceeds"):
        _config(min_alloc={"add": 3, "mul": 1})


def test_negative_counts():
    with pytest.raises(ConfigError):
        _config(spares={"add": -1})


def test_parse_configuration_errors():
    with pytest.raises(ConfigError, match="missing"):
        parse_configuration(json.dumps({"base_alloc": {"add": 1}}))
    with pytest.raises(ConfigError, match="malformed"):
        parse_configuration("{")


def test_unresolved_binding(case):
    cfg = _config(binding={"add": "Kogge-Stone Adder"})
    with pytest.raises(ModelError, match="unresolved binding"):
        build_model(cfg, case.library, case.cdfg)
    cfg = _config(binding={"add": "Kogge-Stone Adder", "mul": "Brent-Kung Adder"})
    with pytest.raises(ModelError):
        build_model(cfg, case.library, case.cdfg)


def test_infeasible_base_allocation(case):
    g = Cdfg((Node("x", "div"),))
    with pytest.raises(ModelError, match="infeasible base allocation"):
        build_model(_config(), case.library, g)


def test_perfect_coverage_drops_unsafe_edges(case):
    m = case.model("C1", 1.0, 1.0)
    unsafe = m.label_mask(FAILED_UNSAFE)
    assert m.rates[~unsafe][:, unsafe].nnz == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2), st.floats(0, 1), st.floats(0.2, 20))
def test_generator_invariants(case, spare_a, spare_m, cov, interval):
    cfg = case.configs["C1"].replace(spares={"add": spare_a, "mul": spare_m}, coverage=cov,
                                     scrub_interval_days=interval)
    m = build_model(cfg, case.library, case.cdfg)
    assert m.n_states == (2 + spare_a + 2) * (2 + spare_m + 2)
    assert m.rates.data.min() > 0
    # exit rate (with self-loops) = scrub + active failures
    lam = failure_rates(cfg, case.library)
    out = np.asarray(m.rates.sum(axis=1)).ravel()
    for s in range(m.n_states):
        expect = 1 / interval
        for k, op in enumerate(m.variables):
            h = m.values[s, k]
            if 0 < h <= cfg.total(op):
                expect += min(h, cfg.base_alloc[op]) * lam[op]
        assert out[s] == pytest.approx(expect)
