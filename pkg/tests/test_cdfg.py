import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_steps, random_dag
from seumrm.cdfg import (
    Cdfg, CdfgError, Node, ScheduleError, critical_path_length, list_schedule, load_cdfg, lower_bound,
    normalized_throughput, parse_cdfg, throughput,
)


def _valid(cdfg, sched, alloc):
    """Precedence respected and no step over capacity."""
    steps = sched.assignment
    for u, v in cdfg.edges:
        if not steps[u] < steps[v]:
            return False
    for t in range(1, sched.c_steps + 1):
        for op, cap in alloc.items():
            if sum(1 for n in cdfg.nodes if n.op == op and steps[n.id] == t) > cap:
                return False
    return max(steps.values(), default=0) == sched.c_steps


def test_fig1(data):
    g = load_cdfg(data("fig1.cdfg.json"))
    full = list_schedule(g, {"add": 2, "mul": 2})
    less = list_schedule(g, {"add": 2, "mul": 1})
    assert (full.c_steps, less.c_steps) == (3, 4)
    assert normalized_throughput(less.c_steps, full.c_steps) == pytest.approx(0.75)
    assert 1 / full.c_steps == pytest.approx(0.33, abs=0.005)
    assert 1 / less.c_steps == pytest.approx(0.25)


@pytest.mark.parametrize("alloc, steps", [
    ({"add": 2, "mul": 2}, 14), ({"add": 2, "mul": 1}, 18), ({"add": 1, "mul": 2}, 16), ({"add": 1, "mul": 1}, 18),
])
def test_fir_steps(data, alloc, steps):
    g = load_cdfg(data("fir16.cdfg.json"))
    sched = list_schedule(g, alloc)
    assert sched.c_steps == steps
    assert _valid(g, sched, alloc)
    assert sched.c_steps >= lower_bound(g, alloc)


def test_fir_shape(data):
    g = load_cdfg(data("fir16.cdfg.json"))
    assert g.op_counts() == {"mul": 16, "add": 15}


def test_chain_is_critical_path():
    nodes = tuple(Node(f"n{i}", "add") for i in range(5))
    edges = tuple((f"n{i}", f"n{i + 1}") for i in range(4))
    g = Cdfg(nodes, edges)
    assert critical_path_length(g) == 5
    assert list_schedule(g, {"add": 3}).c_steps == 5


def test_independent_ops_hit_ceiling_bound():
    g = Cdfg(tuple(Node(f"m{i}", "mul") for i in range(7)))
    assert list_schedule(g, {"mul": 3}).c_steps == math.ceil(7 / 3)


def test_empty_graph():
    assert list_schedule(Cdfg(()), {}).c_steps == 0


def test_infeasible_allocation():
    g = Cdfg((Node("a", "add"),))
    with pytest.raises(ScheduleError, match="infeasible"):
        list_schedule(g, {"add": 0})
    with pytest.raises(ScheduleError, match="infeasible"):
        list_schedule(g, {"mul": 1})


def test_cycle_rejected():
    with pytest.raises(CdfgError, match="cycle"):
        Cdfg((Node("a", "add"), Node("b", "add")), (("a", "b"), ("b", "a")))


def test_dangling_edge_rejected():
    with pytest.raises(CdfgError, match="dangling"):
        Cdfg((Node("a", "add"),), (("a", "zz"),))


def test_duplicate_id_rejected():
    with pytest.raises(CdfgError, match="duplicate"):
        parse_cdfg(json.dumps({"nodes": [{"id": "a", "op": "add"}, {"id": "a", "op": "mul"}]}))


def test_malformed_document():
    with pytest.raises(CdfgError, match="malformed"):
        parse_cdfg("[1, 2")
    with pytest.raises(CdfgError, match=r"edges\[0\]"):
        parse_cdfg(json.dumps({"nodes": [{"id": "a", "op": "add"}], "edges": [["a"]]}))


def test_throughput_helpers():
    assert throughput(4, 100e6) == pytest.approx(25e6)
    with pytest.raises(ValueError):
        throughput(0, 1.0)
    with pytest.raises(ValueError, match="inconsistent normalization"):
        normalized_throughput(3, 4)


def test_deterministic():
    g = random_dag(random.Random(5), 12)
    alloc = {"add": 2, "mul": 1}
    assert list_schedule(g, alloc).assignment == list_schedule(g, alloc).assignment


@st.composite
def graphs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(0, 9))
    rng = random.Random(seed)
    g = random_dag(rng, n)
    alloc = {"add": draw(st.integers(1, 3)), "mul": draw(st.integers(1, 3))}
    return g, alloc


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_schedule_properties(case):
    g, alloc = case
    sched = list_schedule(g, alloc)
    assert _valid(g, sched, alloc)
    assert sched.c_steps >= lower_bound(g, alloc) if g.nodes else sched.c_steps == 0
    assert sched.c_steps == brute_force_steps(g, alloc)
    # the plain list schedule is never better than the exact one
    assert list_schedule(g, alloc, exact=False).c_steps >= sched.c_steps


@settings(max_examples=60, deadline=None)
@given(graphs(), st.sampled_from(["add", "mul"]))
def test_more_units_never_hurt(case, op):
    g, alloc = case
    more = dict(alloc, **{op: alloc[op] + 1})
    assert list_schedule(g, more).c_steps <= list_schedule(g, alloc).c_steps
