"""Data-flow graphs and resource-constrained scheduling.

Every operation takes one control step and operations are not chained, so a
schedule is a map from node to a 1-based step. ``list_schedule`` seeds a
branch-and-bound search with an ALAP-priority list schedule and returns a
minimum-latency schedule for the given allocation.
"""

from __future__ import annotations

import graphlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

log = logging.getLogger(__name__)

Allocation = Mapping[str, int]


class CdfgError(ValueError):
    pass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    op: str


@dataclass(frozen=True)
class Cdfg:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[str, str], ...] = ()
    name: str = ""

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CdfgError(f"duplicate node id {dup!r}")
        known = set(ids)
        for u, v in self.edges:
            for end in (u, v):
                if end not in known:
                    raise CdfgError(f"dangling edge ({u!r}, {v!r}): unknown node {end!r}")
        sorter = graphlib.TopologicalSorter({i: () for i in ids})
        for u, v in self.edges:
            sorter.add(v, u)
        try:
            sorter.prepare()
        except graphlib.CycleError as exc:
            raise CdfgError(f"cycle detected through {exc.args[1]}") from None

    @cached_property
    def index(self) -> dict[str, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    @cached_property
    def preds(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.nodes]
        for u, v in self.edges:
            out[self.index[v]].append(self.index[u])
        return tuple(tuple(sorted(set(p))) for p in out)

    @cached_property
    def succs(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.nodes]
        for u, v in self.edges:
            out[self.index[u]].append(self.index[v])
        return tuple(tuple(sorted(set(s))) for s in out)

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        indeg = [len(p) for p in self.preds]
        ready = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        while ready:
            u = ready.pop(0)
            order.append(u)
            for v in self.succs[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        return tuple(order)

    @cached_property
    def heights(self) -> tuple[int, ...]:
        """Nodes on the longest path from each node to a sink, inclusive."""
        h = [1] * len(self.nodes)
        for u in reversed(self.topo_order):
            if self.succs[u]:
                h[u] = 1 + max(h[v] for v in self.succs[u])
        return tuple(h)

    def op_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for n in self.nodes:
            counts[n.op] = counts.get(n.op, 0) + 1
        return counts


@dataclass(frozen=True)
class Schedule:
    assignment: dict[str, int] = field(hash=False)
    c_steps: int


def parse_cdfg(text: str) -> Cdfg:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CdfgError(f"malformed document: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise CdfgError("malformed document: expected an object with a 'nodes' array")
    nodes = []
    for i, rec in enumerate(doc["nodes"]):
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), str) or not isinstance(rec.get("op"), str):
            raise CdfgError(f"nodes[{i}]: expected {{id: string, op: string}}")
        nodes.append(Node(rec["id"], rec["op"]))
    edges = []
    for i, e in enumerate(doc.get("edges", [])):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise CdfgError(f"edges[{i}]: expected a [from, to] pair of node ids")
        edges.append((e[0], e[1]))
    return Cdfg(tuple(nodes), tuple(edges), name=str(doc.get("name", "")))


def load_cdfg(path) -> Cdfg:
    return parse_cdfg(Path(path).read_text(encoding="utf-8"))


def critical_path_length(cdfg: Cdfg) -> int:
    return max(cdfg.heights, default=0)


def _check_alloc(cdfg: Cdfg, alloc: Allocation) -> None:
    for op in sorted(cdfg.op_counts()):
        if alloc.get(op, 0) < 1:
            raise ScheduleError(f"infeasible allocation: no units for op class {op!r}")


def lower_bound(cdfg: Cdfg, alloc: Allocation) -> int:
    """max(critical path, ceil(count/units) per op class)."""
    bound = critical_path_length(cdfg)
    for op, count in cdfg.op_counts().items():
        bound = max(bound, math.ceil(count / alloc[op]))
    return bound


def _priority(cdfg: Cdfg) -> list[tuple[int, int]]:
    # ALAP step ascending == least slack first; ties by declaration order
    cp = critical_path_length(cdfg)
    return [(cp - h + 1, i) for i, h in enumerate(cdfg.heights)]


def _list_schedule(cdfg: Cdfg, alloc: Allocation) -> list[int]:
    prio = _priority(cdfg)
    n = len(cdfg.nodes)
    step_of = [0] * n
    remaining = set(range(n))
    step = 0
    while remaining:
        step += 1
        ready = sorted(
            (v for v in remaining if all(0 < step_of[p] < step for p in cdfg.preds[v])),
            key=prio.__getitem__,
        )
        used: dict[str, int] = {}
        for v in ready:
            op = cdfg.nodes[v].op
            if used.get(op, 0) < alloc[op]:
                used[op] = used.get(op, 0) + 1
                step_of[v] = step
                remaining.discard(v)
    return step_of


class _Search:
    """Depth-first branch and bound over per-step ready-set selections.

    Only non-idling selections are explored: with unit-time operations any
    schedule can be shifted into one that fills every free unit with a ready
    operation of its class without increasing the latency.
    """

    def __init__(self, cdfg: Cdfg, alloc: Allocation, best: int, best_steps: list[int], node_limit: int):
        self.g = cdfg
        self.ops = sorted(cdfg.op_counts())
        self.cap = {op: alloc[op] for op in self.ops}
        self.op_of = [n.op for n in cdfg.nodes]
        self.h = cdfg.heights
        self.prio = _priority(cdfg)
        self.pred_mask = [sum(1 << p for p in ps) for ps in cdfg.preds]
        self.full = (1 << len(cdfg.nodes)) - 1
        self.best = best
        self.best_steps = list(best_steps)
        self.seen: dict[int, int] = {}
        self.nodes_left = node_limit
        self.exhausted = False

    def bound(self, done: int, t: int, ready: list[int]) -> int:
        lb = 0
        ready_set = set(ready)
        ready_count: dict[str, int] = {}
        rem_count: dict[str, int] = {}
        for v in range(len(self.op_of)):
            if done >> v & 1:
                continue
            op = self.op_of[v]
            rem_count[op] = rem_count.get(op, 0) + 1
            if v in ready_set:
                ready_count[op] = ready_count.get(op, 0) + 1
                lb = max(lb, t - 1 + self.h[v])
            else:
                lb = max(lb, t + self.h[v])
        for op, rem in rem_count.items():
            now = min(ready_count.get(op, 0), self.cap[op])
            rest = rem - now
            lb = max(lb, t + math.ceil(rest / self.cap[op]) if rest else t)
        return lb

    def run(self, done: int, t: int, steps: list[int]) -> None:
        if done == self.full:
            if t - 1 < self.best:
                self.best = t - 1
                self.best_steps = list(steps)
            return
        if self.nodes_left <= 0:
            self.exhausted = True
            return
        self.nodes_left -= 1
        if self.seen.get(done, math.inf) <= t:
            return
        self.seen[done] = t
        ready = [
            v for v in range(len(self.op_of))
            if not done >> v & 1 and self.pred_mask[v] & done == self.pred_mask[v]
        ]
        lb = self.bound(done, t, ready)
        if lb >= self.best:
            return
        ready.sort(key=self.prio.__getitem__)
        per_op = []
        for op in self.ops:
            cands = [v for v in ready if self.op_of[v] == op]
            per_op.append(itertools.combinations(cands, min(len(cands), self.cap[op])))
        for choice in itertools.product(*per_op):
            picked = [v for group in choice for v in group]
            mask = done
            for v in picked:
                mask |= 1 << v
                steps[v] = t
            self.run(mask, t + 1, steps)
            for v in picked:
                steps[v] = 0
            if self.exhausted or self.best <= lb:
                return


def list_schedule(cdfg: Cdfg, alloc: Allocation, *, exact: bool = True, node_limit: int = 200_000) -> Schedule:
    """Minimum-latency schedule of ``cdfg`` on ``alloc`` units per op class.

    With ``exact=False`` the ALAP-priority list schedule is returned as is.
    Otherwise it becomes the incumbent of a branch-and-bound search; if the
    search exceeds ``node_limit`` the best schedule found so far is returned.
    """
    _check_alloc(cdfg, alloc)
    if not cdfg.nodes:
        return Schedule({}, 0)
    steps = _list_schedule(cdfg, alloc)
    best = max(steps)
    if exact and best > lower_bound(cdfg, alloc):
        search = _Search(cdfg, alloc, best, steps, node_limit)
        search.run(0, 1, [0] * len(cdfg.nodes))
        if search.exhausted:
            log.warning("schedule search for %s stopped after %d nodes; result may be suboptimal",
                        cdfg.name or "cdfg", node_limit)
        steps = search.best_steps
    assignment = {n.id: steps[i] for i, n in enumerate(cdfg.nodes)}
    return Schedule(assignment, max(steps))


def throughput(c_steps: int, eta: float) -> float:
    """Results per second of a non-pipelined datapath clocked at ``eta`` Hz."""
    if c_steps < 1:
        raise ValueError("unschedulable/failed state has no throughput")
    if not eta > 0:
        raise ValueError("clock frequency must be positive")
    return eta / c_steps


def normalized_throughput(c_steps: int, c_steps_min: int) -> float:
    if c_steps_min < 1 or c_steps < c_steps_min:
        raise ValueError(f"inconsistent normalization: {c_steps} steps against a minimum of {c_steps_min}")
    return c_steps_min / c_steps
