"""Coverage-refined Markov reward models of a scheduled datapath.

One counter per operation class holds the number of healthy units, with the
extra value ``total + 1`` marking an undetected (unsafe) failure of that
class. Cold spares only fail once they have replaced a failed unit, so a
class with ``h`` healthy units fails at ``min(h, base) * lambda``. A blind
scrub returns every state, including the initial one, to the initial state.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .cdfg import Cdfg, Schedule, list_schedule, normalized_throughput
from .charlib import CharacterizationLibrary, LibraryError, failure_rate

OPERATIONAL = "operational"
DEGRADED = "degraded"
FAILED_SAFE = "failed_safe"
FAILED_UNSAFE = "failed_unsafe"
CLASSES = (OPERATIONAL, DEGRADED, FAILED_SAFE, FAILED_UNSAFE)

# names used by the guarded-command formulas the classes come from
LABEL_ALIASES = {
    "oper": OPERATIONAL,
    "degrade": DEGRADED,
    "fail_safe": FAILED_SAFE,
    "fail_unsafe": FAILED_UNSAFE,
    "fail": "failed",
}


class ConfigError(ValueError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    base_alloc: dict[str, int]
    spares: dict[str, int]
    min_alloc: dict[str, int]
    coverage: float
    scrub_interval_days: float
    binding: dict[str, str]
    environment: str
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ConfigError(f"coverage must lie in [0, 1], got {self.coverage}")
        if not self.scrub_interval_days > 0:
            raise ConfigError(f"scrub interval must be positive, got {self.scrub_interval_days}")
        if not self.base_alloc:
            raise ConfigError("base_alloc is empty")
        for what, alloc in (("base_alloc", self.base_alloc), ("spares", self.spares), ("min_alloc", self.min_alloc)):
            for op, count in alloc.items():
                if op not in self.base_alloc:
                    raise ConfigError(f"{what}: op class {op!r} is not in base_alloc")
                if isinstance(count, bool) or not isinstance(count, int) or count < 0:
                    raise ConfigError(f"{what}[{op!r}]: expected a non-negative integer, got {count!r}")
        for op, need in self.min_alloc.items():
            if need > self.base_alloc[op]:
                raise ConfigError(f"min_alloc[{op!r}] = {need} exceeds base_alloc[{op!r}] = {self.base_alloc[op]}")

    @property
    def op_classes(self) -> tuple[str, ...]:
        return tuple(sorted(self.base_alloc))

    @property
    def repair_rate(self) -> float:
        return 1.0 / self.scrub_interval_days

    def total(self, op: str) -> int:
        return self.base_alloc[op] + self.spares.get(op, 0)

    def replace(self, **changes) -> "Configuration":
        fields = dict(self.__dict__)
        fields.update(changes)
        return Configuration(**fields)


def parse_configuration(text: str) -> Configuration:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed document: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    required = ("base_alloc", "min_alloc", "coverage", "scrub_interval_days", "binding", "environment")
    if not isinstance(doc, dict):
        raise ConfigError("malformed document: top level must be an object")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ConfigError(f"missing field(s): {', '.join(missing)}")
    try:
        return Configuration(
            base_alloc=dict(doc["base_alloc"]),
            spares=dict(doc.get("spares", {})),
            min_alloc=dict(doc["min_alloc"]),
            coverage=float(doc["coverage"]),
            scrub_interval_days=float(doc["scrub_interval_days"]),
            binding=dict(doc["binding"]),
            environment=str(doc["environment"]),
            name=str(doc.get("name", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed document: {exc}") from None


def load_configuration(path) -> Configuration:
    return parse_configuration(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class MarkovRewardModel:
    """Explicit CTMC with class labels and state rewards.

    ``rates`` keeps self-loops (the scrub at the initial state); analyses
    that need the generator drop them. ``values`` holds the counter value of
    every variable per state and is ``None`` for imported models.
    """

    rates: sp.csr_matrix
    initial: int
    labels: tuple[str, ...]
    rewards: dict[str, np.ndarray]
    variables: tuple[str, ...] = ()
    values: np.ndarray | None = None
    config: Configuration | None = field(default=None, repr=False)

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def n_transitions(self) -> int:
        return self.rates.nnz

    def label_mask(self, name: str) -> np.ndarray:
        name = LABEL_ALIASES.get(name, name)
        labels = np.asarray(self.labels)
        if name in CLASSES:
            return labels == name
        if name == "failed":
            return (labels == FAILED_SAFE) | (labels == FAILED_UNSAFE)
        if name == "init":
            mask = np.zeros(self.n_states, dtype=bool)
            mask[self.initial] = True
            return mask
        raise ModelError(f"unknown label {name!r}")

    @property
    def label_names(self) -> tuple[str, ...]:
        return CLASSES + ("failed", "init") + tuple(LABEL_ALIASES)

    def variable(self, name: str) -> np.ndarray:
        if self.values is None:
            raise ModelError("model carries no state variables")
        if name not in self.variables:
            raise ModelError(f"unknown variable {name!r}")
        return self.values[:, self.variables.index(name)]

    def reward(self, name: str) -> np.ndarray:
        try:
            return self.rewards[name]
        except KeyError:
            raise ModelError(f"unknown reward {name!r}") from None


def area(config: Configuration, lib: CharacterizationLibrary) -> int:
    """LUTs of all instantiated units, spares included."""
    total = 0
    for op in config.op_classes:
        comp = _bound_component(config, lib, op)
        total += config.total(op) * comp.lut_count
    return total


def overall_reward(expected_throughput: float, normalized_area: float) -> float:
    if normalized_area == 0:
        raise ValueError("zero area")
    if not 0 < normalized_area <= 1:
        raise ValueError(f"normalized area must lie in (0, 1], got {normalized_area}")
    return expected_throughput / normalized_area


def _bound_component(config: Configuration, lib: CharacterizationLibrary, op: str):
    if op not in config.binding:
        raise ModelError(f"unresolved binding: no component bound to op class {op!r}")
    try:
        comp = lib.component(config.binding[op])
    except LibraryError as exc:
        raise ModelError(f"unresolved binding for {op!r}: {exc}") from None
    if comp.op_class != op:
        raise ModelError(f"binding for {op!r} names {comp.name!r}, which serves {comp.op_class!r}")
    return comp


def build_model(
    config: Configuration,
    lib: CharacterizationLibrary,
    cdfg: Cdfg,
    *,
    scheduler: Callable[[Cdfg, Mapping[str, int]], Schedule] = list_schedule,
) -> MarkovRewardModel:
    ops = config.op_classes
    for op, count in cdfg.op_counts().items():
        if config.base_alloc.get(op, 0) < 1:
            raise ModelError(f"infeasible base allocation: CDFG needs op class {op!r}")
    env = lib.environment(config.environment)
    lam = {op: failure_rate(_bound_component(config, lib, op), env) for op in ops}
    totals = tuple(config.total(op) for op in ops)
    base = tuple(config.base_alloc[op] for op in ops)
    need = tuple(config.min_alloc.get(op, 0) for op in ops)
    cov = config.coverage
    mu = config.repair_rate

    init_state = totals
    others = [s for s in itertools.product(*(range(t + 2) for t in totals)) if s != init_state]
    states = [init_state] + others
    index = {s: i for i, s in enumerate(states)}

    rows, cols, data = [], [], []
    for i, s in enumerate(states):
        for k, h in enumerate(s):
            if h == 0 or h == totals[k] + 1:
                continue
            rate = min(h, base[k]) * lam[ops[k]]
            if cov > 0:
                rows.append(i)
                cols.append(index[s[:k] + (h - 1,) + s[k + 1:]])
                data.append(cov * rate)
            if cov < 1:
                rows.append(i)
                cols.append(index[s[:k] + (totals[k] + 1,) + s[k + 1:]])
                data.append((1 - cov) * rate)
        rows.append(i)
        cols.append(0)
        data.append(mu)
    n = len(states)
    rates = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    rates.sum_duplicates()
    rates.eliminate_zeros()
    rates.sort_indices()

    labels = []
    for s in states:
        if any(h == t + 1 for h, t in zip(s, totals)):
            labels.append(FAILED_UNSAFE)
        elif any(h < m for h, m in zip(s, need)):
            labels.append(FAILED_SAFE)
        elif s == init_state:
            labels.append(OPERATIONAL)
        else:
            labels.append(DEGRADED)

    c_min = scheduler(cdfg, dict(zip(ops, base))).c_steps
    steps_cache: dict[tuple[int, ...], int] = {}
    thr = np.zeros(n)
    for i, (s, lab) in enumerate(zip(states, labels)):
        if lab in (FAILED_SAFE, FAILED_UNSAFE):
            continue
        active = tuple(min(h, b) for h, b in zip(s, base))
        if active not in steps_cache:
            steps_cache[active] = scheduler(cdfg, dict(zip(ops, active))).c_steps
        thr[i] = normalized_throughput(steps_cache[active], c_min) if c_min else 1.0

    lab_arr = np.asarray(labels)
    rewards = {"throughput": thr}
    for cls in CLASSES:
        rewards[cls] = (lab_arr == cls).astype(float)
    rewards["failed"] = rewards[FAILED_SAFE] + rewards[FAILED_UNSAFE]

    return MarkovRewardModel(
        rates=rates,
        initial=0,
        labels=tuple(labels),
        rewards=rewards,
        variables=ops,
        values=np.asarray(states, dtype=np.int64),
        config=config,
    )


def failure_rates(config: Configuration, lib: CharacterizationLibrary) -> dict[str, float]:
    env = lib.environment(config.environment)
    return {op: failure_rate(_bound_component(config, lib, op), env) for op in config.op_classes}
