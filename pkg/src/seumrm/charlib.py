"""Component characterization library and SEU failure rates.

Rates leave this module in failures per day; everything downstream
(scrub intervals, mission times, MTBFs) is day-denominated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

SECONDS_PER_DAY = 86400.0


class LibraryError(ValueError):
    """Raised for malformed or inconsistent characterization libraries."""


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    lut_count: int
    essential_bits: int
    op_class: str


@dataclass(frozen=True)
class Environment:
    name: str
    lambda_bit: float  # upsets / bit / second


@dataclass(frozen=True)
class CharacterizationLibrary:
    components: tuple[ComponentSpec, ...]
    environments: tuple[Environment, ...]

    def component(self, name: str) -> ComponentSpec:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise LibraryError(f"unknown component {name!r}")

    def environment(self, name: str) -> Environment:
        for env in self.environments:
            if env.name == name:
                return env
        raise LibraryError(f"unknown environment {name!r}")


def _positive(value, where: str, integral: bool):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LibraryError(f"{where}: expected a number, got {value!r}")
    if integral and int(value) != value:
        raise LibraryError(f"{where}: expected an integer, got {value!r}")
    if not value > 0:
        raise LibraryError(f"{where}: non-positive value {value!r}")
    return int(value) if integral else float(value)


def _field(record: dict, key: str, where: str):
    if not isinstance(record, dict):
        raise LibraryError(f"{where}: expected an object")
    if key not in record:
        raise LibraryError(f"{where}: missing field {key!r}")
    return record[key]


def parse_library(text: str) -> CharacterizationLibrary:
    """Parse a JSON characterization library document.

    Errors carry the location of the offending record, e.g.
    ``components[2].luts: non-positive value 0``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LibraryError(f"malformed document: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise LibraryError("malformed document: top level must be an object")

    raw_components = doc.get("components")
    if not isinstance(raw_components, list):
        raise LibraryError("malformed document: 'components' must be an array")
    if not raw_components:
        raise LibraryError("empty library: no components")
    raw_envs = doc.get("environments")
    if not isinstance(raw_envs, list):
        raise LibraryError("malformed document: 'environments' must be an array")
    if not raw_envs:
        raise LibraryError("empty library: no environments")

    components = []
    seen = set()
    for i, rec in enumerate(raw_components):
        where = f"components[{i}]"
        name = _field(rec, "name", where)
        if not isinstance(name, str) or not name:
            raise LibraryError(f"{where}.name: expected a non-empty string")
        if name in seen:
            raise LibraryError(f"{where}: duplicate component {name!r}")
        seen.add(name)
        op_class = _field(rec, "op_class", where)
        if not isinstance(op_class, str) or not op_class:
            raise LibraryError(f"{where}.op_class: expected a non-empty string")
        luts = _positive(_field(rec, "luts", where), f"{where}.luts", integral=True)
        bits = _positive(_field(rec, "essential_bits", where), f"{where}.essential_bits", integral=True)
        components.append(ComponentSpec(name, luts, bits, op_class))

    envs = []
    seen = set()
    for i, rec in enumerate(raw_envs):
        where = f"environments[{i}]"
        name = _field(rec, "name", where)
        if not isinstance(name, str) or not name:
            raise LibraryError(f"{where}.name: expected a non-empty string")
        if name in seen:
            raise LibraryError(f"{where}: duplicate environment {name!r}")
        seen.add(name)
        lam = _positive(_field(rec, "lambda_bit_per_sec", where), f"{where}.lambda_bit_per_sec", integral=False)
        envs.append(Environment(name, lam))

    return CharacterizationLibrary(tuple(components), tuple(envs))


def load_library(path) -> CharacterizationLibrary:
    return parse_library(Path(path).read_text(encoding="utf-8"))


def failure_rate(comp: ComponentSpec, env: Environment) -> float:
    """SEU failure rate of one component instance, in failures per day.

    Every essential bit is counted as critical (worst case).
    """
    return comp.essential_bits * env.lambda_bit * SECONDS_PER_DAY


def mtbf_days(rate: float) -> float:
    if not rate > 0:
        raise ValueError("non-positive rate")
    return 1.0 / rate
