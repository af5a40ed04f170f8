"""Explicit-state dump of a model: ``.tra``, ``.lab`` and ``.rew`` files.

All three are whitespace-delimited with one record per line and 0-indexed
states; the initial state is state 0.

``.tra``   ``<states> <transitions>`` header, then ``from to rate`` (self-loops kept)
``.lab``   label declarations ``0="init" 1="operational" ...``, then ``state: ids``
``.rew``   ``# state <name> <name> ...`` header, then one row of rewards per state
"""

from __future__ import annotations

import shlex
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .model import CLASSES, MarkovRewardModel, ModelError

_LABELS = ("init",) + CLASSES


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def export_explicit(mrm: MarkovRewardModel) -> dict[str, str]:
    """Render ``mrm`` as ``{"tra": ..., "lab": ..., "rew": ...}`` documents."""
    if mrm.initial != 0:
        raise ModelError("explicit export expects the initial state at index 0")
    coo = mrm.rates.tocoo()
    order = np.lexsort((coo.col, coo.row))
    tra = [f"{mrm.n_states} {coo.nnz}"]
    tra += [f"{coo.row[k]} {coo.col[k]} {_num(coo.data[k])}" for k in order]

    lab = [" ".join(f'{i}="{name}"' for i, name in enumerate(_LABELS))]
    for s, cls in enumerate(mrm.labels):
        ids = ([0] if s == mrm.initial else []) + [_LABELS.index(cls)]
        lab.append(f"{s}: " + " ".join(map(str, ids)))

    names = list(mrm.rewards)
    for name in names:
        if any(ch.isspace() for ch in name):
            raise ModelError(f"reward name {name!r} contains whitespace")
    rew = ["# state " + " ".join(names)]
    for s in range(mrm.n_states):
        rew.append(" ".join([str(s)] + [_num(mrm.rewards[name][s]) for name in names]))

    return {key: "\n".join(lines) + "\n" for key, lines in (("tra", tra), ("lab", lab), ("rew", rew))}


def write_explicit(mrm: MarkovRewardModel, stem) -> list[Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    for ext, text in export_explicit(mrm).items():
        path = stem.with_name(f"{stem.name}.{ext}")
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def import_explicit(tra: str, lab: str, rew: str) -> MarkovRewardModel:
    lines = [ln.split() for ln in tra.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ModelError(".tra: missing '<states> <transitions>' header")
    n, m = int(lines[0][0]), int(lines[0][1])
    if len(lines) - 1 != m:
        raise ModelError(f".tra: header announces {m} transitions, found {len(lines) - 1}")
    rows, cols, data = [], [], []
    for k, rec in enumerate(lines[1:], start=2):
        if len(rec) != 3:
            raise ModelError(f".tra line {k}: expected 'from to rate'")
        rows.append(int(rec[0]))
        cols.append(int(rec[1]))
        data.append(float(rec[2]))
    rates = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    rates.sort_indices()

    lab_lines = [ln for ln in lab.splitlines() if ln.strip()]
    decl = {}
    for item in shlex.split(lab_lines[0]):
        idx, _, name = item.partition("=")
        decl[int(idx)] = name
    labels: list[str | None] = [None] * n
    inits = []
    for k, ln in enumerate(lab_lines[1:], start=2):
        head, _, rest = ln.partition(":")
        s = int(head)
        for i in map(int, rest.split()):
            name = decl[i]
            if name == "init":
                inits.append(s)
            elif name in CLASSES:
                if labels[s] is not None:
                    raise ModelError(f".lab line {k}: state {s} has two class labels")
                labels[s] = name
    if len(inits) != 1:
        raise ModelError(f".lab: expected exactly one init state, found {len(inits)}")
    if any(x is None for x in labels):
        raise ModelError(".lab: some states carry no class label")

    rew_lines = [ln.split() for ln in rew.splitlines() if ln.strip()]
    if not rew_lines or rew_lines[0][:2] != ["#", "state"]:
        raise ModelError(".rew: missing '# state <names>' header")
    names = rew_lines[0][2:]
    table = np.zeros((n, len(names)))
    for rec in rew_lines[1:]:
        table[int(rec[0])] = [float(x) for x in rec[1:]]
    rewards = {name: table[:, j].copy() for j, name in enumerate(names)}

    return MarkovRewardModel(rates=rates, initial=inits[0], labels=tuple(labels), rewards=rewards)


def read_explicit(stem) -> MarkovRewardModel:
    stem = Path(stem)
    text = {ext: stem.with_name(f"{stem.name}.{ext}").read_text(encoding="utf-8") for ext in ("tra", "lab", "rew")}
    return import_explicit(text["tra"], text["lab"], text["rew"])
