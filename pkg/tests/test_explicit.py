import numpy as np
import pytest

from seumrm import engine
from seumrm.explicit import export_explicit, import_explicit, read_explicit, write_explicit
from seumrm.model import ModelError


def test_c1_files(c1):
    doc = export_explicit(c1)
    head = doc["tra"].splitlines()[0].split()
    assert head == ["16", str(c1.n_transitions)]
    assert doc["lab"].splitlines()[0].startswith('0="init" 1="operational"')
    assert doc["lab"].splitlines()[1] == "0: 0 1"
    assert doc["rew"].splitlines()[0].split()[:3] == ["#", "state", "throughput"]


def test_transitions_sorted(c4):
    rows = [tuple(map(float, ln.split()[:2])) for ln in export_explicit(c4)["tra"].splitlines()[1:]]
    assert rows == sorted(rows)


def test_roundtrip_files(tmp_path, c4):
    paths = write_explicit(c4, tmp_path / "c4")
    assert sorted(p.suffix for p in paths) == [".lab", ".rew", ".tra"]
    back = read_explicit(tmp_path / "c4")
    assert back.n_states == 25
    assert (back.rates != c4.rates).nnz == 0
    assert back.labels == c4.labels
    for name, vec in c4.rewards.items():
        assert np.array_equal(back.rewards[name], vec)


def test_roundtrip_analyses(c1):
    back = import_explicit(**export_explicit(c1))
    for name in ("operational", "failed", "throughput"):
        a = engine.cumulative_reward(c1, name, 365)
        b = engine.cumulative_reward(back, name, 365)
        assert abs(a - b) <= 1e-12 * max(1, abs(a))
    assert abs(engine.expected_steady_reward(c1, "failed") - engine.expected_steady_reward(back, "failed")) <= 1e-12


def test_two_init_states_rejected(c1):
    doc = export_explicit(c1)
    lines = doc["lab"].splitlines()
    lines[2] = lines[2].split(":")[0] + ": 0 " + lines[2].split(":")[1].strip()
    with pytest.raises(ModelError, match="exactly one init"):
        import_explicit(doc["tra"], "\n".join(lines), doc["rew"])


def test_transition_count_mismatch(c1):
    doc = export_explicit(c1)
    tra = "\n".join(doc["tra"].splitlines()[:-1])
    with pytest.raises(ModelError, match="transitions"):
        import_explicit(tra, doc["lab"], doc["rew"])
