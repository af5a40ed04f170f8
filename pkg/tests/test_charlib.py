import json

import pytest

from seumrm.charlib import LibraryError, failure_rate, load_library, mtbf_days, parse_library


def _doc(**overrides):
    doc = {
        "components": [{"name": "A", "op_class": "add", "luts": 10, "essential_bits": 1000}],
        "environments": [{"name": "E", "lambda_bit_per_sec": 1e-12}],
    }
    doc.update(overrides)
    return json.dumps(doc)


def test_shipped_library(data):
    lib = load_library(data("virtex5_heo.json"))
    assert [c.name for c in lib.components] == [
        "Wallace Tree Multiplier", "Booth Multiplier", "Brent-Kung Adder", "Kogge-Stone Adder"]
    wallace = lib.component("Wallace Tree Multiplier")
    assert (wallace.lut_count, wallace.essential_bits, wallace.op_class) == (722, 133503, "mul")
    assert lib.environment("HEO").lambda_bit == 7.31e-12


def test_failure_rate_is_bits_times_flux():
    lib = parse_library(_doc())
    rate = failure_rate(lib.component("A"), lib.environment("E"))
    assert rate == pytest.approx(1000 * 1e-12 * 86400)
    assert mtbf_days(rate) == pytest.approx(1 / rate)


def test_wallace_mtbf(data):
    lib = load_library(data("virtex5_heo.json"))
    rate = failure_rate(lib.component("Wallace Tree Multiplier"), lib.environment("HEO"))
    assert mtbf_days(rate) == pytest.approx(11.86, abs=0.01)


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_mtbf_rejects_non_positive(rate):
    with pytest.raises(ValueError, match="non-positive rate"):
        mtbf_days(rate)


def test_empty_library():
    with pytest.raises(LibraryError, match="empty library"):
        parse_library(_doc(components=[]))


def test_duplicate_component():
    comp = {"name": "A", "op_class": "add", "luts": 10, "essential_bits": 1000}
    with pytest.raises(LibraryError, match=r"components\[1\].*duplicate"):
        parse_library(_doc(components=[comp, comp]))


@pytest.mark.parametrize("field", ["luts", "essential_bits"])
def test_non_positive_counts(field):
    comp = {"name": "A", "op_class": "add", "luts": 10, "essential_bits": 1000, field: 0}
    with pytest.raises(LibraryError, match="non-positive"):
        parse_library(_doc(components=[comp]))


def test_non_positive_flux():
    with pytest.raises(LibraryError, match="non-positive"):
        parse_library(_doc(environments=[{"name": "E", "lambda_bit_per_sec": 0}]))


def test_malformed_json():
    with pytest.raises(LibraryError):
        parse_library("{not json")


def test_unknown_names():
    lib = parse_library(_doc())
    with pytest.raises(LibraryError):
        lib.component("nope")
    with pytest.raises(LibraryError):
        lib.environment("LEO")
