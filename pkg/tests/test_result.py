import csv
from datetime import datetime, timezone

import pytest

from phasediff.result import CSV_COLUMNS, ResultTable, format_number, write_data


@pytest.mark.parametrize(
    "value, expected",
    [
        (None, ""),
        (True, "true"),
        ("label", "label"),
        (0.0, "0"),
        (1.5, "1.5"),
        (1e-3, "0.001"),
        (12345.0, "1.234500000e+04"),
        (-2.5e-7, "-2.500000000e-07"),
        (float("nan"), "nan"),
        (float("-inf"), "-inf"),
        (complex(1.5, 0.0), "1.5"),
        (complex(1.0, -2.0), "1-2j"),
    ],
)
def test_format_number(value, expected):
    assert format_number(value) == expected


def test_check_close_and_bound():
    table = ResultTable()
    assert table.check_close("demo", "exact", 1.0, 1.0).passed
    assert table.check_close("demo", "relative", 1.01, 1.0, rtol=0.02).criterion == "rel<=0.02"
    assert not table.check_close("demo", "nan", float("nan"), 1.0, atol=1.0).passed
    assert table.check_bound("demo", "upper", 0.1, upper=0.2).criterion == "<= 0.2"
    assert not table.check_bound("demo", "lower", 0.1, lower=0.2).passed
    assert table.check_bound("demo", "range", 0.5, upper=1.0, lower=0.0).reference == "[0, 1]"
    with pytest.raises(ValueError, match="upper or a lower"):
        table.check_bound("demo", "none", 0.5)
    assert [row.quantity for row in table.failures] == ["nan", "lower"]
    assert not table.passed


def test_duplicate_quantity_is_rejected():
    table = ResultTable()
    table.check_close("demo", "x", 1.0, 1.0)
    with pytest.raises(ValueError, match="already recorded"):
        table.check_close("demo", "x", 1.0, 1.0)


def test_lookup():
    table = ResultTable()
    table.check_close("demo", "x", 1.0, 1.0)
    assert table["demo", "x"].value == 1.0
    assert len(table["demo"]) == 1
    with pytest.raises(KeyError):
        table["other"]
    with pytest.raises(KeyError):
        table["demo", "y"]
    assert table.passed


def test_errors_follow_error_mode():
    """A failed experiment raises on lookup in 'raise' mode and is returned in 'return' mode."""
    boom = RuntimeError("boom")
    strict = ResultTable("raise")
    strict._add_error("demo", boom)
    with pytest.raises(RuntimeError, match="boom"):
        strict["demo"]
    lenient = ResultTable("return")
    lenient._add_error("demo", boom)
    assert lenient["demo"] is boom
    assert lenient.exception is boom
    assert not lenient.passed
    with pytest.raises(ValueError, match="error_mode"):
        ResultTable("ignore")


def test_empty_table_does_not_pass():
    assert not ResultTable().passed


def test_extend_keeps_order_and_timings():
    first, second = ResultTable(), ResultTable()
    first.check_close("a", "x", 1.0, 1.0)
    second.check_close("b", "y", 2.0, 2.0)
    second._add_timing("b", 1.25)
    first.extend(second)
    assert first.experiments == ["a", "b"]
    assert first["b", "y"].runtime == 1.25
    assert first.timings == {"b": 1.25}


def test_csv_layout(tmp_path):
    table = ResultTable("return")
    table.check_close("demo", "x", 0.5, 0.5, atol=1e-12)
    table._add_error("broken", ValueError("bad"))
    path = table.write_csv(tmp_path / "out" / "results.csv", datetime(2024, 1, 2, tzinfo=timezone.utc))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == "# generated=2024-01-02T00:00:00+00:00"
    rows = list(csv.reader(lines[2:]))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1] == ["demo", "x", "0.5", "0.5", "abs<=1e-12", "PASS"]
    assert rows[2] == ["broken", "error", "ValueError", "", "no exception", "FAIL"]


def test_summary(tmp_path):
    table = ResultTable("return")
    table.check_close("demo", "x", 1.0, 1.0)
    table.check_bound("demo", "y", 2.0, upper=1.0)
    table._add_timing("demo", 0.5)
    text = table.write_summary(tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert text.startswith("[demo] FAIL (0.50s)\n")
    assert "  ok   x = 1  (reference 1, exact)" in text
    assert "  FAIL y = 2" in text
    assert text.endswith("1/2 rows passed, 0 errors\n")


def test_write_data(tmp_path):
    path = write_data(tmp_path / "series.csv", ("t [s]", "value"), [(0.0, 1.0), (0.5, 2e-5)])
    assert path.read_text(encoding="utf-8").splitlines() == ["t [s],value", "0,1", "0.5,2.000000000e-05"]
