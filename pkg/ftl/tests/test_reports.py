"""
Tests for the CSV and JSON report writers.
"""

import io
import json
import math

import numpy as np
import pytest

from ftl.reports import (
    SCHEMA_VERSION,
    build_report,
    columns_of,
    dumps_report,
    emit,
    format_value,
    jsonable,
    read_csv,
    write_csv,
    write_json,
)


class TestFormatting:
    """Test CSV cell rendering."""

    def test_scalars(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(1 - 2j) == "1-2j"

    def test_float_roundtrip(self):
        x = 1 / 3
        assert float(format_value(x)) == x

    def test_arrays(self):
        assert format_value([1, 2]) == "1 2"

    def test_columns(self):
        assert columns_of([{"a": 1}, {"b": 2, "a": 3}]) == ["a", "b"]


class TestJson:
    """Test JSON conversion."""

    def test_jsonable(self):
        value = jsonable({"x": np.array([1.0, math.inf]), "z": 1j, "t": (1, np.float64(math.nan))})
        assert value == {"x": [1.0, "inf"], "z": [0.0, 1.0], "t": [1, "nan"]}

    def test_report_header(self):
        report = build_report("weights", "siegel", {"fit": {"slope": -1.0}}, seed=0)
        assert report["schema"] == SCHEMA_VERSION
        assert report["seed"] == 0
        assert json.loads(dumps_report(report)) == report

    def test_sorted_keys(self):
        text = dumps_report({"b": 1, "a": 2})
        assert text.index('"a"') < text.index('"b"')


class TestWriters:
    """Test file and stream output."""

    def test_csv_file(self, tmp_path):
        target = tmp_path / "nested" / "rows.csv"
        write_csv([{"delta": 0.1, "F": 20.0}, {"delta": 0.01, "F": 200.0}], str(target))
        rows = read_csv(str(target))
        assert [float(r["F"]) for r in rows] == [20.0, 200.0]

    def test_json_stream(self):
        stream = io.StringIO()
        write_json({"a": 1}, stream=stream)
        assert json.loads(stream.getvalue()) == {"a": 1}

    def test_emit_stdout_csv(self):
        stream = io.StringIO()
        emit("weights", "siegel", [{"delta": 0.1}], {"M": 4, "fit": {"slope": -1.0}}, None, None, stream)
        lines = stream.getvalue().splitlines()
        assert lines[:2] == ["delta", "0.10000000000000001"]
        assert "# M: 4" in lines
        assert '# fit: {"slope": -1.0}' in lines

    def test_emit_stdout_json(self):
        stream = io.StringIO()
        emit("gamma", "siegel", [], {"value": 1.0}, None, None, stream, prefer="json")
        report = json.loads(stream.getvalue())
        assert report["command"] == "gamma"
        assert report["rows"] == []

    def test_emit_files(self, tmp_path):
        stream = io.StringIO()
        csv_path, json_path = tmp_path / "r.csv", tmp_path / "r.json"
        emit("bergman", "disc", [{"delta": 0.1}], {"n": 2}, str(csv_path), str(json_path), stream)
        assert stream.getvalue() == ""
        assert json.loads(json_path.read_text())["rows"] == [{"delta": pytest.approx(0.1)}]
        assert csv_path.read_text().startswith("delta\n")
