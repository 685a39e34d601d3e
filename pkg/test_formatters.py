import io
import json

import numpy as np
import pandas as pd
import pytest

from utils.formatters import (
    angle_entry,
    flatten_report,
    format_csv,
    format_float,
    format_json,
    format_report,
    write_output,
)


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(-0.0) == "0"
    assert format_float(float("nan")) == "null"
    assert format_float(3.0) == "3"
    assert float(format_float(np.pi)) == np.pi


def test_angle_entry_wraps_only_the_display_value():
    entry = angle_entry(-0.5)
    assert entry["unwrapped"] == -0.5
    assert entry["mod_2pi"] == pytest.approx(2 * np.pi - 0.5)
    entry = angle_entry(complex(7.0, 0.25))
    assert entry["mod_2pi"] == pytest.approx(complex(7.0 - 2 * np.pi, 0.25))


def test_json_complex_pairs_and_numpy_values():
    report = {"z": 1 - 2j, "values": np.array([0.5, 1.5]), "nested": {"n": np.int64(3), "ok": np.bool_(True)},
              "missing": None, "rows": [{"a": 1.0}]}
    text = format_json(report)
    parsed = json.loads(text)
    assert parsed["z"] == [1, -2]
    assert parsed["values"] == [0.5, 1.5]
    assert parsed["nested"] == {"n": 3, "ok": True}
    assert parsed["missing"] is None
    assert parsed["rows"] == [{"a": 1}]
    assert text.endswith("}\n")
    assert '"values": [0.5, 1.5]' in text


def test_flatten_report():
    flat = flatten_report({"a": {"b": 1.0, "c": 2 + 3j}, "list": [4, 5]})
    assert flat == {"a_b": 1.0, "a_c_re": 2.0, "a_c_im": 3.0, "list_0": 4, "list_1": 5}


def test_csv_uses_full_precision_and_empty_cells():
    rows = [{"x": 0.1, "y": None, "flag": True}, {"x": np.pi, "y": 2.0, "flag": False}]
    text = format_csv(rows, ["x", "y", "flag"])
    lines = text.splitlines()
    assert lines == ["x,y,flag", "0.10000000000000001,,true", "3.1415926535897931,2,false"]
    assert "\r" not in text


def test_single_report_as_csv():
    frame = pd.read_csv(io.StringIO(format_report({"p": {"E": 1 + 0j}, "eta": 0.25}, "csv")))
    assert list(frame.columns) == ["p_E_re", "p_E_im", "eta"]
    assert frame.loc[0, "eta"] == 0.25


def test_write_output(tmp_path, capsys):
    target = tmp_path / "out.txt"
    write_output("a,b\n", str(target))
    assert target.read_text() == "a,b\n"
    write_output("to stdout\n")
    assert capsys.readouterr().out == "to stdout\n"
