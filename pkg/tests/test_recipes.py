import json
import textwrap

import pytest

from fracsunflower.cli import main
from fracsunflower.recipes import (
    Recipe,
    RecipeError,
    compare,
    format_table,
    parse_recipes,
    parse_value,
    run_all,
    run_recipe,
)

TWO = textwrap.dedent("""\
    # comment
    name = b_switch
    command = classify
    l = 3
    m = 6
    alpha = 0.3
    expect.classification = StabilitySwitch
    expect.critical_delays = 0.567501, 10.133
    rtol.critical_delays = 1e-3

    name = a_ssr
    command = classify
    l = 1
    m = 8
    alpha = 0.4
    expect.critical_delays = 0.0173043
    atol.critical_delays = 1e-4
    """)


def test_parse_value():
    assert parse_value(" 3 ") == 3
    assert parse_value("1e-3") == 1e-3
    assert parse_value("true") is True
    assert parse_value("none") is None
    assert parse_value("1, 2.5") == [1, 2.5]
    assert parse_value("h2") == "h2"


def test_parse_text():
    rs = parse_recipes(TWO)
    assert [r.name for r in rs] == ["b_switch", "a_ssr"]
    r = rs[0]
    assert r.command == "classify" and r.parameters == {"l": 3, "m": 6, "alpha": 0.3}
    assert r.expected["critical_delays"] == [0.567501, 10.133]
    assert r.tolerances == {"critical_delays": {"rtol": 1e-3}}
    assert r.line == 2


def test_parse_json_equivalent():
    data = [{"name": "x", "command": "classify", "parameters": {"l": 3, "m": 6, "alpha": 0.3},
             "expected": {"classification": "StabilitySwitch"},
             "tolerances": {"critical_delays": {"rtol": 1e-3}}}]
    rs = parse_recipes(json.dumps(data))
    assert rs[0].parameters == {"l": 3, "m": 6, "alpha": 0.3}
    assert rs[0].expected == {"classification": "StabilitySwitch"}


@pytest.mark.parametrize("text,line", [
    ("name = a\ncommand = classify\nl 3\n", 3),
    ("name = a\ncommand = fly\n", 1),
    ("command = classify\nl = 3\n", 1),
    ("name = a\ncommand = classify\nl = 1\nl = 2\n", 4),
    ("name = a\ncommand = classify\nfoo.bar = 2\n", 3),
    ("name = a\ncommand = classify\nrtol.x = abc\n", 3),
    ("name = a\ncommand = classify\n\nname = a\ncommand = classify\n", 4),
    ("name = a\ncommand = classify\nspeed = 3\n", 1),
])
def test_malformed(text, line):
    with pytest.raises(RecipeError) as info:
        parse_recipes(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_empty_file():
    assert parse_recipes("") == []
    assert parse_recipes("# only comments\n\n") == []


def test_comparator():
    r = Recipe("r", "classify", expected={"a": 1.0, "b": [1.0, 2.0], "c": "x"},
               tolerances={"a": {"rtol": 1e-3}}, bounds={"d": {"min": 0.0, "max": 1.0}})
    ok = compare(r, {"a": 1.0005, "b": [1.0, 2.0], "c": "x", "d": 0.5})
    assert all(c.ok for c in ok)
    bad = compare(r, {"a": 1.01, "b": [1.0], "c": "y", "d": 2.0})
    assert not any(c.ok for c in bad)
    missing = compare(r, {})
    assert not any(c.ok for c in missing)


def test_curve_interpolated_field():
    r = Recipe("r", "curve", expected={"m@1.5": 3.0}, tolerances={"m@1.5": {"atol": 1e-9}})
    assert compare(r, {"l": [1.0, 2.0], "m": [2.0, 4.0]})[0].ok


def test_run_and_order():
    rs = parse_recipes(TWO)
    outcomes = run_all(rs)
    assert [o.name for o in outcomes] == ["a_ssr", "b_switch"]
    assert all(o.ok for o in outcomes)
    table = format_table(outcomes)
    assert "2/2 passed" in table and "PASS" in table


def test_run_error_is_failed_row():
    out = run_recipe(Recipe("bad", "classify", parameters={"l": -1, "m": 1, "alpha": 0.5}))
    assert not out.ok and "ValueError" in out.error


def test_reproduce_off_by_ten_tolerances_fails(tmp_path, capsys):
    path = tmp_path / "r.txt"
    # tau_1 = 0.0173043; expect it 10 tolerances away
    path.write_text("name = off\ncommand = classify\nl = 1\nm = 8\nalpha = 0.4\n"
                    "expect.critical_delays = 0.0183043\natol.critical_delays = 1e-4\n")
    assert main(["reproduce", str(path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "0/1 passed" in out


def test_reproduce_empty_and_malformed(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["reproduce", str(empty)]) == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("name = a\ncommand = classify\nl 3\n")
    assert main(["reproduce", str(bad)]) == 64
    assert "line 3" in capsys.readouterr().err


def test_reproduce_jobs_report(tmp_path, capsys):
    path = tmp_path / "r.txt"
    path.write_text(TWO)
    report = tmp_path / "report.json"
    assert main(["reproduce", str(path), "--jobs", "2", "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert [r["name"] for r in data["results"]] == ["a_ssr", "b_switch"]


@pytest.mark.slow
def test_shipped_paper_examples(capsys):
    assert main(["reproduce", "paper_examples", "--jobs", "4"]) == 0
    out = capsys.readouterr().out
    assert "11/11 passed" in out
