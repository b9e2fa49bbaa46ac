import io
import json
import subprocess
import sys

import pytest

from krqchar.cli import run
from krqchar.laurent import parse_text

from reference_fixtures import A3_KM_FPOLY, parse_sub


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), buf)
    return code, buf.getvalue()


def test_char_text_is_the_fundamental_character():
    code, out = call("char", "--type", "B2", "--node", "2", "--shift", "-8")
    assert code == 0
    assert parse_text(out) == parse_sub("Y_{2,-8} + Y_{1,-7}Y_{2,-6}^{-1} + Y_{1,-3}^{-1}Y_{2,-4} + Y_{2,-2}^{-1}")
    assert out.startswith("Y[2,-8]")  # highest weight first


def test_char_json_and_latex():
    code, out = call("char", "--type", "A2", "--node", "1", "--shift", "-5", "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert len(obj["terms"]) == 3
    code, out = call("char", "--type", "A2", "--node", "1", "--shift", "-5", "--format", "latex")
    assert code == 0 and "Y_{1,-5}" in out


def test_char_truncated_and_level_zero():
    code, out = call("char", "--type", "B2", "--node", "2", "--shift", "-4", "--mode", "truncated")
    assert parse_text(out) == parse_sub("Y_{2,-4} + Y_{1,-3}Y_{2,-2}^{-1}")
    code, out = call("char", "--type", "A1", "--node", "1", "--level", "0", "--shift", "-2")
    assert code == 0 and out.strip() == "1"


@pytest.mark.parametrize(
    "argv",
    [
        ["char", "--type", "Q7", "--node", "1", "--shift", "-2"],
        ["char", "--type", "A3", "--node", "2", "--shift", "-3"],
        ["char", "--type", "A3", "--node", "1", "--level", "-1", "--shift", "-3"],
        ["module", "--type", "A3", "--node", "1"],
        ["module", "--type", "A3", "--node", "1", "--shift", "-5", "--monomial", "Y[1,-5]"],
        ["fpoly", "--type", "A3", "--monomial", "Y[1,-7]Y[2,-4]", "--route", "cluster"],
        ["quiver", "--type", "A2", "--depth", "3"],
        ["bogus"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert call(*argv)[0] == 2


def test_verify_tsystem():
    code, out = call("verify-tsystem", "--type", "B2")
    assert code == 0
    obj = json.loads(out)
    assert obj["ok"] and obj["entries"]
    code, out = call("verify-tsystem", "--type", "A2", "--max-level", "1", "--format", "text")
    assert code == 0 and "equations hold" in out


def test_verify_periodicity():
    code, out = call("verify-periodicity", "--type", "A2")
    assert code == 0
    assert json.loads(out)["ok"]
    code, out = call("verify-periodicity", "--type", "A2", "--format", "text")
    assert "pass 1: quiver ok" in out


def test_module_formats():
    code, out = call("module", "--type", "A3", "--node", "2", "--level", "2", "--shift", "-6")
    assert code == 0
    assert "total dimension 8" in out
    code, out = call("module", "--type", "A3", "--node", "2", "--level", "2", "--shift", "-6", "--format", "json")
    assert sum(v["dim"] for v in json.loads(out)["vertices"]) == 8
    code, out = call("module", "--type", "A3", "--monomial", "Y[1,-7]Y[2,-4]", "--format", "dot")
    assert code == 0 and out.startswith("digraph")


def test_fpoly_routes():
    code, out = call("fpoly", "--type", "A3", "--monomial", "Y[1,-7]Y[2,-4]")
    assert code == 0 and parse_text(out) == parse_sub(A3_KM_FPOLY)
    code, out = call("fpoly", "--type", "G2", "--node", "2", "--shift", "-12", "--route", "both")
    assert code == 0 and len(parse_text(out)) == 7


def test_quiver():
    code, out = call("quiver", "--type", "B2", "--depth", "-8", "--guard", "0")
    assert code == 0
    assert "13 arrows" in out and "(1,-5) -> (1,-1)" in out
    code, out = call("quiver", "--type", "B2", "--depth", "-8", "--labels", "V", "--format", "json")
    assert json.loads(out)["vertices"]
    code, out = call("quiver", "--type", "B2", "--depth", "-8", "--format", "dot")
    assert out.startswith("digraph")


def test_figures(tmp_path):
    for argv in (
        ["char", "--type", "G2", "--node", "2", "--shift", "-12"],
        ["char", "--type", "A3", "--node", "2", "--shift", "-12"],
        ["module", "--type", "A3", "--monomial", "Y[1,-7]Y[2,-4]"],
        ["quiver", "--type", "A3", "--depth", "-10"],
        ["verify-tsystem", "--type", "A2", "--max-level", "1"],
        ["verify-periodicity", "--type", "A1"],
    ):
        path = tmp_path / f"{argv[0]}.png"
        code, _ = call(*argv, "--figure", str(path))
        assert code == 0
        assert path.stat().st_size > 1000


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "krqchar.cli", "char", "--type", "A1", "--node", "1", "--shift", "-2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert parse_text(res.stdout) == parse_sub("Y_{1,-2} + Y_{1,0}^{-1}")
