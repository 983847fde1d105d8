"""Command-line surface."""

import io
import json
import shlex
import sys
import textwrap

import pytest

from choquetrisk import disable_debug
from choquetrisk.cli import build_parser, run_cli


SCENARIO = {
    "schema": "choquet-risk/1",
    "atoms": ["a", "b", "c", "d"],
    "capacity": {"kind": "distorted-probability", "probability": [0.25, 0.25, 0.25, 0.25]},
    "partition": {"A": ["a", "b"], "Ac": ["c", "d"]},
    "positions": {
        "indicatorC": [0, 1, 1, 0],
        "indicatorA": [1, 0, 0, 0],
        "spike": [2, 0, 0, 0],
        "spread": [0, 1, 1, 1],
    },
    "distortions": {
        "varPair": [{"kind": "var", "alpha": 0.3}, {"kind": "var", "alpha": 0.6}],
        "avarPair": [{"kind": "avar", "alpha": 0.5}, {"kind": "avar", "alpha": 0.75}],
    },
    "seed": 11,
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO))
    return str(path)


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestParser:
    @pytest.mark.parametrize(
        "argv",
        [
            ("report", "s.json", "--grid", "0"),
            ("report", "s.json", "--grid", "ten"),
            ("eval", "s.json", "--oracle", "-0.1"),
            ("eval", "s.json", "--oracle", "nan"),
            ("dominance", "s.json", "--order", "st", "--x", "a", "--y", "b", "--trials", "0"),
            ("verify", "s.json", "--rho", "builtin:D", "--trials", "-3"),
            ("extract", "s.json", "--rho", "builtin:D", "--plugin-timeout", "0"),
        ],
    )
    def test_bad_flag_values_are_usage_errors(self, argv):
        code, out, err = run(*argv)
        assert code == 2
        assert out == ""
        assert "usage:" in err

    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["eval", "s.json", "--position", "X"])
        assert args.command == "eval"
        assert args.format == "csv"
        assert args.oracle is None

    def test_usage_errors(self):
        assert run()[0] == 2
        assert run("frobnicate", "s.json")[0] == 2
        assert run("dominance", "s.json", "--order", "st")[0] == 2

    def test_help(self):
        code, out, _ = run("--help")
        assert code == 0
        assert "choquet-risk" in out


class TestValidate:
    def test_summary(self, scenario_file):
        code, out, _ = run("validate", scenario_file)
        assert code == 0
        assert out == "valid: 4 atoms, 2 blocks, 4 positions, 2 distortions\n"

    def test_debug_logs_to_stderr_only(self, scenario_file, capsys):
        try:
            code, out, _ = run("validate", scenario_file, "--debug")
        finally:
            disable_debug()
        assert code == 0
        assert out == "valid: 4 atoms, 2 blocks, 4 positions, 2 distortions\n"
        assert "validate took" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        code, _, err = run("validate", str(tmp_path / "nope.json"))
        assert code == 1
        assert "cannot read" in err

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  oops\n}")
        code, _, err = run("validate", str(path))
        assert code == 1
        assert "line 2" in err

    def test_validation_error_reports_witness(self, tmp_path):
        doc = dict(SCENARIO, atoms=["a", "b", "c"], partition={"all": ["a", "b", "c"]}, positions={}, distortions={})
        doc["capacity"] = {
            "kind": "table",
            "values": {"": 0, "a": 0.5, "b": 0.1, "c": 0.1, "a|b": 0.4, "a|c": 0.6, "b|c": 0.3, "a|b|c": 1},
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run("validate", str(path))
        assert code == 1
        assert "NotMonotone" in err
        assert "witness" in err


class TestEval:
    def test_var_pair(self, scenario_file):
        code, out, _ = run("eval", scenario_file, "--position", "indicatorC", "--distortion", "varPair")
        assert code == 0
        assert out == (
            "position,distortion,block,value\n"
            "indicatorC,varPair,A,0.0\n"
            "indicatorC,varPair,Ac,1.0\n"
        )

    def test_avar_pair_json(self, scenario_file):
        code, out, _ = run(
            "eval", scenario_file, "--position", "indicatorA", "--distortion", "avarPair", "--format", "json"
        )
        assert code == 0
        (record,) = json.loads(out)
        assert record["values"] == [{"block": "A", "value": 0.5}, {"block": "Ac", "value": 1.0}]

    def test_all_pairs_with_oracle(self, scenario_file):
        code, out, _ = run("eval", scenario_file, "--oracle", "0.001", "--format", "json")
        assert code == 0
        records = json.loads(out)
        assert len(records) == 4 * 2
        for record in records:
            for exact, approx in zip(record["values"], record["oracle"]):
                assert abs(exact["value"] - approx["value"]) <= 0.01

    def test_unknown_position(self, scenario_file):
        code, _, err = run("eval", scenario_file, "--position", "nope")
        assert code == 1
        assert "nope" in err


class TestDominance:
    def test_st_failure_and_strict(self, scenario_file):
        code, out, _ = run("dominance", scenario_file, "--order", "st", "--x", "spike", "--y", "spread")
        assert code == 0
        assert out.splitlines()[1] == "spike,spread,st,false,1.0,0.75,1.0"
        code, _, err = run(
            "dominance", scenario_file, "--order", "st", "--x", "spike", "--y", "spread", "--strict"
        )
        assert code == 1
        assert "verdict is false" in err

    def test_sl_holds(self, scenario_file):
        code, out, _ = run(
            "dominance", scenario_file, "--order", "sl", "--x", "indicatorA", "--y", "spread",
            "--format", "json", "--strict",
        )
        assert code == 0
        assert json.loads(out)[0]["holds"] is True

    def test_icx_falsify(self, scenario_file):
        code, out, _ = run(
            "dominance", scenario_file, "--order", "icx-falsify", "--x", "spike", "--y", "spread",
            "--format", "json",
        )
        assert code == 0
        (record,) = json.loads(out)
        assert record["holds"] is False
        assert record["witness"] == {"kind": "call", "strike": 1.0}


class TestRepresentationCommands:
    def test_extract(self, scenario_file):
        code, out, _ = run("extract", scenario_file, "--rho", "builtin:varPair", "--probe")
        assert code == 0
        rows = out.splitlines()
        assert rows[0] == "block,t,value"
        assert rows[1:6] == ["A,0.0,0.0", "A,0.25,0.0", "A,0.5,0.0", "A,0.75,1.0", "A,1.0,1.0"]
        assert rows[6:] == ["Ac,0.0,0.0", "Ac,0.25,0.0", "Ac,0.5,1.0", "Ac,0.75,1.0", "Ac,1.0,1.0"]

    @pytest.mark.parametrize("rho", ["magic", "plugin:", "builtin:", "script:mean.py"])
    def test_malformed_rho_is_usage_error(self, scenario_file, rho):
        code, out, err = run("extract", scenario_file, "--rho", rho)
        assert code == 2
        assert out == ""
        assert "--rho" in err

    def test_unknown_builtin_is_input_error(self, scenario_file):
        code, _, err = run("extract", scenario_file, "--rho", "builtin:nope")
        assert code == 1
        assert "nope" in err

    def test_verify_builtin_strict(self, scenario_file):
        code, out, _ = run(
            "verify", scenario_file, "--rho", "builtin:avarPair", "--trials", "20",
            "--axioms", "--strict", "--format", "json",
        )
        assert code == 0
        verification, axioms = json.loads(out)
        assert verification["adapted_error"] <= 1e-9
        assert verification["concave_consistent"] is True
        assert {row["axiom"] for row in axioms["rows"]} >= {"normalization", "st_consistency"}

    def test_verify_plugin(self, scenario_file, tmp_path):
        script = tmp_path / "mean.py"
        script.write_text(textwrap.dedent("""
            import json, sys
            for line in sys.stdin:
                req = json.loads(line)
                print(json.dumps([sum(req["values"]) / len(req["values"])] * len(req["partition"])), flush=True)
        """))
        command = f"plugin:{shlex.quote(sys.executable)} {shlex.quote(str(script))}"
        code, out, _ = run("verify", scenario_file, "--rho", command, "--trials", "10", "--format", "json")
        assert code == 0
        (record,) = json.loads(out)
        assert record["adapted_error"] <= 1e-9
        assert record["concave_consistent"] is None

    def test_silent_plugin_times_out(self, scenario_file, tmp_path):
        script = tmp_path / "silent.py"
        script.write_text("import sys, time\nfor line in sys.stdin:\n    time.sleep(60)\n")
        command = f"plugin:{shlex.quote(sys.executable)} {shlex.quote(str(script))}"
        code, out, err = run("extract", scenario_file, "--rho", command, "--plugin-timeout", "0.5")
        assert code == 1
        assert out == ""
        assert "did not reply" in err


class TestReport:
    def test_quantile_table(self, scenario_file):
        code, out, _ = run("report", scenario_file, "--table", "quantiles", "--grid", "4")
        assert code == 0
        rows = out.splitlines()
        assert rows[0] == "position,t,r_minus,r_plus"
        assert "spread,0.5,1.0,1.0" in rows

    def test_all_tables(self, scenario_file):
        code, out, _ = run("report", scenario_file)
        assert code == 0
        assert [line for line in out.splitlines() if line.startswith("#")] == [
            "# evaluations",
            "# survival",
            "# quantiles",
        ]


@pytest.mark.parametrize(
    "argv",
    [
        ("dominance", "--order", "icx-falsify", "--x", "spread", "--y", "spike", "--trials", "50"),
        ("verify", "--rho", "builtin:varPair", "--trials", "15", "--axioms"),
    ],
)
def test_output_is_reproducible(scenario_file, argv):
    command, *flags = argv
    first = run(command, scenario_file, *flags)
    second = run(command, scenario_file, *flags)
    assert first == second
    assert first[1]
