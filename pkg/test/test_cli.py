#!/usr/bin/env python3
"""
命令行测试：输出文件、退出码与可复现性
"""
import csv
import json

import pytest

from app.cli import (
    EXIT_INPUT_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    RunConfig,
    build_parser,
    main,
    parse_args,
)
from app.core.infinity import SolveMethod

Q12 = "[1,1,0,1]"
Q13 = "[1,0,1,1]"
Q23 = "[0,1,1,1]"


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_solve_writes_field_and_sidecars(tmp_path):
    out = tmp_path / "u.json"
    assert main(["solve", "--level", "1", "--boundary", "0,0.2,1", "--out", str(out)]) == EXIT_OK
    field = json.loads(out.read_text(encoding="utf-8"))
    assert field[Q12] == pytest.approx(0.3)
    assert field[Q13] == pytest.approx(0.5)
    assert field[Q23] == pytest.approx(0.6)
    report = json.loads((tmp_path / "u.report.json").read_text(encoding="utf-8"))
    assert report["converged"] and "elapsed" not in report
    meta = json.loads((tmp_path / "u.meta.json").read_text(encoding="utf-8"))
    assert meta["config"]["command"] == "solve"
    assert "started_at" in meta


def test_solve_to_stdout_with_constant_boundary(capsys):
    assert main(["solve", "--level", "2", "--boundary", "0.5,0.5,0.5"]) == EXIT_OK
    field = _stdout_json(capsys)
    assert len(field) == 15
    assert all(v == 0.5 for v in field.values())


def test_solve_csv_output(tmp_path):
    out = tmp_path / "u.csv"
    assert main(["solve", "--level", "1", "--boundary", "0,0.4,1", "--method", "iterate", "--out", str(out)]) == EXIT_OK
    with out.open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["a", "b", "c", "k", "value"]
    values = {(r["a"], r["b"], r["c"], r["k"]): float(r["value"]) for r in rows}
    assert values[("1", "1", "0", "1")] == pytest.approx(1 / 3, abs=1e-10)


def test_solve_is_byte_reproducible(tmp_path):
    args = ["solve", "--level", "3", "--boundary", "0,0.3,1", "--method", "iterate"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.json")]) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.report.json").read_bytes() == (tmp_path / "b.report.json").read_bytes()


def test_solve_on_custom_domain(tmp_path, capsys):
    domain = tmp_path / "k.json"
    domain.write_text(json.dumps([[1, 1, 0, 1], [0, 1, 1, 1]]), encoding="utf-8")
    assert main(["solve", "--level", "1", "--boundary", "0,0.2,1", "--domain", str(domain)]) == EXIT_OK
    field = _stdout_json(capsys)
    assert set(field) == {"[1,0,0,0]", "[0,1,0,0]", "[0,0,1,0]", Q12, Q13, Q23}
    assert field[Q12] == pytest.approx(0.3)
    assert field[Q23] == pytest.approx(0.6)


def test_solve_normalized_matches_direct(capsys):
    assert main(["solve", "--level", "2", "--boundary", "3,9,1"]) == EXIT_OK
    direct = _stdout_json(capsys)
    assert main(["solve", "--level", "2", "--boundary", "3,9,1", "--normalize"]) == EXIT_OK
    normalized = _stdout_json(capsys)
    assert direct.keys() == normalized.keys()
    for key, value in direct.items():
        assert normalized[key] == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("argv", [
    ["solve", "--level", "1", "--boundary", "0,1"],
    ["solve", "--level", "1", "--boundary", "a,b,c"],
    ["solve", "--level", "-1", "--boundary", "0,0.2,1"],
    ["solve", "--level", "1", "--boundary", "0,0.2,1", "--method", "magic"],
    ["frobnicate"],
    ["lab", "counterexample", "--e", "0.3"],
    ["pharm", "--level", "1", "--boundary", "0,0.2,1"],
    ["pharm", "--level", "1", "--boundary", "0,0.2,1", "--p", "0.5"],
    ["verify", "--level", "1", "--boundary", "0,0.2,1", "--suite", "nope"],
    ["lip", "--level", "1", "--field", "/nonexistent/u.json"],
])
def test_input_errors_exit_three(argv):
    assert main(argv) == EXIT_INPUT_ERROR


def test_level_cap_from_environment(monkeypatch):
    monkeypatch.setenv("GASKET_MAX_LEVEL", "2")
    assert main(["build", "--level", "3"]) == EXIT_INPUT_ERROR


def test_non_convergence_exit_two(tmp_path):
    out = tmp_path / "u.json"
    argv = ["solve", "--level", "3", "--boundary", "0,0.2,1", "--method", "iterate", "--max-iter", "1", "--out", str(out)]
    assert main(argv) == EXIT_NOT_CONVERGED
    report = json.loads((tmp_path / "u.report.json").read_text(encoding="utf-8"))
    assert report["converged"] is False
    assert out.exists()


def test_verify_failure_exit_one(tmp_path, capsys):
    field_path = tmp_path / "u.json"
    assert main(["solve", "--level", "2", "--boundary", "0,0.2,1", "--out", str(field_path)]) == EXIT_OK
    assert main(["verify", "--level", "2", "--boundary", "0,0.2,1", "--suite", "cc,am-local",
                 "--field", str(field_path)]) == EXIT_OK
    capsys.readouterr()

    field = json.loads(field_path.read_text(encoding="utf-8"))
    field[Q12] = 0.95
    field_path.write_text(json.dumps(field), encoding="utf-8")
    assert main(["verify", "--level", "2", "--boundary", "0,0.2,1", "--suite", "cc",
                 "--field", str(field_path)]) == EXIT_VERIFY_FAILED
    report = _stdout_json(capsys)
    assert report["passed"] is False
    assert any(v.get("vertex") == Q12 for v in report["suites"][0]["violations"])


def test_verify_empty_suite_list(capsys):
    assert main(["verify", "--level", "1", "--boundary", "0,0.2,1", "--suite", ""]) == EXIT_OK
    report = _stdout_json(capsys)
    assert report["suites"] == [] and report["passed"] is True


def test_verify_suites_to_file(tmp_path):
    out = tmp_path / "verify.json"
    argv = ["verify", "--level", "2", "--boundary", "0,0.2,1", "--suite", "max-principle",
            "--suite", "distance", "--cases", "5", "--seed", "9", "--out", str(out)]
    assert main(argv) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert [s["name"] for s in report["suites"]] == ["max-principle", "distance"]
    assert report["seed"] == 9


def test_build_to_stdout(capsys):
    assert main(["build", "--level", "2"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["level"] == 2
    assert len(data["vertices"]) == 15
    assert len(data["edges"]) == 27


def test_dist_full_domain(capsys):
    assert main(["dist", "--level", "1", "--from", "[1,0,0,0]", "--to", "[0,0,1,0]"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["hops"] == 2
    assert data["distance"] == "1"
    assert data["path"] == ["[1,0,0,0]", Q13, "[0,0,1,0]"]


def test_dist_unreachable(tmp_path, capsys):
    domain = tmp_path / "k.json"
    domain.write_text(json.dumps([Q12, Q13, Q23]), encoding="utf-8")
    argv = ["dist", "--level", "2", "--domain", str(domain), "--from", Q12, "--to", Q13]
    assert main(argv) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["distance"] == "UNREACHABLE"
    assert data["hops"] is None and data["path"] is None


def test_lip_of_solved_field(tmp_path, capsys):
    field_path = tmp_path / "u.json"
    assert main(["solve", "--level", "1", "--boundary", "0,0.4,1", "--out", str(field_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["lip", "--level", "1", "--field", str(field_path)]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["lip_interior"]["value"] == pytest.approx(1.0)
    assert set(data["lip_interior"]["witness"]) == {"[1,0,0,0]", "[0,0,1,0]"}
    assert data["lip_boundary"]["value"] == pytest.approx(1.0)


def test_lab_counterexample(capsys):
    assert main(["lab", "counterexample", "--e", "0.1"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["diff"] == pytest.approx(1 / 120, abs=1e-12)
    assert abs(data["laplacian_u2_on_v1"]) > 0.1 / 24


def test_lab_sweep_outputs(tmp_path):
    out = tmp_path / "lab"
    assert main(["lab", "sweep", "--boundary", "0,0.2,1", "--max-level", "3", "--out", str(out)]) == EXIT_OK
    with (out / "table.csv").open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["n", "k", "sup_diff", "F_n", "iterations", "residual"]
    assert [(r["n"], r["k"]) for r in rows] == [("1", "1"), ("2", "1"), ("2", "2")]
    for n in (1, 2, 3):
        assert (out / "fields" / f"level_{n}.json").exists()
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["lipschitz_uniformity"]["passed"] is True
    assert (out / "meta.json").exists()


def test_pharm_single_exponent(capsys):
    assert main(["pharm", "--level", "1", "--boundary", "0,0.2,1", "--p", "2"]) == EXIT_OK
    field = _stdout_json(capsys)
    assert field[Q12] == pytest.approx(0.28, abs=1e-9)


def test_pharm_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["pharm", "--level", "1", "--boundary", "0,0.2,1", "--sweep", "2,4,8", "--out", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "p,gap,energy,sweeps"
    assert len(lines) == 4
    assert float(lines[1].split(",")[1]) == pytest.approx(0.12, abs=1e-8)
    assert (tmp_path / "sweep.meta.json").exists()


def test_run_config_round_trip():
    config, verbose = parse_args(["-v", "solve", "--level", "2", "--boundary", "0,0.2,1", "--method", "iterate",
                                  "--tol", "1e-12", "--normalize"])
    assert verbose
    assert config.method == SolveMethod.ITERATE
    assert config.boundary == (0.0, 0.2, 1.0)
    assert RunConfig.model_validate(config.model_dump(mode="json")) == config


def test_verify_suite_argument_parsing():
    config, _ = parse_args(["verify", "--level", "1", "--boundary", "0,0,1", "--suite", "cc, harnack", "--suite", "amle"])
    assert config.suites == ["cc", "harnack", "amle"]
    config, _ = parse_args(["verify", "--level", "1", "--boundary", "0,0,1"])
    assert config.suites == ["all"]


def test_level_zero_solve_and_verify(capsys):
    assert main(["solve", "--level", "0", "--boundary", "0,0.5,1"]) == EXIT_OK
    assert _stdout_json(capsys) == {"[1,0,0,0]": 0.0, "[0,1,0,0]": 0.5, "[0,0,1,0]": 1.0}
    assert main(["verify", "--level", "0", "--boundary", "0,0.5,1", "--suite", "all", "--cases", "5"]) == EXIT_OK
    report = _stdout_json(capsys)
    assert report["passed"] is True
    assert all(s["cases"] == 0 for s in report["suites"])


def test_unwritable_output_exit_three(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    argv = ["solve", "--level", "1", "--boundary", "0,0.2,1", "--out", str(blocker / "u.json")]
    assert main(argv) == EXIT_INPUT_ERROR


def test_directory_as_input_exit_three(tmp_path):
    assert main(["lip", "--level", "1", "--field", str(tmp_path)]) == EXIT_INPUT_ERROR
    assert main(["dist", "--level", "1", "--from", Q12, "--to", Q13, "--domain", str(tmp_path)]) == EXIT_INPUT_ERROR


def test_verify_help_shows_suite_default(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["verify", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "all 表示全部 (default: all)" in text
    assert "(default: all) (default" not in text
    config, _ = parse_args(["verify", "--level", "1", "--boundary", "0,0.2,1"])
    assert config.suites == ["all"]
