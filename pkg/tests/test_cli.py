import json

import pytest

from fitzlab.cli import EXIT_CONFIG, ConfigError, main, parse_config

HALF_SQ = {"kind": "separable", "model": {"kind": "quadratic"}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return str(p)


def run(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    code = main(["run", write(tmp_path, cfg), "--out", str(out), "--no-figures", *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def t1(sid, h, primal=3, dual=1, **kw):
    d = {"id": sid, "suite": "theorem1", "h": h, "primal_box": [[-primal, primal]] * 2,
         "dual_box": [[-dual, dual]] * 2, "resolution": 4}
    d.update(kw)
    return d


# -- validation


def test_missing_resolution_names_the_field(tmp_path, capsys):
    code = main(["run", write(tmp_path, {"seed": 1, "scenarios": "all"})])
    assert code == EXIT_CONFIG
    assert "'resolution'" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    code = main(["run", write(tmp_path, '{"seed": 1,\n "resolution": }')])
    assert code == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("cfg, field", [
    ({"seed": -1, "resolution": 10, "scenarios": "all"}, "seed"),
    ({"seed": 0, "resolution": 1, "scenarios": "all"}, "resolution"),
    ({"seed": 0, "resolution": 10, "scenarios": "all", "tolerances": {"exact": 0}}, "tolerances.exact"),
    ({"seed": 0, "resolution": 10, "scenarios": "all", "bogus": 1}, "<root>"),
])
def test_schema_errors_name_the_field(cfg, field):
    with pytest.raises(ConfigError, match=f"field '{field}'"):
        parse_config(json.dumps(cfg))


def test_inline_scenario_range_checks():
    bad = t1("x", HALF_SQ)
    bad["n"] = 3
    with pytest.raises(ConfigError, match="scenarios"):
        parse_config(json.dumps({"seed": 0, "resolution": 10, "scenarios": [bad]}))


def test_unknown_scenario_id(tmp_path):
    code = main(["run", "--scenario", "t9.nothing", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG


# -- exit codes


def test_exit_0_on_agreement(tmp_path):
    code, rep, out = run(tmp_path, {"seed": 0, "resolution": 10, "translations": 2,
                                    "scenarios": [t1("ok", HALF_SQ, expected={"A": "HOLDS", "B": "HOLDS"})]})
    assert code == 0 and rep["exit_code"] == 0
    assert (out / "summary.csv").read_text().startswith("scenario")


def test_exit_0_on_agreeing_failures(tmp_path):
    code, rep, _ = run(tmp_path, {"seed": 0, "resolution": 10, "scenarios": ["t1.shifted_quadratic_0.3"]})
    assert code == 0
    entry = rep["scenarios"][0]
    assert entry["items"] == {"A": "FAILS", "B": "FAILS"}
    assert entry["conditions"]["aux"]["worst_violation"] == pytest.approx(0.3, abs=1e-6)


def test_exit_1_on_expected_mismatch(tmp_path):
    sc = t1("mismatch", HALF_SQ, expected={"A": "FAILS", "B": "FAILS"})
    code, rep, _ = run(tmp_path, {"seed": 0, "resolution": 10, "translations": 2, "scenarios": [sc]})
    assert code == 1 and sorted(rep["scenarios"][0]["mismatches"]) == ["A", "B"]


def test_exit_1_on_runtime_error_names_operation(tmp_path):
    sc = {"id": "bad", "suite": "theorem2", "graph": {"kind": "finite", "points": [[0, 1], [1, 0]]},
          "primal_box": [[-2, 2]] * 2, "dual_box": [[-2, 2]] * 2}
    code, rep, _ = run(tmp_path, {"seed": 0, "resolution": 4, "scenarios": [sc]})
    assert code == 1
    assert "family_members" in rep["scenarios"][0]["error"]


def test_exit_2_on_inconclusive(tmp_path):
    # h* on a small primal box drops below pi* only where maxima hit the box boundary
    sc = t1("truncated", HALF_SQ, primal=1, dual=2)
    code, rep, _ = run(tmp_path, {"seed": 0, "resolution": 10, "translations": 2, "scenarios": [sc]})
    assert code == 2
    assert rep["scenarios"][0]["items"]["A"] == "INCONCLUSIVE"


# -- bundled scenarios and determinism


def test_identity_scenario_five_holds(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", "t2.identity", "--out", str(out), "--no-figures"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert set(rep["scenarios"][0]["items"].values()) == {"HOLDS"}
    assert (out / "slices" / "t2.identity.csv").exists()
    assert not (out / "figures").exists()


def test_figures_are_written(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", "t1.quadratic", "--out", str(out)]) == 0
    assert list((out / "figures").glob("*.png"))


def test_same_seed_same_bytes(tmp_path):
    cfg = {"seed": 7, "resolution": 10, "scenarios": ["t1.quadratic", "t2.two_point", "br.quartic"]}
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a, b = run(tmp_path / "a", cfg)[2], run(tmp_path / "b", cfg)[2]
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()


def test_seed_override_changes_config(tmp_path):
    cfg = {"seed": 7, "resolution": 10, "scenarios": ["t2.two_point"]}
    code, rep, _ = run(tmp_path, cfg, "--seed", "11")
    assert code == 0 and rep["config"]["seed"] == 11


def test_list_scenarios(capsys):
    assert main(["--list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "t2.skew_rotation" in out and "t1.zero" in out
    assert main(["run", "--list-scenarios"]) == 0


def test_no_command_prints_help(capsys):
    assert main([]) == EXIT_CONFIG
    assert "usage" in capsys.readouterr().out


def test_bench_quick(tmp_path, capsys):
    assert main(["bench", "--quick", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "case,engine,resolution,wall_time_ns,max_abs_disagreement"
    assert len(lines) > 10
