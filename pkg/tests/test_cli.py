"""End-to-end tests for the command-line interface."""

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from f2lab.cli import dispatch, load_config
from f2lab.serialize import dump_source, source_to_json
from f2lab.sources import AffineSubspace, NobfSource, clique_source


def run(capsys, *argv):
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


def report_sans_timestamp(path):
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return data


# ---------------------------------------------------------------------------
# Configuration resolution.


def test_load_config_defaults():
    cfg = load_config()
    assert cfg.seed == 0
    assert cfg.caps.table == 24
    assert cfg.format == "json"


def test_load_config_file_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 9, "cap_table": 20, "format": "csv"}))
    cfg = load_config(str(path))
    assert cfg.seed == 9 and cfg.caps.table == 20 and cfg.format == "csv"
    cfg = load_config(str(path), {"format": "json", "cap_table": 18})
    assert cfg.format == "json" and cfg.caps.table == 18 and cfg.seed == 9


def test_load_config_rejects_bad_input(tmp_path):
    bad_key = tmp_path / "bad.json"
    bad_key.write_text(json.dumps({"caps": 3}))
    with pytest.raises(ValueError):
        load_config(str(bad_key))
    with pytest.raises(ValueError):
        load_config(None, {"cap_table": -1})
    with pytest.raises(ValueError):
        load_config(None, {"seed": 1 << 64})


# ---------------------------------------------------------------------------
# poly commands.


def test_poly_bias_spec_example(capsys):
    code, out, _ = run(capsys, "poly", "bias", "--n", "2", "--expr", "x1*x2")
    assert code == 0
    assert out == ["1/2"]


def test_poly_parse_cancels(capsys):
    code, out, _ = run(capsys, "poly", "parse", "--expr", "x2*x1 + x1*x2 + x3")
    assert code == 0
    assert out == ["x3"]


def test_poly_eval(capsys):
    code, out, _ = run(capsys, "poly", "eval", "--n", "3", "--expr", "x1 + x2*x3", "--point", "011")
    assert code == 0
    assert out == ["1"]


def test_poly_corr(capsys):
    code, out, _ = run(capsys, "poly", "corr", "--expr", "x1", "--other", "x1 + x2")
    assert code == 0
    assert out == ["0/1"]


def test_poly_derive(capsys):
    code, out, _ = run(capsys, "poly", "derive", "--n", "2", "--expr", "x1*x2", "--dirs", "10")
    assert code == 0
    assert out == ["x2"]


def test_poly_compose(capsys, tmp_path):
    entries = tmp_path / "entries.txt"
    entries.write_text("x1 + x2\nx1\n")
    code, out, _ = run(capsys, "poly", "compose", "--expr", "x1*x2", "--entries", str(entries))
    assert code == 0
    assert out == ["x1 + x1*x2"]


def test_poly_syntax_error_is_input_error(capsys):
    code, _, err = run(capsys, "poly", "bias", "--expr", "x1 +")
    assert code == 2
    assert "input error" in err


# ---------------------------------------------------------------------------
# cw commands.


def test_cw_solve(capsys, tmp_path):
    path = tmp_path / "sys.txt"
    path.write_text("x1 + x2\n")
    code, out, _ = run(capsys, "cw", "solve", "--file", str(path))
    assert code == 0
    assert out[0] == "solutions: 2"
    assert set(out[1:]) == {"00", "11"}


def test_cw_minweight_inferred_n(capsys, tmp_path):
    path = tmp_path / "sys.txt"
    path.write_text("x1 + x2\n")
    code, out, _ = run(capsys, "cw", "minweight", "--file", str(path))
    assert code == 0
    assert out[0] == "11 2"
    assert out[1] == "holds: true"


def test_cw_minweight_explicit_n(capsys, tmp_path):
    path = tmp_path / "sys.txt"
    path.write_text("x1 + x2\n")
    code, out, _ = run(capsys, "cw", "minweight", "--file", str(path), "--n", "3")
    assert code == 0
    assert out[0] == "001 1"


def test_cw_unsatisfiable(capsys, tmp_path):
    path = tmp_path / "sys.txt"
    path.write_text("1 + x1*x1 + x1\n")
    code, out, _ = run(capsys, "cw", "solve", "--file", str(path))
    assert code == 0
    assert out == ["unsatisfiable"]


def test_cw_clprank(capsys):
    code, out, _ = run(capsys, "cw", "clprank", "--expr", "x1*x2", "--r", "2")
    assert code == 0
    assert "holds: true" in out


# ---------------------------------------------------------------------------
# subspace commands.


def test_subspace_grow_parity(capsys):
    code, out, _ = run(
        capsys,
        "subspace", "grow",
        "--expr", "x1 + x2 + x3 + x4 + x5 + x6",
        "--d", "2", "--r", "1",
    )
    assert code == 0
    assert "dimension: 5" in out
    assert "monochromatic: true" in out
    assert "d_local: true" in out
    assert sum(1 for line in out if set(line) <= {"0", "1"} and len(line) == 6) == 5


def test_subspace_verify_pass_and_fail(capsys):
    code, out, _ = run(
        capsys,
        "subspace", "verify", "--expr", "x1*x2", "--n", "4", "--d", "1",
        "--basis", "0010,0001",
    )
    assert code == 0 and "monochromatic: true" in out
    code, out, _ = run(
        capsys,
        "subspace", "verify", "--expr", "x1*x2", "--n", "4", "--d", "2",
        "--basis", "1000,0100",
    )
    assert code == 1 and "monochromatic: false" in out


def test_subspace_oracle(capsys):
    code, out, _ = run(capsys, "subspace", "oracle", "--expr", "x1", "--n", "3", "--d", "1")
    assert code == 0
    assert out == ["best_dimension: 2"]


# ---------------------------------------------------------------------------
# reduce commands.


def test_reduce_roundtrip(capsys, tmp_path):
    src_path = tmp_path / "local.json"
    dump_source(clique_source(2), str(src_path))
    code, out, _ = run(capsys, "reduce", "to-nobf", "--source", str(src_path), "--t", "1")
    assert code == 0
    assert any(line.startswith("components: ") for line in out)
    assert any(line.startswith("k_prime: ") for line in out)

    code, out, _ = run(capsys, "reduce", "verify", "--source", str(src_path), "--t", "1")
    assert code == 0
    assert out[0] == "distance: 0/1"


def test_reduce_debias(capsys, tmp_path):
    src_path = tmp_path / "nobf.json"
    dump_source(NobfSource(1, (0,), ((Fraction(3, 4), 1),), ()), str(src_path))
    code, out, _ = run(capsys, "reduce", "debias", "--source", str(src_path))
    assert code == 0
    assert "components: 2" in out
    assert "mu: 1/2" in out


def test_reduce_rejects_wrong_source_type(capsys, tmp_path):
    src_path = tmp_path / "nobf.json"
    dump_source(NobfSource(1, (0,), ((Fraction(1, 2), 1),), ()), str(src_path))
    code, _, err = run(capsys, "reduce", "to-nobf", "--source", str(src_path), "--t", "1")
    assert code == 2
    assert "input error" in err


# ---------------------------------------------------------------------------
# lab commands.


def test_lab_census(capsys):
    code, out, _ = run(
        capsys, "lab", "census", "--n", "2", "--k", "1", "--d", "1", "--expr", "x1 + x2"
    )
    assert code == 0
    assert "max_bias: 1/1" in out
    assert "worst_index: 1" in out


def test_lab_search(capsys):
    code, out, _ = run(
        capsys,
        "lab", "search", "--n", "2", "--k", "2", "--d", "1", "--r", "1",
        "--trials", "10", "--epsilon", "1/1",
    )
    assert code == 0
    assert "success_fraction: 1/1" in out


def test_lab_disperse_emits_witness(capsys):
    code, out, _ = run(
        capsys, "lab", "disperse", "--n", "3", "--k", "2", "--d", "1", "--r", "1", "--expr", "1"
    )
    assert code == 1
    assert "all_hit: false" in out
    assert any(line.startswith("failing: ") for line in out)


def test_lab_survey_artifacts(capsys, tmp_path):
    base = tmp_path / "survey"
    code, out, _ = run(
        capsys,
        "lab", "survey", "--kind", "bias", "--n", "5", "--r", "2",
        "--trials", "30", "--seed", "7", "--out", str(base),
    )
    assert code == 0
    assert (tmp_path / "survey.json").exists()
    assert (tmp_path / "survey.csv").exists()
    assert (tmp_path / "survey.png").exists()
    data = json.loads((tmp_path / "survey.json").read_text())
    assert data["config"]["seed"] == 7
    assert len(data["result"]["values"]) == 30
    csv_lines = (tmp_path / "survey.csv").read_text().splitlines()
    assert csv_lines[0] == "trial,value,value_float_approximate"
    assert len(csv_lines) == 31


def test_lab_survey_no_figure_and_reproducible(capsys, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for base in (a, b):
        code, _, _ = run(
            capsys,
            "lab", "survey", "--n", "6", "--r", "2", "--trials", "25",
            "--seed", "3", "--no-figure", "--out", str(base),
        )
        assert code == 0
        assert not base.with_suffix(".png").exists()
    ra = report_sans_timestamp(a.with_suffix(".json"))
    rb = report_sans_timestamp(b.with_suffix(".json"))
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)


def test_lab_rm(capsys):
    code, out, _ = run(capsys, "lab", "rm", "--m", "4", "--r", "1", "--radius", "3", "--centers", "5")
    assert code == 0
    assert "size: 32" in out
    assert "distance: 8" in out
    assert "hamming_bound: true" in out


# ---------------------------------------------------------------------------
# barrier commands.


def test_barrier_sidon_spec_example(capsys):
    code, out, _ = run(capsys, "barrier", "sidon", "--k", "3")
    assert code == 0
    assert out[0] == "sidon: true"


def test_barrier_evade_exhaustive(capsys):
    code, out, _ = run(capsys, "barrier", "evade", "--k", "3", "--t", "3", "--mode", "exhaustive")
    assert code == 0
    assert "max_fraction: 1/2" in out
    assert "holds: true" in out


def test_barrier_evade_random_deterministic(capsys):
    args = ("barrier", "evade", "--k", "4", "--t", "5", "--trials", "20", "--seed", "3")
    code_a, out_a, _ = run(capsys, *args)
    code_b, out_b, _ = run(capsys, *args)
    assert code_a == code_b == 0
    assert out_a == out_b


def test_barrier_mixture(capsys, tmp_path):
    comps = [AffineSubspace(3, 0, (0b100,)), AffineSubspace(3, 0b011, ())]
    path = tmp_path / "comps.json"
    path.write_text(json.dumps([source_to_json(c) for c in comps]))
    code, out, _ = run(capsys, "barrier", "mixture", "--k", "2", "--components", str(path), "--verify")
    assert code == 0
    assert out == ["bound: 1/2"]


# ---------------------------------------------------------------------------
# Exit codes, report embedding, formats.


def test_exit_code_2_paths(capsys, tmp_path):
    assert dispatch(["poly", "nope"]) == 2
    capsys.readouterr()
    assert dispatch(["nonsense"]) == 2
    capsys.readouterr()
    assert dispatch([]) == 2
    capsys.readouterr()
    code, _, err = run(capsys, "poly", "bias", "--expr", "x1", "--cap-table", "-1")
    assert code == 2 and "input error" in err
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text("{not json")
    code, _, err = run(capsys, "poly", "bias", "--expr", "x1", "--config", str(bad_cfg))
    assert code == 2


def test_exit_code_3_cap_exceeded(capsys):
    code, _, err = run(
        capsys,
        "poly", "bias", "--expr", "x1 + x2 + x3 + x4 + x5 + x6", "--cap-table", "4",
    )
    assert code == 3
    assert "cap exceeded" in err


def test_report_embeds_resolved_caps(capsys, tmp_path):
    out_path = tmp_path / "report.json"
    code, _, _ = run(
        capsys,
        "poly", "bias", "--n", "2", "--expr", "x1*x2",
        "--cap-table", "20", "--out", str(out_path),
    )
    assert code == 0
    data = json.loads(out_path.read_text())
    assert data["command"] == "poly bias"
    assert data["config"]["caps"]["table"] == 20
    assert data["config"]["caps"]["family"] == 1 << 22
    assert data["result"]["bias"] == "1/2"
    assert "timestamp" in data


def test_reports_identical_modulo_timestamp(capsys, tmp_path):
    paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
    for path in paths:
        code, _, _ = run(
            capsys,
            "barrier", "evade", "--k", "3", "--t", "4", "--mode", "random",
            "--trials", "15", "--seed", "11", "--out", str(path),
        )
        assert code == 0
    a, b = (report_sans_timestamp(p) for p in paths)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_csv_format_report(capsys, tmp_path):
    out_path = tmp_path / "report.csv"
    code, _, _ = run(
        capsys,
        "poly", "bias", "--n", "2", "--expr", "x1*x2",
        "--format", "csv", "--out", str(out_path),
    )
    assert code == 0
    text = out_path.read_text()
    assert text.splitlines()[0] == "key,value"
    assert "result.bias" in text


def test_config_file_seed_flows_into_run(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 7}))
    out_cfg = tmp_path / "via_cfg"
    out_flag = tmp_path / "via_flag"
    run(capsys, "lab", "survey", "--n", "5", "--r", "2", "--trials", "10",
        "--config", str(cfg), "--no-figure", "--out", str(out_cfg))
    run(capsys, "lab", "survey", "--n", "5", "--r", "2", "--trials", "10",
        "--seed", "7", "--no-figure", "--out", str(out_flag))
    a = report_sans_timestamp(out_cfg.with_suffix(".json"))
    b = report_sans_timestamp(out_flag.with_suffix(".json"))
    assert a["result"]["values"] == b["result"]["values"]


def test_console_entry_point_runs():
    proc = subprocess.run(
        [
            sys.executable,
            "-c",
            "import sys; sys.argv = ['f2lab', 'barrier', 'sidon', '--k', '2']; "
            "from f2lab.cli import main; main()",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "sidon: true" in proc.stdout
