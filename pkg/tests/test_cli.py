"""Command-line interface: subcommands, formats, and exit codes."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

import capdist as cd
from capdist import cli

R04_CAP_AT_01 = 0.10610555179795111


def _scalar_doc():
    return {
        "sizes": {"x": 2, "y": 2, "s": 2},
        "transition": [[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]],
        "state_prior": [0.6, 0.4],
        "distortion": [[0.0, 1.0], [1.0, 0.0]],
    }


def _grab(out: str, key: str) -> str:
    for line in out.splitlines():
        if line.startswith(key):
            return line.partition("=")[2].strip()
    raise AssertionError(f"no line starting with {key!r} in output:\n{out}")


# ---------------------------------------------------------------------------
# point
# ---------------------------------------------------------------------------


def test_point_inline_preset(capsys):
    code = cli.main(["point", "scalar_multiplicative r=0.4", "--distortion", "0.1", "--bits"])
    out = capsys.readouterr().out
    assert code == 0
    nats = float(_grab(out, "C(D) =").split()[0])
    assert abs(nats - R04_CAP_AT_01) < 1e-9
    bits_line = [l for l in out.splitlines() if l.endswith("bits")][0]
    assert abs(float(bits_line.split("=")[1].split()[0]) - nats / math.log(2.0)) < 1e-9
    assert _grab(out, "constraint_active") == "true"


def test_point_json_file_matches_preset(tmp_path, capsys):
    spec = tmp_path / "chan.json"
    spec.write_text(json.dumps(_scalar_doc()))
    code = cli.main(["point", str(spec), "--distortion", "0.1"])
    out = capsys.readouterr().out
    assert code == 0
    assert abs(float(_grab(out, "C(D) =").split()[0]) - R04_CAP_AT_01) < 1e-9


def test_point_infeasible_budget_exits_3(capsys):
    code = cli.main(["point", "scalar_multiplicative r=0.4", "--distortion", "-0.1"])
    captured = capsys.readouterr()
    assert code == 3
    assert "error:" in captured.err


def test_point_convergence_warning_exits_4(monkeypatch, capsys):
    def fake_point(model, budget, opts=None):
        return cd.CDPoint(budget, 0.1, cd.InputDistribution([0.5, 0.5]), True,
                          "inner ascent hit its iteration cap")

    monkeypatch.setattr(cli, "capacity_distortion_point", fake_point)
    code = cli.main(["point", "scalar_multiplicative r=0.4", "--distortion", "0.1"])
    captured = capsys.readouterr()
    assert code == 4
    assert "warning:" in captured.err


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------


def test_curve_grid_roundtrip(tmp_path, capsys):
    out_file = tmp_path / "curve.csv"
    code = cli.main(["curve", "scalar_multiplicative r=0.3", "--grid", "6", "--out", str(out_file)])
    assert code == 0
    assert "wrote 6 points" in capsys.readouterr().out
    rows = cli.read_curve_csv(str(out_file))
    assert len(rows) == 6
    budgets = [row[0] for row in rows]
    assert budgets == sorted(budgets)
    assert rows[0][0] == 0.0
    for _, nats, bits, _ in rows:
        assert abs(bits - nats / math.log(2.0)) < 1e-12
    # Serializing the parsed rows reproduces the file byte for byte.
    assert cli.format_curve_rows(rows) == out_file.read_text()


def test_curve_d_list_skips_infeasible_budgets(tmp_path, capsys):
    doc = _scalar_doc()
    # Both letters mute the channel: every letter costs 0.4, so d_min = 0.4.
    doc["transition"] = [[[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]
    spec = tmp_path / "mute.json"
    spec.write_text(json.dumps(doc))
    out_file = tmp_path / "curve.csv"
    code = cli.main(["curve", str(spec), "--d-list", "0.1,0.45", "--out", str(out_file)])
    captured = capsys.readouterr()
    assert code == 3
    assert "skipping infeasible budgets" in captured.err
    rows = cli.read_curve_csv(str(out_file))
    assert len(rows) == 1
    assert rows[0][0] == 0.45


def test_curve_requires_exactly_one_grid_flavor(tmp_path, capsys):
    out_file = str(tmp_path / "c.csv")
    both = cli.main(["curve", "scalar_multiplicative r=0.3", "--grid", "5",
                     "--d-list", "0.1", "--out", out_file])
    neither = cli.main(["curve", "scalar_multiplicative r=0.3", "--out", out_file])
    capsys.readouterr()
    assert both == 2
    assert neither == 2


# ---------------------------------------------------------------------------
# dstar
# ---------------------------------------------------------------------------


def test_dstar_table_marks_unreachable_outputs(capsys):
    code = cli.main(["dstar", "scalar_multiplicative r=0.4"])
    out = capsys.readouterr().out
    assert code == 0
    assert "0.4" in out  # the silent letter's cost
    assert "*" in out  # x = 0 never produces y = 1
    assert "excluded from the cost" in out


# ---------------------------------------------------------------------------
# cpud
# ---------------------------------------------------------------------------


def test_cpud_scalar_reports_both_routes(capsys):
    code = cli.main(["cpud", "scalar_multiplicative r=0.3"])
    out = capsys.readouterr().out
    assert code == 0
    slope = cd.scalar_small_d_slope(0.3)
    ratio_line = [l for l in out.splitlines() if l.startswith("ratio-formula:")][0]
    assert abs(float(ratio_line.split()[1]) - slope) < 1e-9
    sup_line = [l for l in out.splitlines() if l.startswith("sup-definition:")][0]
    assert abs(float(sup_line.split()[1]) - slope) / slope < 1e-3


def test_cpud_block_is_infinite(capsys):
    code = cli.main(["cpud", "block_multiplicative r=0.5 K=2"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("infinite (multiple zero-cost letters)") == 2


# ---------------------------------------------------------------------------
# compound
# ---------------------------------------------------------------------------


def test_compound_reads_prior_family_from_file(tmp_path, capsys):
    spec = tmp_path / "fam.json"
    spec.write_text(json.dumps({
        "preset": "scalar_multiplicative r=0.3",
        "compound": {"priors": [[0.7, 0.3], [0.6, 0.4]]},
    }))
    code = cli.main(["compound", str(spec), "--distortion", "0.05"])
    out = capsys.readouterr().out
    assert code == 0
    assert abs(float(_grab(out, "worst-case capacity").split()[0]) - 0.0411493655929831) < 1e-6
    assert _grab(out, "worst prior index") == "0"


def test_compound_without_family_uses_the_models_own_prior(capsys):
    code = cli.main(["compound", "scalar_multiplicative r=0.4", "--distortion", "0.1"])
    out = capsys.readouterr().out
    assert code == 0
    assert abs(float(_grab(out, "worst-case capacity").split()[0]) - R04_CAP_AT_01) < 1e-9


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_cli_is_deterministic(capsys):
    argv = ["simulate", "scalar_multiplicative r=0.4", "--optimal-for", "0.1",
            "--samples", "20000", "--seed", "9"]
    assert cli.main(argv) == 0
    first = capsys.readouterr().out
    assert cli.main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    assert abs(float(_grab(first, "analytic_distortion")) - 0.1) < 1e-9


def test_simulate_requires_exactly_one_input_law(capsys):
    base = ["simulate", "scalar_multiplicative r=0.4", "--samples", "100", "--seed", "1"]
    both = cli.main(base + ["--px", "0.5,0.5", "--optimal-for", "0.1"])
    neither = cli.main(base)
    capsys.readouterr()
    assert both == 2
    assert neither == 2


# ---------------------------------------------------------------------------
# analytic
# ---------------------------------------------------------------------------


def test_analytic_scalar_table_with_solver_deltas(capsys):
    code = cli.main(["analytic", "--model", "scalar", "--r", "0.4", "--points", "5", "--compare"])
    out = capsys.readouterr().out
    assert code == 0
    rows = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert len(rows) == 5
    worst_line = [l for l in out.splitlines() if l.startswith("max |closed form")][0]
    assert float(worst_line.split("=")[1].split()[0]) < 1e-6


def test_analytic_block_table(capsys):
    code = cli.main(["analytic", "--model", "block", "--r", "0.5", "--block-len", "2",
                     "--points", "4", "--compare"])
    out = capsys.readouterr().out
    assert code == 0
    assert _grab(out, "case 1") == "false"
    assert abs(float(_grab(out, "C(0)").split()[0]) - 0.27465307216702745) < 1e-12
    assert abs(float(_grab(out, "C(0)/R(0)")) - math.log(3.0) / math.log(2.0)) < 1e-9
    worst_line = [l for l in out.splitlines() if l.startswith("max |closed form")][0]
    assert float(worst_line.split("=")[1].split()[0]) < 1e-6


def test_analytic_block_requires_block_len(capsys):
    code = cli.main(["analytic", "--model", "block", "--r", "0.5"])
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


# ---------------------------------------------------------------------------
# malformed inputs
# ---------------------------------------------------------------------------


def test_bad_specs_exit_2(tmp_path, capsys):
    assert cli.main(["point", "no_such_file.json", "--distortion", "0.1"]) == 2
    assert cli.main(["point", "bogus_preset r=0.4", "--distortion", "0.1"]) == 2
    assert cli.main(["point", "scalar_multiplicative q=0.4", "--distortion", "0.1"]) == 2

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli.main(["point", str(broken), "--distortion", "0.1"]) == 2

    missing = tmp_path / "missing.json"
    doc = _scalar_doc()
    del doc["distortion"]
    missing.write_text(json.dumps(doc))
    assert cli.main(["point", str(missing), "--distortion", "0.1"]) == 2
    capsys.readouterr()


def test_no_subcommand_exits_2(capsys):
    assert cli.main([]) == 2
    capsys.readouterr()
