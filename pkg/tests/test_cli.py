import copy
import csv
import json
from pathlib import Path

import numpy as np
import pytest

from hedgehog import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(autouse=True)
def no_env_out(monkeypatch):
    monkeypatch.delenv("HEDGEHOG_OUT", raising=False)


@pytest.mark.parametrize("name", sorted(cli.PRESETS))
def test_config_files_match_presets(name):
    assert json.loads((CONFIGS / f"{name}.json").read_text()) == cli.PRESETS[name]
    cfg = cli.RunConfig.load(CONFIGS / f"{name}.json")
    assert cfg.model.s_plus > 0


def test_solve_writes_outputs(tmp_path):
    assert run("solve", "--preset", "physical-a0", "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "solution.csv")
    assert rows[0] == ["r", "u", "u_prime", "w", "residual"]
    assert len(rows) == 2001
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["beta_far_field"] == 18.0
    assert s["beta"] == pytest.approx(18.0, rel=2e-2)
    for f in ("solution.svg", "solution_plot.txt"):
        assert (tmp_path / f).stat().st_size > 0


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("solve", "--preset", "physical-a1", "--out", a) == 0
    assert run("solve", "--preset", "physical-a1", "--out", b) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("HEDGEHOG_OUT", str(tmp_path / "env"))
    assert run("solve", "--preset", "physical-a0", "--out", tmp_path / "flag") == 0
    assert (tmp_path / "env" / "solution.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_verify_passes_and_reads_csv(tmp_path):
    assert run("verify", "--preset", "physical-a0", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["overall"] is True
    assert "radial_symmetry" in {c["name"] for c in rep["checks"]}
    assert (tmp_path / "verify_report.txt").read_text().rstrip().endswith("overall: pass")
    run("solve", "--preset", "physical-a0", "--out", tmp_path / "s")
    assert run("verify", tmp_path / "s" / "solution.csv", "--preset", "physical-a0",
               "--out", tmp_path / "v") == 0


def test_verify_fails_on_bad_profile(tmp_path):
    run("solve", "--preset", "physical-a0", "--out", tmp_path)
    rows = read_rows(tmp_path / "solution.csv")
    for row in rows[1:]:
        row[1] = repr(0.97 * float(row[1]))
    with open(tmp_path / "bad.csv", "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    assert run("verify", tmp_path / "bad.csv", "--preset", "physical-a0",
               "--out", tmp_path / "v") == 1


def test_scan(tmp_path):
    assert run("scan", "--preset", "physical-a0", "--out", tmp_path, "--steps", 4) == 0
    rows = read_rows(tmp_path / "scan.csv")
    assert rows[0] == ["a2", "alpha", "beta", "beta_far_field", "energy", "lambda_min"]
    beta = [float(r[2]) for r in rows[1:]]
    assert len(beta) == 4 and all(b1 < b0 for b0, b1 in zip(beta, beta[1:]))
    assert all(float(r[5]) > 0 for r in rows[1:])
    assert (tmp_path / "scan.svg").exists()


def test_scan_jobs_do_not_change_output(tmp_path):
    run("scan", "--preset", "physical-a0", "--out", tmp_path / "1", "--steps", 3)
    run("scan", "--preset", "physical-a0", "--out", tmp_path / "3", "--steps", 3, "--jobs", 3)
    assert (tmp_path / "1" / "scan.csv").read_bytes() == (tmp_path / "3" / "scan.csv").read_bytes()


def test_signchange_deflation(tmp_path):
    assert run("signchange", "--preset", "quartic-mp", "--out", tmp_path) == 0
    summ = read_rows(tmp_path / "branches_summary.csv")
    assert summ[0] == ["branch_id", "sign_changes", "energy", "residual_norm", "alpha"]
    assert any(int(r[1]) >= 1 for r in summ[1:])
    assert (tmp_path / "branches.svg").exists()


def test_plot_regenerates_figures(tmp_path):
    run("solve", "--preset", "physical-a0", "--out", tmp_path)
    first = (tmp_path / "solution.svg").read_bytes()
    (tmp_path / "solution.svg").unlink()
    assert run("plot", tmp_path / "solution.csv") == 0
    assert (tmp_path / "solution.svg").read_bytes() == first
    txt = (tmp_path / "solution_plot.txt").read_text().splitlines()
    assert txt[0].startswith("# r u w lower_alpha")


def test_zero_model_writes_exact_column(tmp_path):
    cfg = copy.deepcopy(cli.PRESETS["quartic-mp"])
    cfg["problem"]["model"] = {"kind": "zero", "s_plus": 2.0}
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(cfg))
    assert run("solve", "--config", path, "--out", tmp_path) == 0
    rows = read_rows(tmp_path / "solution.csv")
    assert rows[0][-1] == "u_exact"
    err = max(abs(float(r[1]) - float(r[-1])) for r in rows[1:])
    # F = 0 is solved exactly by the scheme; what remains is solve round-off
    assert err < 1e-10 * 2.0


@pytest.mark.parametrize("mutate,needle", [
    (lambda d: d["problem"].pop("q"), "problem.q"),
    (lambda d: d["problem"]["domain"].pop("R_max"), "problem.domain.R_max"),
    (lambda d: d["solver"].pop("method"), "solver.method"),
    (lambda d: d.pop("schema"), "schema"),
    (lambda d: d["problem"]["model"].pop("b2"), "problem.model.b2"),
    (lambda d: d["solver"].update(N=4), "solver.N"),
    (lambda d: d["solver"].update(method="magic"), "solver.method"),
    (lambda d: d["problem"].update(q=-1.0), "problem.q"),
])
def test_config_errors_name_the_field(tmp_path, capsys, mutate, needle):
    d = copy.deepcopy(cli.PRESETS["physical-a0"])
    mutate(d)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    assert run("solve", "--config", path, "--out", tmp_path) == 2
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert run("solve", "--out", tmp_path) == 2
    assert run("bogus") == 2
    assert run("solve", "--preset", "physical-a0", "--jobs", 0) == 2
    assert run("plot") == 2
    assert run("plot", tmp_path / "missing.csv") == 2
    assert run("signchange", "--preset", "physical-a0", "--out", tmp_path) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run("solve", "--config", tmp_path / "bad.json") == 2


def test_fmt_round_trips():
    for x in (0.1, 1e-300, -2.5e17, 18.0):
        assert float(cli.fmt(x)) == x
    assert cli.fmt(None) == "nan"
    assert np.isnan(float(cli.fmt(float("nan"))))
