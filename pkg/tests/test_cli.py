import json

import numpy as np
import pytest

from varpro_pde import cli, runner
from varpro_pde.linalg import lstsq_min_norm
from varpro_pde.network import Architecture
from varpro_pde.problems import build_collocation, evaluate_errors, get_problem
from varpro_pde.runner import (
    CSV_FIELDS,
    ConfigError,
    RunConfig,
    SolverFailure,
    format_rows,
    initial_theta,
    parse_rows,
    run,
)
from varpro_pde.varpro import VarProblem


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


FAST = dict(problem="poisson2d", M=20, Q1=6, activation="cos", max_iterations=10)


def test_elm_run_is_linear_fit():
    cfg = RunConfig.from_dict(dict(problem="poisson2d", method="elm", M=100, Q1=15, R_m=1.0, seed=1))
    rep = run(cfg)
    assert rep.gn_iterations == 0 and rep.subiterations == 0
    problem = get_problem("poisson2d")
    arch = Architecture((2, 100, 1), "cos")
    c = build_collocation(problem, 15)
    theta0 = initial_theta(cfg)
    beta = lstsq_min_norm(VarProblem(arch, problem.box, c.points, c.terms, c.rhs).build_H(theta0), c.rhs).solution
    np.testing.assert_array_equal(rep.theta[0], theta0)
    np.testing.assert_array_equal(rep.beta[0], beta)
    assert rep.errors.rms_error == evaluate_errors(arch, theta0, beta, problem).rms_error


def test_repeat_runs_identical_except_wall_time():
    cfg = RunConfig.from_dict(dict(FAST, delta=1.0, max_subiterations=2))
    a, b = run(cfg).csv_row(), run(cfg).csv_row()
    a.pop("wall_s"), b.pop("wall_s")
    assert a == b


def test_csv_round_trip():
    rep = run(RunConfig.from_dict(FAST))
    text = format_rows([rep.csv_row()])
    rows = parse_rows(text)
    assert format_rows(rows) == text
    assert list(rows[0]) == list(CSV_FIELDS)
    value = text.splitlines()[-1].split(",")[CSV_FIELDS.index("rms_err")]
    assert len(value.split("e")[0].replace(".", "").lstrip("-")) == 6


def test_config_echo_round_trip():
    cfg = RunConfig.from_dict(dict(problem="advection1d", M=30, activation="gaussian", n_blocks=3, t_final=3.0))
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert run_json_config(cfg) == cfg.to_dict()


def run_json_config(cfg):
    rep = runner.SolveReport(cfg, 0.0, 0, 0, 0, runner.ErrorReport(0.0, 0.0, 1), True, 0.0)
    return json.loads(json.dumps(rep.to_json()))["config"]


@pytest.mark.parametrize("key, value", [("problem", "wave"), ("activation", "tanh"), ("method", "pinn"),
                                        ("Q1", 1), ("delta", -1.0), ("gtol", 0.0), ("colour", 3)])
def test_config_errors_name_field(key, value):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({**FAST, key: value})
    assert info.value.field == key


def test_theta0_is_pcg64_on_the_packing_order():
    cfg = RunConfig.from_dict(dict(FAST, R_m=0.5, seed=11))
    init_ss, _ = np.random.SeedSequence(11).spawn(2)
    expected = np.random.Generator(np.random.PCG64(init_ss)).uniform(-0.5, 0.5, 3 * 20)
    np.testing.assert_array_equal(initial_theta(cfg), expected)


def test_solver_failure_carries_report(monkeypatch):
    def boom(*a, **k):
        raise runner.NonFiniteError("residual is not finite")

    monkeypatch.setattr(runner, "varpro_solve", boom)
    with pytest.raises(SolverFailure) as info:
        run(RunConfig.from_dict(FAST))
    assert info.value.report is not None and not info.value.report.converged


# --- command line ---------------------------------------------------------------

def test_solve_command(tmp_path, capsys):
    cfg = write(tmp_path, "run.toml", 'problem = "poisson2d"\nM = 20\nQ1 = 6\nmax_iterations = 5\n')
    out, report = tmp_path / "out.csv", tmp_path / "out.json"
    assert cli.main(["solve", cfg, "--out", str(out), "--report", str(report), "--quiet"]) == 0
    rows = parse_rows(out.read_text())
    assert len(rows) == 1 and rows[0]["M"] == 20 and rows[0]["seed"] == 1
    side = json.loads(report.read_text())
    assert side["config"]["layers"] == [2, 20, 1]
    assert side["rms_error"] == pytest.approx(rows[0]["rms_err"], rel=1e-5)
    assert capsys.readouterr().err == ""


def test_seed_override(tmp_path):
    cfg = write(tmp_path, "run.toml", 'problem = "poisson2d"\nM = 10\nQ1 = 5\nmethod = "elm"\nseed = 3\n')
    out = tmp_path / "o.csv"
    cli.main(["solve", cfg, "--seed", "9", "--out", str(out), "--quiet"])
    assert parse_rows(out.read_text())[0]["seed"] == 9


def test_sweep_rows_and_seed_isolation(tmp_path):
    cfg = write(tmp_path, "s.toml", 'problem = "poisson2d"\nM = 10\nmethod = "elm"\nQ1 = [5, 7, 9]\nseed = [1, 2]\n')
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", cfg, "--out", str(out), "--quiet"]) == 0
    rows = parse_rows(out.read_text())
    assert [(r["Q1"], r["seed"]) for r in rows] == [(5, 1), (5, 2), (7, 1), (7, 2), (9, 1), (9, 2)]
    alone = run(RunConfig.from_dict(dict(problem="poisson2d", M=10, method="elm", Q1=7, seed=2))).csv_row()
    assert rows[3]["rms_err"] == float(f"{alone['rms_err']:.5e}")


def test_sweep_over_layers(tmp_path):
    cfg = write(tmp_path, "s.toml", 'problem = "poisson2d"\nmethod = "elm"\nQ1 = 5\nlayers = [[2, 5, 1], [2, 4, 6, 1]]\n')
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", cfg, "--out", str(out), "--quiet"]) == 0
    assert [r["M"] for r in parse_rows(out.read_text())] == [5, 6]


@pytest.mark.parametrize("text", [
    'problem = "poisson2d"\nQ1 = []\n',
    'problem = "poisson2d"\nQ1 = [5]\nM = [10, 20]\n',
    'problem = "poisson2d"\nseed = []\n',
    'problem = "nowhere"\n',
    'problem = "poisson2d"\n[extra]\nx = 1\n',
    'problem = \n',
])
def test_sweep_usage_errors(tmp_path, text, capsys):
    cfg = write(tmp_path, "bad.toml", text)
    assert cli.main(["sweep", cfg, "--quiet"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert cli.main(["solve", str(tmp_path / "missing.toml")]) == 2
    cfg = write(tmp_path, "l.toml", 'problem = "poisson2d"\nQ1 = [5, 6]\n')
    assert cli.main(["solve", cfg]) == 2
    assert cli.main(["frobnicate"]) == 2
    cfg = write(tmp_path, "a.toml", 'problem = "poisson2d"\nactivation = "relu"\n')
    assert cli.main(["solve", cfg]) == 2
    assert "activation" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    def fail(cfg):
        raise SolverFailure("non-finite residual", None)

    monkeypatch.setattr(cli, "run", fail)
    cfg = write(tmp_path, "run.toml", 'problem = "poisson2d"\n')
    assert cli.main(["solve", cfg, "--quiet", "--out", str(tmp_path / "x.csv")]) == 1


def csv_table(tmp_path, name, rows):
    return write(tmp_path, name, format_rows(rows))


def base_row(**kw):
    row = dict(problem="poisson2d", method="varpro", seed=1, M=100, Q1=15, activation="cos", R_m=1.0,
               delta=5.0, p=0.5, subiters=0, gn_iters=3, newton_iters=0, cost=1e-12, max_err=1e-6,
               rms_err=1e-7, wall_s=1.0)
    row.update(kw)
    return row


def test_compare_identical_tables(tmp_path, capsys):
    a = csv_table(tmp_path, "a.csv", [base_row(), base_row(Q1=20)])
    assert cli.main(["compare", a, a]) == 0
    out = capsys.readouterr().out
    assert out.count("1.000e+00") == 2 and out.count("| yes |") == 2


def test_compare_flags_and_ratio(tmp_path, capsys):
    vp = csv_table(tmp_path, "v.csv", [base_row(rms_err=1e-8), base_row(Q1=20, rms_err=5.0)])
    elm = csv_table(tmp_path, "e.csv", [base_row(method="elm", rms_err=1e-2), base_row(method="elm", Q1=20, rms_err=1.0)])
    joined = cli.compare_tables(parse_rows(open(vp).read()), parse_rows(open(elm).read()))
    assert [j["flag"] for j in joined] == [False, True]
    assert joined[0]["ratio"] == pytest.approx(1e-6)
    assert cli.main(["compare", vp, elm, "--quiet"]) == 0
    assert "rms varpro" in capsys.readouterr().out


def test_compare_key_mismatch(tmp_path, capsys):
    a = csv_table(tmp_path, "a.csv", [base_row(seed=1), base_row(seed=2)])
    b = csv_table(tmp_path, "b.csv", [base_row(seed=1), base_row(seed=3)])
    assert cli.main(["compare", a, b]) == 2
    err = capsys.readouterr().err
    assert "unmatched key" in err and "'seed': 2" in err


def test_compare_table2_desk(tmp_path, capsys):
    common = 'problem = "poisson2d"\nM = 100\nQ1 = 15\nR_m = 1.0\nseed = 1\n'
    vp = write(tmp_path, "vp.toml", common + 'delta = 5.0\nmax_subiterations = 1\n')
    elm = write(tmp_path, "elm.toml", common + 'method = "elm"\n')
    assert cli.main(["solve", vp, "--out", str(tmp_path / "vp.csv"), "--quiet"]) == 0
    assert cli.main(["solve", elm, "--out", str(tmp_path / "elm.csv"), "--quiet"]) == 0
    joined = cli.compare_tables(parse_rows((tmp_path / "vp.csv").read_text()),
                                parse_rows((tmp_path / "elm.csv").read_text()))
    assert not any(j["flag"] for j in joined)
