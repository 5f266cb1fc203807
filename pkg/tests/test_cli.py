import io
import json
import math

import pandas as pd
import pytest

from norminflate import cli
from norminflate.cli import EXIT_ERROR, EXIT_OK, EXIT_REGRESSION, main, run, summarize
from norminflate.reports import BoundReport, SweepResult, bound_report

from .helpers import fixture


def test_construct(tmpdir, capsys):
    out = str(tmpdir)
    status = main(["construct", "--set", f"output_dir={out}", "--set", "r=3"])

    assert status == EXIT_OK
    for name in ("frequencies.csv", "construct.csv", "resolved_config.json"):
        assert tmpdir.join(name).check(file=1), name
    assert len(pd.read_csv(str(tmpdir.join("frequencies.csv")), comment="#")) == 3
    resolved = json.loads(tmpdir.join("resolved_config.json").read())
    assert resolved["command"] == "construct"
    assert resolved["r"] == 3
    assert "t" not in resolved

    lines = capsys.readouterr().out.splitlines()
    assert lines
    assert all(line.startswith("construct.") and ": ok " in line for line in lines)


def test_run_config_file(tmpdir):
    out = io.StringIO()
    status = run(fixture("configs/picard.json"), {"output_dir": str(tmpdir)}, out=out)

    assert status == EXIT_OK
    assert tmpdir.join("picard.csv").check(file=1)
    text = out.getvalue()
    assert "picard.rho10_eta_coefficient: ok 1/1" in text
    assert "picard.remainder_bound_M: ok 1/1" in text


def test_resolved_config_reruns(tmpdir):
    first = tmpdir.mkdir("first")
    assert main(["construct", "--set", f"output_dir={first}", "--set", "K=3"]) == EXIT_OK
    resolved = str(first.join("resolved_config.json"))
    second = tmpdir.mkdir("second")

    assert main(["--config", resolved, "--set", f"output_dir={second}"]) == EXIT_OK
    for name in ("frequencies.csv", "construct.csv"):
        assert first.join(name).read_binary() == second.join(name).read_binary(), name


@pytest.mark.parametrize(
    "argv, message",
    [
        (["construct", "--set", "frequency=4"], "Unknown config key 'frequency'"),
        (["construct", "--set", "r"], "Expected KEY=VALUE"),
        (["construct", "--set", "r=0"], "r must be a positive integer"),
        (["construct", "--set", "r=four"], "Invalid value for 'r'"),
        (["construct", "--jobs", "0"], "'jobs' must be at least 1"),
        (["explode"], "invalid choice"),
        (["--config", fixture("configs/unknown_key.json")], "Unknown config key"),
        (["--config", fixture("configs/missing.json")], "File or path not found"),
    ],
)
def test_errors_exit_with_one(argv, message, tmpdir, capsys):
    assert main(argv + ["--set", f"output_dir={tmpdir}"]) == EXIT_ERROR
    assert message in capsys.readouterr().err


def test_sweep_checks_the_proposition(tmpdir, capsys):
    argv = ["sweep", "--set", "beta=0.3", "--set", "nu=0.1", "--set", f"output_dir={tmpdir}"]
    assert main(argv) == EXIT_ERROR
    assert "beta > max(0, 1/2 - 3*nu/4)" in capsys.readouterr().err


def test_simulate_checks_resolution(tmpdir, capsys):
    argv = ["simulate", "--set", "N=8", "--set", f"output_dir={tmpdir}"]
    assert main(argv) == EXIT_ERROR
    assert "use N >=" in capsys.readouterr().err


def test_failed_bound_exits_with_two(monkeypatch, tmpdir):
    failing = bound_report("frozen", None, 5.0, 1.0, limits=(0.0, 1.0))
    monkeypatch.setitem(
        cli.DISPATCH, "construct", lambda cfg: [SweepResult.from_reports("construct", [failing])]
    )
    out = io.StringIO()

    assert run(None, {"output_dir": str(tmpdir)}, out=out) == EXIT_REGRESSION
    assert out.getvalue() == "construct.frozen: FAIL 0/1 max C=5\n"


def test_summarize():
    result = SweepResult.from_reports(
        "bounds",
        [
            bound_report("a", None, 1.0, 2.0),
            bound_report("a", None, 5.0, 1.0, limits=(0.0, 2.0)),
            BoundReport("b", None, None, 1.0, 0.0, math.inf, True),
        ],
    )
    assert summarize(result) == [
        "bounds.a: FAIL 1/2 max C=5",
        "bounds.b: ok 1/1 max C=nan",
    ]


def test_witness(tmpdir, capsys):
    status = main(["witness", "--set", f"output_dir={tmpdir}", "--set", "epsilon=0.9"])

    assert status == EXIT_OK
    assert tmpdir.join("witness.csv").check(file=1)
    assert "witness.theorem_witness: ok 1/1" in capsys.readouterr().out


def test_besov_with_plot(tmpdir):
    argv = ["besov", "--set", "r=2", "--set", f"output_dir={tmpdir}", "--plot"]

    assert main(argv) in (EXIT_OK, EXIT_REGRESSION)
    assert tmpdir.join("besov.csv").check(file=1)
    assert tmpdir.join("besov.svg").check(file=1)


@pytest.mark.slow
def test_simulate(tmpdir):
    argv = [
        "simulate",
        "--set",
        "r=1",
        "--set",
        "K=2",
        "--set",
        "N=16",
        "--set",
        "T=0.02",
        "--set",
        "snapshot_times=0.01,0.02",
        "--set",
        f"output_dir={tmpdir}",
        "--deterministic",
    ]

    assert main(argv) in (EXIT_OK, EXIT_REGRESSION)
    for name in ("residuals.csv", "simulate.csv", "u_t0.01.csv", "rho_t0.02.csv"):
        assert tmpdir.join(name).check(file=1), name
