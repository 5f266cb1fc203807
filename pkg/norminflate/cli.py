"""Command-line experiment runner.

    norminflate construct --set r=4 --set K=4
    norminflate sweep --config sweep.json --jobs 4 --plot
    norminflate run --config out/resolved_config.json

Exit status is 0 when every report passes, 2 when a frozen regression bound
fails and 1 on a configuration, parameter or I/O error.
"""
import argparse
from collections import OrderedDict
import logging
import math
import os
import sys
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, TextIO

import numpy as np
import pandas as pd

from .config import COMMANDS, RunConfig, resolve, run_config
from .errors import ConfigError, NormInflateError, ResolutionError
from .lab import Lab
from .lacunary import ETA, verify_construction
from .parsers import parse_assignment
from .picard import remainder_bound_M, rho10_coefficient
from .readers import load_config
from .reports import BoundReport, SweepResult, bound_report
from .spectral import residual_decompose, simulate, validate_resolution
from .trig_field import besov_norm, linf_norm
from .verify import (
    bound_sweep,
    check_data_norms,
    inflation_experiment,
    operator_norm_probes,
    theorem_witness,
)
from .writers import (
    dump_snapshot,
    emit_csv,
    emit_frame,
    emit_plot,
    waves_frame,
    write_resolved_config,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REGRESSION = 2

# relative agreement of the eta coefficient with its closed form
COEFFICIENT_TOLERANCE = 1e-9
DIVERGENCE_LIMIT = 1e-8


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors become ConfigError so they share exit status 1."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="norminflate",
        description="Norm-inflation experiments for the 3D Boussinesq system.",
    )
    parser.add_argument(
        "command",
        nargs="?",
        default="run",
        choices=COMMANDS + ("run",),
        help="pipeline to run; 'run' takes the command from the config file",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="assignments",
        help="override one config key (repeatable)",
    )
    parser.add_argument("--jobs", type=int, metavar="N", help="parallel sweep points")
    parser.add_argument("--plot", action="store_true", default=None, help="write SVG plots")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=None,
        help="single-threaded FFTs for byte-identical output",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _header(cfg: RunConfig) -> str:
    return f"norminflate {cfg.command} seed={cfg.seed}"


def _path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.output_dir, name)


def _emit(cfg: RunConfig, result: SweepResult, name: str) -> None:
    emit_csv(result, _path(cfg, f"{name}.csv"), _header(cfg))
    if cfg.plot:
        emit_plot(result, _path(cfg, f"{name}.svg"))


def _construct(cfg: RunConfig) -> List[SweepResult]:
    lab = Lab(cfg.params)
    emit_frame(waves_frame(lab.frequencies), _path(cfg, "frequencies.csv"), _header(cfg))
    result = SweepResult.from_reports("construct", verify_construction(cfg.params))
    emit_csv(result, _path(cfg, "construct.csv"), _header(cfg))
    return [result]


def _picard_reports(cfg: RunConfig, t: float) -> List[BoundReport]:
    p = cfg.params
    state = Lab(p).picard(t)
    rho10, rho11, rho12 = state.rho1_parts
    _, sin = rho10.coefficient(ETA)
    exact = rho10_coefficient(p, t, exact=True)
    reports = [
        bound_report(
            "rho10_eta_coefficient",
            p,
            abs(float(sin[0])),
            exact,
            t=t,
            limits=(1 - COEFFICIENT_TOLERANCE, 1 + COEFFICIENT_TOLERANCE),
            note=f"printed form {rho10_coefficient(p, t):.9g}",
        )
    ]
    for name, field in (("rho10", rho10), ("rho11", rho11), ("rho12", rho12)):
        reports.append(bound_report(f"{name}_linf", p, linf_norm(field).value, 1.0, t=t))
    reports.append(bound_report("u1_linf", p, linf_norm(state.u1).value, 1.0, t=t))
    if p.satisfies_proposition and t <= p.T:
        reports.append(
            bound_report("remainder_bound_M", p, remainder_bound_M(p, t), 1.0, t=t)
        )
    return reports


def _picard(cfg: RunConfig) -> List[SweepResult]:
    result = SweepResult.from_reports("picard", _picard_reports(cfg, cfg.values["t"]))
    emit_csv(result, _path(cfg, "picard.csv"), _header(cfg))
    return [result]


def _simulate(cfg: RunConfig) -> List[SweepResult]:
    p, sim = cfg.params, cfg.sim
    verdict = validate_resolution(p, sim.N)
    if not verdict.ok:
        raise ResolutionError(
            f"N={sim.N} cannot hold frequency {verdict.max_frequency} under the 2/3 rule; "
            f"use N >= {verdict.minimal_N}"
        )
    lab = Lab(p)
    u0, rho0 = lab.initial_data
    rows, reports = [], []
    for snap in simulate(u0, rho0, sim):
        res = residual_decompose(snap, lab.picard(snap.t), p)
        rows.append({**res._asdict(), "max_divergence": snap.max_divergence})
        reports.append(
            bound_report(
                "spectral_divergence",
                p,
                snap.max_divergence,
                1.0,
                t=snap.t,
                limits=(0.0, DIVERGENCE_LIMIT),
            )
        )
        reports.append(
            bound_report(
                "z_below_rho10",
                p,
                res.z_linf,
                res.picard_linf,
                t=snap.t,
                limits=(0.0, 1.0),
            )
        )
        if math.isfinite(res.bound_M):
            reports.append(bound_report("y_vs_bound_M", p, res.y_linf, res.bound_M, t=snap.t))
        tag = f"{snap.t:g}"
        dump_snapshot(snap.u, snap.t, _path(cfg, f"u_t{tag}.csv"))
        dump_snapshot(snap.rho, snap.t, _path(cfg, f"rho_t{tag}.csv"))
    emit_frame(pd.DataFrame(rows), _path(cfg, "residuals.csv"), _header(cfg))
    result = SweepResult.from_reports("simulate", reports)
    emit_csv(result, _path(cfg, "simulate.csv"), _header(cfg))
    return [result]


def _besov(cfg: RunConfig) -> List[SweepResult]:
    p = cfg.params
    reports = check_data_norms(p, cfg.tgrid)
    t = p.T
    rho10 = Lab(p).rho1_parts(t)[0]
    for inhomogeneous in (False, True):
        estimate = besov_norm(rho10, p.s, cfg.tgrid, inhomogeneous=inhomogeneous)
        reports.append(
            bound_report(
                "rho10_besov_inhom" if inhomogeneous else "rho10_besov",
                p,
                estimate.value,
                p.amplitude ** 2 * float(p.r) ** (1 - 2 * p.beta),
                t=t,
                note=f"argmax tau={estimate.argmax_t:.6g}",
            )
        )
    result = SweepResult.from_reports("besov", reports)
    _emit(cfg, result, "besov")
    return [result]


def _sweep(cfg: RunConfig) -> List[SweepResult]:
    p, values = cfg.params, cfg.values
    p.check_proposition()
    times = np.geomspace(values["sweep_t_min"], 1.0, values["sweep_t_points"])
    bounds = bound_sweep(values["rs"], p, values["gamma"], times, cfg.tgrid, cfg.jobs)
    probes = SweepResult.from_reports("probes", operator_norm_probes(values["trials"], cfg.seed))
    bounds = bounds.extend(probes)
    _emit(cfg, bounds, "bounds")
    inflation = inflation_experiment(values["rs"], p.nu, p.delta, p.s, p.amplitude, cfg.jobs)
    _emit(cfg, inflation, "inflation")
    return [bounds, inflation]


def _witness(cfg: RunConfig) -> List[SweepResult]:
    values = cfg.values
    report = theorem_witness(
        values["epsilon"],
        s=cfg.params.s,
        nu=values["witness_nu"],
        delta=cfg.params.delta,
        r_max=values["r_max"],
    )
    result = report.result()
    emit_csv(result, _path(cfg, "witness.csv"), _header(cfg))
    return [result]


DISPATCH: Dict[str, Callable[[RunConfig], List[SweepResult]]] = {
    "construct": _construct,
    "picard": _picard,
    "simulate": _simulate,
    "besov": _besov,
    "sweep": _sweep,
    "witness": _witness,
}


def summarize(result: SweepResult) -> List[str]:
    """One line per report name: pass count and the worst implied constant."""
    groups: "OrderedDict[str, List[BoundReport]]" = OrderedDict()
    for rep in result.reports:
        groups.setdefault(rep.name, []).append(rep)
    lines = []
    for name, reps in groups.items():
        passed = sum(rep.passed for rep in reps)
        finite = [rep.implied_constant for rep in reps if math.isfinite(rep.implied_constant)]
        worst = f"{max(finite):.6g}" if finite else "nan"
        status = "ok" if passed == len(reps) else "FAIL"
        lines.append(f"{result.name}.{name}: {status} {passed}/{len(reps)} max C={worst}")
    return lines


def run(
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    out: Optional[TextIO] = None,
) -> int:
    """Execute the pipeline a config describes and return the exit status."""
    out = sys.stdout if out is None else out
    try:
        values = load_config(config_path) if config_path else {}
        resolved = resolve(values, overrides or {})
        cfg = run_config(resolved)
        write_resolved_config(cfg.values, _path(cfg, "resolved_config.json"))
        logger.info("Running %s into %s", cfg.command, cfg.output_dir)
        results = DISPATCH[cfg.command](cfg)
    except (NormInflateError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    for result in results:
        for line in summarize(result):
            print(line, file=out)
    if all(result.passed for result in results):
        return EXIT_OK
    return EXIT_REGRESSION


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides: Dict[str, Any] = dict(parse_assignment(a) for a in args.assignments)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command != "run":
        overrides["command"] = args.command
    for key in ("jobs", "plot", "deterministic"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return run(args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
