"""Command-line interface.

Subcommands: solve, verify, kappa, angle, oracle-fixtures.  Exit codes:
0 when every enabled check passes, 1 when a bound check fails, 2 for
usage, parse or schema errors.  All randomness flows from seeds declared
in the problem file (optionally overridden with --seed-override), so any
reported number can be replayed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures
from .engine import Trace, estimate_limit, fejer_monitor, restart_analysis, run
from .exceptions import FeaskitError, ProblemFileError
from .io import (
    ProblemFile,
    parse_problem,
    read_trace_csv,
    trace_csv_rows,
    write_trace_csv,
)
from .plots import render_band, render_convergence
from .regularity import (
    cos_kappa_bounds,
    distance_intersection,
    error_band_check,
    estimate_kappa,
    friedrichs_cosine,
    perturbed_residual_band_check,
    rate_constants,
)
from .sets import Ball, LinearSubspace

log = logging.getLogger("feaskit")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


@dataclass
class CheckResult:
    name: str
    status: str           # "pass" | "fail" | "skipped"
    worst_slack: float | None
    inequality: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "worst_slack": self.worst_slack,
            "inequality": self.inequality,
            "detail": self.detail,
        }


_INEQUALITIES = {
    "fejer": "||x^{k+1} - z|| <= ||x^k - z|| + e_k   for every witness z in C",
    "error_band": "(1/(2 kappa)) ||x^k - x_inf|| <= max_i d(x^k, C_i) <= c q^k",
    "perturbed_band": "(1/(2 kappa)) ||x^{k+1} - x_inf|| - 2 S_i <= max_j d(x^{k+1}, C_j)"
                      " <= ||x_i^{k+1} - x_i_inf|| + 2 S_i,   S_i = sum_{j>=i} e_j",
    "weak_rate": "|<y, x^{k+1} - x_inf>| <= |<y, x_i^{k+1} - x_i_inf>| + 2 ||y|| S_i",
    "angle": "1 - 2M/((M-1) kappa) <= cos(theta) <= 1 - 1/((M-1) kappa^2)",
    "kappa": "d(x, C) <= kappa max_i d(x, C_i) on the sampled region (lower-bound estimate)",
}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)!r}")


def _default_restart_indices(K: int, count: int = 5) -> list[int]:
    if K <= 0:
        return [0]
    return sorted(set(int(round(t)) for t in np.linspace(0, max(K - 1, 0), count)))


def _run_checks(pf: ProblemFile, problem, schedule, config, pert, steer,
                trace: Trace, jobs: int) -> tuple[list[CheckResult], dict]:
    analysis = pf.analysis or {"checks": []}
    enabled = analysis.get("checks", [])
    results: list[CheckResult] = []
    shared: dict = {}

    kappa_est = None
    if analysis.get("kappa"):
        kc = analysis["kappa"]
        region = Ball(center=np.array(kc["center"], float), radius=kc["radius"])
        kappa_est = estimate_kappa(problem, region, kc["samples"], kc["seed"],
                                   workers=max(jobs, 1))
        shared["kappa_est"] = kappa_est

    def check_kappa() -> CheckResult:
        detail = {
            "kappa_hat": kappa_est.kappa_hat,
            "kappa_inflated": kappa_est.kappa_inflated,
            "samples": kappa_est.n_samples,
            "witness": None if kappa_est.max_ratio_witness is None
            else kappa_est.max_ratio_witness.tolist(),
        }
        return CheckResult("kappa", "pass", None, _INEQUALITIES["kappa"], detail)

    def check_fejer() -> CheckResult:
        witnesses = analysis.get("witnesses")
        if witnesses is None:
            if pf.witness is None:
                return CheckResult("fejer", "skipped", None, _INEQUALITIES["fejer"],
                                   {"reason": "no witnesses declared"})
            witnesses = [pf.witness]
        rep = fejer_monitor(problem, trace, [np.array(w, float) for w in witnesses])
        return CheckResult("fejer", "pass" if rep.passed else "fail", rep.worst_slack,
                           _INEQUALITIES["fejer"], {"violations": len(rep.violations)})

    def check_error_band() -> CheckResult:
        kappa_used = kappa_est.kappa_inflated
        d0 = distance_intersection(problem, trace.x0)
        rc = rate_constants(schedule.declared_omega_min, schedule.declared_m,
                            schedule.declared_s, kappa_used, d0)
        lim = estimate_limit(problem, schedule, trace.x_final, trace.iterations_used)
        rep = error_band_check(trace, rc, kappa_used, lim.x_inf, cushion=lim.cushion)
        shared["rate"] = rc
        shared["band_entries"] = rep.entries
        return CheckResult("error_band", "pass" if rep.passed else "fail",
                           rep.worst_slack, _INEQUALITIES["error_band"],
                           {"c": rc.c_r, "q": rc.q_r, "kappa_used": kappa_used,
                            "first_violation": rep.first_violation})

    def _analyses():
        if "analyses" in shared:
            return shared["analyses"]
        indices = analysis.get("restart_indices") or _default_restart_indices(
            trace.iterations_used)
        inner = max(trace.iterations_used + 50, 100)
        shared["analyses"] = [
            restart_analysis(problem, schedule, trace, i, inner, pert=pert)
            for i in indices if i <= trace.iterations_used
        ]
        return shared["analyses"]

    def check_perturbed_band() -> CheckResult:
        kappa_used = kappa_est.kappa_inflated
        lim = estimate_limit(problem, schedule, trace.x_final, trace.iterations_used)
        rep = perturbed_residual_band_check(trace, _analyses(), kappa_used,
                                            lim.x_inf, cushion=lim.cushion)
        shared["band_entries"] = rep.entries
        return CheckResult("perturbed_band", "pass" if rep.passed else "fail",
                           rep.worst_slack, _INEQUALITIES["perturbed_band"],
                           {"kappa_used": kappa_used,
                            "restart_indices": [a.restart_index for a in _analyses()],
                            "first_violation": rep.first_violation})

    def check_weak_rate() -> CheckResult:
        from .engine import weak_rate_check

        functionals = analysis.get("functionals")
        if functionals is None:
            functionals = [np.eye(problem.dim)[i].tolist()
                           for i in range(min(problem.dim, 3))]
        lim = estimate_limit(problem, schedule, trace.x_final, trace.iterations_used)
        worst = None
        passed = True
        for a in _analyses():
            rep = weak_rate_check(trace, a, [np.array(y, float) for y in functionals],
                                  lim.x_inf, lim.residual)
            worst = rep.worst_slack if worst is None else min(worst, rep.worst_slack)
            passed = passed and rep.passed
        return CheckResult("weak_rate", "pass" if passed else "fail", worst,
                           _INEQUALITIES["weak_rate"],
                           {"functionals": len(functionals)})

    def check_angle() -> CheckResult:
        subs = [s for s in problem.sets if isinstance(s, LinearSubspace)]
        rep = friedrichs_cosine(subs)
        detail = {"cosine": rep.cosine, "theta": rep.theta, "method": rep.method}
        status = "pass"
        worst = None
        if kappa_est is not None:
            lower, _ = cos_kappa_bounds(kappa_est.kappa_hat, len(subs))
            _, upper = cos_kappa_bounds(kappa_est.kappa_inflated, len(subs))
            lower = max(0.0, lower)
            detail["interval"] = [lower, upper]
            # convention: both interval denominators read (M-1)
            detail["interval_convention"] = "upper bound denominator (M-1) kappa^2"
            worst = min(rep.cosine - lower, upper - rep.cosine)
            if not lower - 1e-12 <= rep.cosine <= upper + 1e-12:
                status = "fail"
        return CheckResult("angle", status, worst, _INEQUALITIES["angle"], detail)

    runners = {
        "kappa": check_kappa,
        "fejer": check_fejer,
        "error_band": check_error_band,
        "perturbed_band": check_perturbed_band,
        "weak_rate": check_weak_rate,
        "angle": check_angle,
    }

    ordered = [name for name in runners if name in enabled]
    if jobs > 1 and len(ordered) > 1:
        # restart analyses are shared state: materialize them up front
        if "perturbed_band" in ordered or "weak_rate" in ordered:
            _analyses()
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            futures = {name: ex.submit(runners[name]) for name in ordered}
        for name in ordered:
            results.append(futures[name].result())
    else:
        for name in ordered:
            results.append(runners[name]())
    return results, shared


def _summary(trace: Trace) -> dict:
    out = {
        "stop_reason": trace.stop_reason,
        "iterations": trace.iterations_used,
        "final_residual": float(trace.residual_max[-1]),
        "mode": trace.mode,
    }
    if trace.phi is not None:
        out["phi_final"] = float(trace.phi[-1])
    return out


def _write_report(path: Path, summary: dict, checks: list[CheckResult]) -> None:
    doc = {"summary": summary, "checks": [c.to_dict() for c in checks]}
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n",
                    encoding="utf-8")


def _exit_code(checks: list[CheckResult]) -> int:
    return 1 if any(c.status == "fail" for c in checks) else 0


def _load_file(path: str) -> ProblemFile:
    text = Path(path).read_text(encoding="utf-8")
    return parse_problem(text)


def _cmd_solve(args) -> int:
    pf = _load_file(args.problem)
    problem = pf.build_problem()
    schedule = pf.build_schedule(args.seed_override)
    config = pf.build_config()
    pert = pf.build_perturbation(args.seed_override)
    steer = pf.build_steering()

    trace = run(problem, schedule, config, pert=pert, steer=steer)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out_dir / "trace.csv")
    log.info("trace written to %s (%d iterations, stop=%s)",
             out_dir / "trace.csv", trace.iterations_used, trace.stop_reason)

    checks, shared = _run_checks(pf, problem, schedule, config, pert, steer,
                                 trace, args.jobs)
    _write_report(out_dir / "report.json", _summary(trace), checks)

    bound = None
    if "rate" in shared:
        bound = (shared["rate"].c_r, shared["rate"].q_r)
    render_convergence(trace, out_dir / "convergence.png", bound=bound)
    if "band_entries" in shared:
        render_band(shared["band_entries"], out_dir / "band_slack.png")

    for c in checks:
        print(f"[{c.status:>7}] {c.name}: worst slack "
              f"{'-' if c.worst_slack is None else format(c.worst_slack, '.3e')}")
    return _exit_code(checks)


def _cmd_verify(args) -> int:
    pf = _load_file(args.problem)
    problem = pf.build_problem()
    schedule = pf.build_schedule(args.seed_override)
    config = pf.build_config()
    pert = pf.build_perturbation(args.seed_override)
    steer = pf.build_steering()

    trace = run(problem, schedule, config, pert=pert, steer=steer)
    stored = read_trace_csv(args.trace)
    replay = trace_csv_rows(trace)
    ok = len(stored["k"]) == len(replay)
    if ok:
        for k, row in enumerate(replay):
            if float(row[1]) != float(stored["max_residual"][k]):
                ok = False
                break
    consistency = CheckResult(
        "trace_consistency", "pass" if ok else "fail", None,
        "stored trace must equal the deterministic replay of the problem file",
        {"rows": len(replay)},
    )
    checks, shared = _run_checks(pf, problem, schedule, config, pert, steer,
                                 trace, args.jobs)
    checks = [consistency] + checks
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_report(out_dir / "report.json", _summary(trace), checks)
        bound = (shared["rate"].c_r, shared["rate"].q_r) if "rate" in shared else None
        render_convergence(trace, out_dir / "convergence.png", bound=bound)
        if "band_entries" in shared:
            render_band(shared["band_entries"], out_dir / "band_slack.png")
    for c in checks:
        print(f"[{c.status:>7}] {c.name}")
    return _exit_code(checks)


def _cmd_kappa(args) -> int:
    pf = _load_file(args.problem)
    if not (pf.analysis and pf.analysis.get("kappa")):
        raise ProblemFileError(["at $.analysis.kappa: expected a kappa section, found none"])
    problem = pf.build_problem()
    kc = pf.analysis["kappa"]
    seed = args.seed_override if args.seed_override is not None else kc["seed"]
    est = estimate_kappa(problem, Ball(center=np.array(kc["center"], float),
                                       radius=kc["radius"]),
                         kc["samples"], seed, workers=max(args.jobs, 1))
    print(json.dumps({
        "kappa_hat": est.kappa_hat,
        "kappa_inflated": est.kappa_inflated,
        "samples": est.n_samples,
        "witness": None if est.max_ratio_witness is None else est.max_ratio_witness.tolist(),
    }, default=_json_default))
    return 0


def _cmd_angle(args) -> int:
    pf = _load_file(args.problem)
    problem = pf.build_problem()
    if not all(isinstance(s, LinearSubspace) for s in problem.sets):
        raise ProblemFileError(
            ["at $.sets: expected linear subspaces for the angle command, found other types"])
    rep = friedrichs_cosine(problem.sets)
    print(json.dumps({
        "cosine": rep.cosine,
        "theta": rep.theta,
        "method": rep.method,
        "n_samples": rep.n_samples,
    }, default=_json_default))
    return 0


def _cmd_fixtures(args) -> int:
    count = fixtures.write_fixtures(args.out)
    print(f"wrote {count} fixture records to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feaskit",
        description="Convex-feasibility solver (string averaging projections) "
                    "and bound-verification harness",
    )
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker hint for independent checks and sampling")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="replace every seed declared in the problem file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the iteration and write trace, report and figures")
    p.add_argument("problem", help="problem file (JSON)")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify", help="replay a problem file and audit a stored trace")
    p.add_argument("trace", help="trace CSV written by solve")
    p.add_argument("--problem", required=True, help="problem file (JSON)")
    p.add_argument("--out-dir", default=None, help="optional output directory")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("kappa", help="estimate the linear-regularity constant")
    p.add_argument("problem", help="problem file with an analysis.kappa section")
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("angle", help="compute the Friedrichs angle of subspace families")
    p.add_argument("problem", help="problem file whose sets are linear subspaces")
    p.set_defaults(func=_cmd_angle)

    p = sub.add_parser("oracle-fixtures", help="regenerate the oracle fixtures file")
    p.add_argument("--out", required=True, help="output fixtures path")
    p.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FEAS_LOG_LEVEL", "warn").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FeaskitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
