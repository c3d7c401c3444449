"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines; every criterion pins its tolerance here.
"""

import math
import pathlib

import numpy as np
import pytest

import feaskit as fk
from feaskit import fixtures
from conftest import random_plan, random_problem, random_start, record_verdict

DATA = pathlib.Path(__file__).parent / "data"

THETAS = (np.pi / 6, np.pi / 3, 4 * np.pi / 9)


def two_lines(theta):
    return fk.Problem(sets=(
        fk.LinearSubspace(basis=[[1.0, 0.0]]),
        fk.LinearSubspace(basis=[[np.cos(theta), np.sin(theta)]]),
    ))


def verdict(n: int, ok: bool, text: str) -> None:
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} - {text}"
    print(line)
    record_verdict(line)
    assert ok


def battery_problem(trial: int):
    """Criterion-3 battery: seeded random families with verified witnesses."""
    rng = np.random.default_rng(1000 + trial)
    M = int(rng.integers(2, 6))
    prob = random_problem(rng, M)
    x0 = random_start(rng, prob)
    return prob, x0, M


def exact_battery_run(prob, x0, M):
    sched = fk.cyclic_single_index_schedule(M)
    cfg = fk.RunConfig(mode="exact", x0=x0, max_iter=1500, stop_residual=1e-11)
    return sched, fk.run(prob, sched, cfg)


def inflated_kappa(prob, x0, seed, samples=3000):
    d0 = fk.distance_intersection(prob, x0)
    center = fk.project_intersection(prob, x0)
    region = fk.Ball(center=center, radius=max(d0, 1e-6) * 1.001)
    est = fk.estimate_kappa(prob, region, samples, seed=seed)
    return est.kappa_inflated, d0


def test_criterion_1_two_subspace_exact_rate():
    """Alternating projections on two lines contract by cos^2(theta) per sweep."""
    worst = 0.0
    for theta in THETAS:
        prob = two_lines(theta)
        sched = fk.fixed_schedule(fk.single_string_plan(1, 2))
        cfg = fk.RunConfig(mode="exact", x0=np.array([1.0, 0.7]),
                           max_iter=16, stop_residual=0.0)
        tr = fk.run(prob, sched, cfg)
        # the limit is P_C x0 = 0 for distinct lines through the origin
        errs = np.linalg.norm(tr.iterates, axis=1)
        log_ratios = np.log(errs[6:15] / errs[5:14])
        target = 2.0 * math.log(math.cos(theta))
        rel = float(np.max(np.abs(log_ratios - target) / abs(target)))
        worst = max(worst, rel)
    verdict(1, worst <= 1e-3,
            f"per-sweep log-contraction matches 2 log cos(theta); worst rel err {worst:.2e}")


def test_criterion_2_rate_constant_formulas():
    """Closed-form q for one-string cyclic, pointwise cyclic and simultaneous plans."""
    worst = 0.0
    for M in range(2, 11):
        for kappa in (1.0, 2.0, 10.0):
            base = 1.0 - 1.0 / (2.0 * M * kappa * kappa)
            cases = [
                (fk.rate_constants(1.0, M, 1, kappa, 1.0).q_r, math.sqrt(base)),
                (fk.rate_constants(1.0 / M, 1, 1, kappa, 1.0).q_r, math.sqrt(base)),
                (fk.rate_constants(1.0, 1, M, kappa, 1.0).q_r, base ** (1.0 / (2.0 * M))),
            ]
            for got, want in cases:
                worst = max(worst, abs(got - want) / want)
    verdict(2, worst <= 4e-16,
            f"q formulas reproduced at machine precision; worst rel err {worst:.2e}")


def test_criterion_3_error_band_battery():
    """Two-sided residual band on 50 seeded random problems, zero violations."""
    failures = []
    for trial in range(50):
        prob, x0, M = battery_problem(trial)
        sched, tr = exact_battery_run(prob, x0, M)
        kappa, d0 = inflated_kappa(prob, x0, seed=trial)
        rc = fk.rate_constants(1.0, 1, M, kappa, d0)
        lim = fk.estimate_limit(prob, sched, tr.x_final, tr.iterations_used)
        rep = fk.error_band_check(tr, rc, kappa, lim.x_inf, cushion=lim.cushion)
        if not rep.passed:
            failures.append((trial, rep.worst_slack))
    verdict(3, not failures,
            f"error band held on 50/50 problems (violations: {failures})")


def test_criterion_4_perturbation_resilience():
    """Restart deviation, strong-rate bound and limit drift under geometric errors."""
    failures = []
    for trial in range(50):
        prob, x0, M = battery_problem(trial)
        sched = fk.cyclic_single_index_schedule(M)
        for E in (0.1, 1.0):
            pert = fk.PerturbationSchedule.geometric(E, 0.5, seed=trial)
            cfg = fk.RunConfig(mode="perturbed", x0=x0, max_iter=300,
                               stop_residual=1e-12)
            tr = fk.run(prob, sched, cfg, pert=pert)
            K = tr.iterations_used
            indices = sorted(set(int(t) for t in np.linspace(0, max(K - 1, 0), 5)))
            analyses = [fk.restart_analysis(prob, sched, tr, i, K + 40, pert=pert)
                        for i in indices]
            if not all(a.deviation_ok for a in analyses):
                failures.append((trial, E, "deviation"))
                continue
            lim = fk.estimate_limit(prob, sched, tr.x_final, K)
            rep = fk.strong_rate_check(tr, analyses, lim.x_inf, cushion=lim.cushion)
            if not rep.passed:
                failures.append((trial, E, "strong_rate"))
                continue
            drift = float(np.linalg.norm(lim.x_inf - analyses[0].x_i_inf))
            if drift > 2.0 * E + 1e-8:
                failures.append((trial, E, f"drift {drift}"))
    verdict(4, not failures,
            f"deviation/strong-rate/limit-drift bounds held for E in (0.1, 1.0); "
            f"failures: {failures}")


def test_criterion_5_superiorization():
    """Steered runs stay feasible and obey the preserved linear-rate bands."""
    prob = two_lines(np.pi / 3)
    sched = fk.cyclic_single_index_schedule(2)
    steer = fk.SteeringSpec(objective=fk.QuadraticObjective(target=[1.0, 1.0]),
                            beta0=0.5, ratio=0.5, normalize=True)
    cfg = fk.RunConfig(mode="superiorized", x0=np.array([2.0, 3.0]),
                       max_iter=400, stop_residual=1e-12)
    tr_s = fk.run(prob, sched, cfg, steer=steer)
    tr_e = fk.run(prob, sched, fk.RunConfig(mode="exact", x0=cfg.x0,
                                            max_iter=400, stop_residual=1e-12))
    est = fk.estimate_kappa(prob, fk.Ball(center=[0.0, 0.0], radius=4.0),
                            10_000, seed=5)
    rc = fk.rate_constants(1.0, 1, 2, est.kappa_inflated, 1.0)
    rep = fk.superiorization_report(prob, sched, steer, tr_s, tr_e, rate=rc,
                                    restart_indices=(0, 6, 10, 16, 24),
                                    epsilon=0.05)
    feasible = rep.residual_superiorized <= 1e-8
    band = rep.rate_band is not None and rep.rate_band.passed
    past = rep.i_epsilon is not None and rep.i_epsilon <= 16
    enlarged = rep.enlarged_band is not None and rep.enlarged_band.passed \
        and len(rep.enlarged_band.entries) > 0

    # the half-space example with phi = ||x||^2 / 2 also reaches feasibility
    quad = fk.Problem(sets=(fk.HalfSpace([1.0, 0.0], 0.0),
                            fk.HalfSpace([0.0, 1.0], 0.0)))
    steer0 = fk.SteeringSpec(objective=fk.QuadraticObjective(target=[0.0, 0.0]),
                             beta0=0.5, ratio=0.5)
    sched_q = fk.cyclic_single_index_schedule(2)
    tr_q = fk.run(quad, sched_q, fk.RunConfig(mode="superiorized",
                                              x0=np.array([2.0, 3.0]),
                                              max_iter=400, stop_residual=1e-12),
                  steer=steer0)
    quad_feasible = quad.max_residual(tr_q.x_final) <= 1e-8

    verdict(5, feasible and band and past and enlarged and quad_feasible,
            f"superiorized limit feasible (residual {rep.residual_superiorized:.1e}), "
            f"rate band and enlarged-set band hold past i_eps={rep.i_epsilon}")


def test_criterion_6_sqne_property_suite():
    """Certificates, telescoping and partial bounds over 1000 triples per problem."""
    total_violations = 0
    total = 0
    for pidx in range(4):
        rng = np.random.default_rng(5000 + pidx)
        M = int(rng.integers(2, 6))
        prob = random_problem(rng, M)
        X = prob.witness + 3.0 * rng.standard_normal((1000, prob.dim))
        Z = fk.project_intersection_many(prob, prob.witness
                                         + 2.0 * rng.standard_normal((1000, prob.dim)))
        dC = np.linalg.norm(X - fk.project_intersection_many(prob, X), axis=1)
        for t in range(1000):
            plan = random_plan(rng, M)
            x, z = X[t], Z[t]
            scale = 1e-9 * (1.0 + np.linalg.norm(x) + np.linalg.norm(z)) ** 2
            total += 3
            cert = fk.sqne_certificate(prob, plan, x, z)
            if cert.slack < -scale:
                total_violations += 1
            string = plan.strings[int(rng.integers(len(plan.strings)))]
            if fk.composition_telescope_check(prob, string, x, z) < -scale:
                total_violations += 1
            i = sorted(plan.index_set)[int(rng.integers(len(plan.index_set)))]
            lhs, mid, rhs = fk.partial_bound_check(prob, plan, x, z, i,
                                                   d_to_intersection=float(dC[t]))
            if lhs > mid + scale or lhs > rhs + scale:
                total_violations += 1
    verdict(6, total_violations == 0,
            f"{total} inequality evaluations, {total_violations} violations")


def test_criterion_7_enlargement_identity():
    """d(x, C) = d(x, C_eps) + eps outside the enlargement, with grid cross-check."""
    rng = np.random.default_rng(77)
    variants = [
        fk.HalfSpace(normal=[1.0, 0.0], offset=0.0),
        fk.Hyperplane(normal=[0.0, 1.0], offset=0.5),
        fk.Box(lower=[0.0, 0.0], upper=[1.0, 1.0]),
        fk.Ball(center=[0.0, 0.0], radius=1.0),
        fk.AffineSubspace(basis=[[1.0, 0.0]], anchor=[0.0, 0.5]),
        fk.LinearSubspace(basis=[[1.0, 1.0]]),
    ]
    worst = 0.0
    checked = 0
    while checked < 1000:
        set_ = variants[int(rng.integers(len(variants)))]
        x = rng.uniform(-5, 5, size=2)
        d = set_.distance(x)
        if d <= 1e-6:
            continue
        eps = float(rng.uniform(0.0, d * 0.95))
        d_eps = float(np.linalg.norm(x - fk.project_enlarged(set_, x, eps)))
        worst = max(worst, abs(d - d_eps - eps))
        checked += 1
    identity_ok = worst <= 1e-10

    grid_ok = True
    for rec in fixtures.load_fixtures(DATA / "oracle_fixtures.jsonl"):
        if rec["case"]["kind"] != "project_enlarged":
            continue
        analytic = fixtures.analytic_result(rec["case"])
        grid_ok &= float(np.linalg.norm(analytic - np.array(rec["oracle"]))) <= rec["tol"]
    verdict(7, identity_ok and grid_ok,
            f"1000 random triples, worst identity error {worst:.2e}; grid cross-check ok")


def test_criterion_8_kappa_angle_consistency():
    """kappa_hat * sin(theta/2) lands in [0.95, 1] and cos(theta) sits in its interval."""
    ok = True
    details = []
    for theta in THETAS:
        prob = two_lines(theta)
        est = fk.estimate_kappa(prob, fk.Ball(center=[0.0, 0.0], radius=1.0),
                                10_000, seed=int(theta * 1000))
        product = est.kappa_hat * math.sin(theta / 2)
        in_range = 0.95 <= product <= 1.0 + 1e-9
        kappa_true = 1.0 / math.sin(theta / 2)
        lower, upper = fk.cos_kappa_bounds(kappa_true, M=2)
        rep = fk.friedrichs_cosine(list(prob.sets))
        in_interval = max(lower, 0.0) - 1e-12 <= rep.cosine <= upper + 1e-12
        ok = ok and in_range and in_interval
        details.append(f"theta={theta:.3f}: k*sin={product:.4f}, cos={rep.cosine:.4f}")
    verdict(8, ok, "; ".join(details))


def test_criterion_9_oracle_equivalence():
    """Closed-form projections match the grid oracle on the fixture matrix."""
    recs = fixtures.load_fixtures(DATA / "oracle_fixtures.jsonl")
    kinds = {rec["case"].get("set", {}).get("type") for rec in recs
             if rec["case"]["kind"] == "project"}
    covered = kinds == {"halfspace", "hyperplane", "box", "ball", "affine", "subspace"}
    worst = 0.0
    agree = True
    for rec in recs:
        analytic = fixtures.analytic_result(rec["case"])
        gap = float(np.linalg.norm(analytic - np.array(rec["oracle"])))
        worst = max(worst, gap)
        agree &= gap <= rec["tol"]
    regenerated = fixtures.generate_fixture_lines()
    stored = (DATA / "oracle_fixtures.jsonl").read_text().strip().splitlines()
    deterministic = regenerated == stored
    verdict(9, covered and agree and deterministic,
            f"{len(recs)} fixtures, worst gap {worst:.3e}, all variants covered, "
            f"regeneration deterministic")
