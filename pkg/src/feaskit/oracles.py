"""Brute-force reference oracles.

These deliberately know nothing about the closed-form projections they
validate: grid search enumerates feasible lattice points, the subgradient
check uses only function evaluations, and the subspace limit is assembled
from a stacked nullspace.  Every derived expected value in the test suite
traces back to one of these, recorded in a fixtures file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from hashlib import sha256

import numpy as np

from .engine import SteeringSpec
from .exceptions import InvalidSetError, OracleError
from .problem import Problem
from .sets import ConvexSet, LinearSubspace, as_point

GRID_MAX_DIM = 3
GRID_MAX_CELLS = 10**8


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Bounding box and per-axis resolution for grid enumeration."""

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple[int, ...]

    def __post_init__(self):
        lo = as_point(self.lower, what="grid lower")
        hi = as_point(self.upper, dim=lo.size, what="grid upper")
        if lo.size > GRID_MAX_DIM:
            raise InvalidSetError(f"grid oracles are limited to dimension {GRID_MAX_DIM}")
        if np.any(lo >= hi):
            raise InvalidSetError("grid box must have positive extent on every axis")
        res = self.resolution
        if isinstance(res, int):
            res = (res,) * lo.size
        res = tuple(int(r) for r in res)
        if len(res) != lo.size or any(r < 2 for r in res):
            raise InvalidSetError("grid needs a resolution >= 2 per axis")
        if np.prod(res) > GRID_MAX_CELLS:
            raise InvalidSetError(f"grid exceeds the {GRID_MAX_CELLS} cell cap")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "resolution", res)

    @property
    def cell_diagonal(self) -> float:
        steps = (self.upper - self.lower) / (np.array(self.resolution) - 1)
        return float(np.linalg.norm(steps))

    def points(self) -> np.ndarray:
        axes = [
            np.linspace(self.lower[i], self.upper[i], self.resolution[i])
            for i in range(self.lower.size)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def grid_project(target: ConvexSet | Problem, x, grid: GridSpec) -> np.ndarray:
    """Feasible grid point closest to x.

    Whenever the grid contains a feasible point within one cell of the
    true projection, the returned distance matches d(x, target) to one
    cell diagonal; the returned point itself is a cell diagonal off for
    grid-aligned flat boundaries and within sqrt(2 d c + c^2) in general
    (c the cell diagonal), by the firm projection inequality.  Ties go to
    the smallest lexicographic grid index (np.argmin on C-ordered points).
    """
    xp = as_point(x)
    pts = grid.points()
    tol = 1e-9 * (1.0 + np.max(np.linalg.norm(pts, axis=1)))
    if isinstance(target, Problem):
        feas = target.max_residual_many(pts) <= tol
    else:
        feas = target.distance(pts) <= tol
    if not np.any(feas):
        raise OracleError(
            "no feasible grid point: refine the grid or enlarge its bounding box"
        )
    cand = pts[feas]
    d = np.linalg.norm(cand - xp, axis=1)
    return cand[int(np.argmin(d))].copy()


# Subgradient validation -------------------------------------------------------


@dataclass
class SubgradientReport:
    inequality_violations: int
    worst_inequality_slack: float
    gradient_checked: bool
    max_gradient_error: float
    passed: bool


def finite_difference_subgradient_check(steer: SteeringSpec, x, h: float,
                                        n_samples: int = 200, seed: int = 0) -> SubgradientReport:
    """Validate the analytic subgradient of a steering objective at x.

    Checks phi(y) >= phi(x) + <v, y - x> on random y within radius 10 h,
    and compares v against central differences when the objective is
    differentiable at x (tolerance 10 h).
    """
    if h <= 0:
        raise InvalidSetError("finite-difference step h must be positive")
    xp = as_point(x)
    obj = steer.objective
    v = obj.subgradient(xp)
    fx = obj.value(xp)
    rng = np.random.default_rng(seed)

    worst = np.inf
    violations = 0
    for _ in range(n_samples):
        y = xp + 10.0 * h * rng.standard_normal(xp.size)
        slack = obj.value(y) - fx - float(v @ (y - xp))
        worst = min(worst, slack)
        if slack < -1e-9 * (1.0 + abs(fx)):
            violations += 1

    checked = obj.differentiable_at(xp, margin=10.0 * h)
    max_err = 0.0
    if checked:
        fd = np.empty_like(xp)
        for i in range(xp.size):
            e = np.zeros_like(xp)
            e[i] = h
            fd[i] = (obj.value(xp + e) - obj.value(xp - e)) / (2.0 * h)
        max_err = float(np.max(np.abs(fd - v)))
    passed = violations == 0 and (not checked or max_err <= 10.0 * h)
    return SubgradientReport(
        inequality_violations=violations,
        worst_inequality_slack=float(worst),
        gradient_checked=checked,
        max_gradient_error=max_err,
        passed=passed,
    )


# Exact subspace limits ---------------------------------------------------------


def two_subspace_exact_limit(subspaces, x0) -> np.ndarray:
    """Orthogonal projection of x0 onto the intersection of linear subspaces.

    Assembled directly from the nullspace of the stacked complement
    projectors, independent of any iterative scheme; exact runs on
    subspace problems must converge to this point.
    """
    subs = tuple(subspaces)
    if not subs or not all(isinstance(s, LinearSubspace) for s in subs):
        raise InvalidSetError("exact limit requires linear subspaces")
    x = as_point(x0, dim=subs[0].dim)
    n = x.size
    K = np.vstack([np.eye(n) - s.basis @ s.basis.T for s in subs])
    _, sv, Vt = np.linalg.svd(K)
    tol = max(K.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    B = Vt[rank:].T
    return B @ (B.T @ x)


# Fixture records ----------------------------------------------------------------


def _canonical(obj) -> str:
    """Deterministic JSON with round-trip floats, for hashing and storage."""

    def enc(o):
        if isinstance(o, float):
            return float(format(o, ".17g"))
        if isinstance(o, np.floating):
            return float(format(float(o), ".17g"))
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.ndarray):
            return [enc(v) for v in o.tolist()]
        if isinstance(o, (list, tuple)):
            return [enc(v) for v in o]
        if isinstance(o, dict):
            return {k: enc(v) for k, v in o.items()}
        return o

    return json.dumps(enc(obj), sort_keys=True, separators=(",", ":"))


def fixture_record(case_id: str, case: dict, oracle_output, tol: float) -> str:
    """One fixtures-file line: id, case hash, input, oracle output, tolerance."""
    case_json = _canonical(case)
    record = {
        "id": case_id,
        "hash": sha256(case_json.encode()).hexdigest()[:16],
        "case": json.loads(case_json),
        "oracle": json.loads(_canonical(oracle_output)),
        "tol": float(tol),
    }
    return _canonical(record)


def parse_fixture_line(line: str) -> dict:
    rec = json.loads(line)
    expected = sha256(_canonical(rec["case"]).encode()).hexdigest()[:16]
    if rec["hash"] != expected:
        raise OracleError(f"fixture {rec['id']!r} hash mismatch: file corrupted?")
    return rec
