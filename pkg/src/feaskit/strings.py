"""String averaging operators and their quasi-nonexpansiveness checks.

A *string* is an ordered tuple of set indices; its product applies the
corresponding projections in order (first index first).  A *plan* is a
positively weighted convex combination of string products

    U x = sum_n w_n * P_{C_{j_last}} ... P_{C_{j_first}} x,

and a *control schedule* supplies a plan for every iteration index.  The
schedule declares three parameters that the convergence theory consumes:
a lower bound omega on all weights, an upper bound m on string lengths,
and the intermittency s (every index must appear within each window of s
consecutive plans).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSetError
from .intersection import distance_intersection
from .problem import Problem
from .sets import as_point

WEIGHT_SUM_TOL = 1e-12
MEMBER_TOL = 1e-8


def slack_scale(x, z) -> float:
    """Scale for inequality slacks: 1e-9 * (1 + ||x|| + ||z||)^2."""
    return 1e-9 * (1.0 + np.linalg.norm(x) + np.linalg.norm(z)) ** 2


def _check_string(indices, M: int | None) -> tuple[int, ...]:
    t = tuple(int(i) for i in indices)
    if not t:
        raise InvalidSetError("strings must be nonempty")
    if M is not None:
        for i in t:
            if not 1 <= i <= M:
                raise IndexError(f"string index {i} out of range [1, {M}]")
    return t


@dataclass(frozen=True, eq=False)
class StringPlan:
    """Strings (1-based index tuples, duplicates allowed) with weights summing to 1."""

    strings: tuple[tuple[int, ...], ...]
    weights: np.ndarray

    def __post_init__(self):
        strings = tuple(_check_string(s, None) for s in self.strings)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(strings):
            raise InvalidSetError(
                f"need one weight per string: {len(strings)} strings, {w.size} weights"
            )
        if np.any(w <= 0.0):
            raise InvalidSetError("weights must be strictly positive")
        if abs(float(np.sum(w)) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidSetError(f"weights must sum to 1, got {float(np.sum(w))!r}")
        object.__setattr__(self, "strings", strings)
        object.__setattr__(self, "weights", w)

    @property
    def max_string_length(self) -> int:
        return max(len(s) for s in self.strings)

    @property
    def min_weight(self) -> float:
        return float(np.min(self.weights))

    @property
    def index_set(self) -> frozenset[int]:
        return frozenset(i for s in self.strings for i in s)

    def check_indices(self, M: int) -> None:
        for s in self.strings:
            _check_string(s, M)


def single_string_plan(*indices: int) -> StringPlan:
    """Plan with one string and weight 1."""
    return StringPlan(strings=(tuple(indices),), weights=np.array([1.0]))


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Plan generator: fixed, cyclic over a list, or seeded choice from a pool.

    ``plan(k)`` is a pure function of k, so any run can be replayed or
    continued from an arbitrary index.  A single engine run consumes a
    schedule sequentially; distinct runs may share one (it is immutable).
    """

    kind: str  # "fixed" | "cyclic" | "random"
    plans: tuple[StringPlan, ...]
    declared_s: int
    declared_omega_min: float
    declared_m: int
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "cyclic", "random"):
            raise InvalidSetError(f"unknown schedule kind {self.kind!r}")
        plans = tuple(self.plans)
        if not plans:
            raise InvalidSetError("schedule needs at least one plan")
        if self.kind == "fixed" and len(plans) != 1:
            raise InvalidSetError("fixed schedule takes exactly one plan")
        if self.kind == "random" and self.seed is None:
            raise InvalidSetError("random schedule requires an explicit seed")
        if self.declared_s < 1:
            raise InvalidSetError("declared s must be a positive integer")
        if self.declared_m < 1:
            raise InvalidSetError("declared m must be a positive integer")
        if not 0.0 < self.declared_omega_min <= 1.0:
            raise InvalidSetError("declared omega must lie in (0, 1]")
        object.__setattr__(self, "plans", plans)

    def plan(self, k: int) -> StringPlan:
        if k < 0:
            raise IndexError("iteration index must be nonnegative")
        if self.kind == "fixed":
            return self.plans[0]
        if self.kind == "cyclic":
            return self.plans[k % len(self.plans)]
        rng = np.random.default_rng([self.seed, k])
        return self.plans[int(rng.integers(len(self.plans)))]


def fixed_schedule(plan: StringPlan, s: int = 1) -> ControlSchedule:
    return ControlSchedule(
        kind="fixed",
        plans=(plan,),
        declared_s=s,
        declared_omega_min=plan.min_weight,
        declared_m=plan.max_string_length,
    )


def cyclic_schedule(plans, s: int | None = None) -> ControlSchedule:
    plans = tuple(plans)
    return ControlSchedule(
        kind="cyclic",
        plans=plans,
        declared_s=len(plans) if s is None else s,
        declared_omega_min=min(p.min_weight for p in plans),
        declared_m=max(p.max_string_length for p in plans),
    )


def cyclic_single_index_schedule(M: int) -> ControlSchedule:
    """Plans (1), (2), ..., (M) repeating: omega = 1, m = 1, s = M."""
    return cyclic_schedule([single_string_plan(i) for i in range(1, M + 1)])


@dataclass
class WindowEntry:
    k: int
    covered: bool
    missing: tuple[int, ...]


@dataclass
class ScheduleReport:
    """Outcome of validating a schedule over a horizon."""

    windows: list[WindowEntry]
    weight_violations: list[tuple[int, float]]
    length_violations: list[tuple[int, int]]
    passed: bool

    @property
    def first_failed_window(self) -> int | None:
        for w in self.windows:
            if not w.covered:
                return w.k
        return None


def validate_schedule(sched: ControlSchedule, M: int, horizon: int) -> ScheduleReport:
    """Check s-window coverage and the declared omega/m against realized plans.

    Violations are report entries, never exceptions: the caller decides
    whether a failed report is fatal.
    """
    if horizon < sched.declared_s:
        raise InvalidSetError(
            f"horizon {horizon} shorter than declared s={sched.declared_s}"
        )
    full = frozenset(range(1, M + 1))
    plans = [sched.plan(k) for k in range(horizon)]
    for p in plans:
        p.check_indices(M)

    weight_violations = [
        (k, p.min_weight)
        for k, p in enumerate(plans)
        if p.min_weight < sched.declared_omega_min - WEIGHT_SUM_TOL
    ]
    length_violations = [
        (k, p.max_string_length)
        for k, p in enumerate(plans)
        if p.max_string_length > sched.declared_m
    ]

    windows = []
    for k in range(horizon - sched.declared_s + 1):
        seen: set[int] = set()
        for j in range(k, k + sched.declared_s):
            seen |= plans[j].index_set
        missing = tuple(sorted(full - seen))
        windows.append(WindowEntry(k=k, covered=not missing, missing=missing))

    passed = not weight_violations and not length_violations and all(w.covered for w in windows)
    return ScheduleReport(windows, weight_violations, length_violations, passed)


# Operator application ------------------------------------------------------


def apply_string(problem: Problem, indices, x) -> np.ndarray:
    """Apply the product of projections along a string, first index first."""
    y = as_point(x, dim=problem.dim)
    for j in _check_string(indices, problem.num_sets):
        y = problem.set_at(j).project(y)
    return y


def apply_operator(problem: Problem, plan: StringPlan, x) -> np.ndarray:
    """Apply U = sum_n w_n * (string product).

    The accumulation order over n is fixed left-to-right: floating-point
    sums are not associative and runs must be bit-reproducible.
    """
    xp = as_point(x, dim=problem.dim)
    plan.check_indices(problem.num_sets)
    acc = None
    for s, w in zip(plan.strings, plan.weights):
        term = w * apply_string(problem, s, xp)
        acc = term if acc is None else acc + term
    return acc


# Strong quasi-nonexpansiveness checks --------------------------------------


@dataclass(frozen=True)
class SqneCertificate:
    """One evaluation of ||Ux-z||^2 + rho*||x-Ux||^2 <= ||x-z||^2.

    slack = rhs - lhs; the inequality holds when slack >= -1e-9*scale.
    """

    rho: float
    lhs: float
    rhs: float
    scale: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -self.scale


def sqne_certificate(problem: Problem, plan: StringPlan, x, z,
                     rho: float | None = None) -> SqneCertificate:
    """Certificate for the plan operator at modulus rho (default 1/m).

    z must lie in the intersection; the operator built from strings of
    length at most m is (1/m)-strongly quasi-nonexpansive there.
    """
    xp = as_point(x, dim=problem.dim)
    zp = as_point(z, dim=problem.dim)
    problem.check_member(zp, MEMBER_TOL)
    if rho is None:
        rho = 1.0 / plan.max_string_length
    Ux = apply_operator(problem, plan, xp)
    lhs = float(np.sum((Ux - zp) ** 2) + rho * np.sum((xp - Ux) ** 2))
    rhs = float(np.sum((xp - zp) ** 2))
    return SqneCertificate(rho=rho, lhs=lhs, rhs=rhs, scale=slack_scale(xp, zp))


def composition_telescope_check(problem: Problem, indices, x, z) -> float:
    """Slack of the telescoping bound for one string product.

    With Q_0 = id and Q_i the partial products,
    ||Ux-z||^2 <= ||x-z||^2 - sum_i ||Q_i x - Q_{i-1} x||^2
    (each projection has modulus 1); returns rhs - lhs.
    """
    xp = as_point(x, dim=problem.dim)
    zp = as_point(z, dim=problem.dim)
    problem.check_member(zp, MEMBER_TOL)
    increments = 0.0
    q = xp
    for j in _check_string(indices, problem.num_sets):
        q_next = problem.set_at(j).project(q)
        increments += float(np.sum((q_next - q) ** 2))
        q = q_next
    lhs = float(np.sum((q - zp) ** 2)) + increments
    rhs = float(np.sum((xp - zp) ** 2))
    return rhs - lhs


def partial_bound_check(problem: Problem, plan: StringPlan, x, z, i: int,
                        d_to_intersection: float | None = None,
                        oracle_tol: float = 1e-12) -> tuple[float, float, float]:
    """Chained quantities bounding a single-set residual by operator progress.

    Returns (lhs, mid, rhs) with

        lhs = d(x, C_i)^2
        mid = (2m/omega) * (||x-z||^2 - ||Ux-z||^2)
        rhs = (2m/omega) * ||Ux-x|| * d(x, C)

    Both lhs <= mid and lhs <= rhs hold for every z in C.  mid <= rhs is
    NOT guaranteed (a factor-2 counterexample exists even at z = P_C x),
    so callers should check the two lhs inequalities.  d(x, C) comes from
    the intersection oracle unless supplied.
    """
    xp = as_point(x, dim=problem.dim)
    zp = as_point(z, dim=problem.dim)
    problem.check_member(zp, MEMBER_TOL)
    if i not in plan.index_set:
        raise IndexError(
            f"index {i} does not appear in any string of the plan; "
            "the residual bound requires the plan to touch that set"
        )
    m = plan.max_string_length
    omega = plan.min_weight
    Ux = apply_operator(problem, plan, xp)
    factor = 2.0 * m / omega
    lhs = float(problem.set_at(i).distance(xp)) ** 2
    mid = factor * (float(np.sum((xp - zp) ** 2)) - float(np.sum((Ux - zp) ** 2)))
    if d_to_intersection is None:
        d_to_intersection = distance_intersection(problem, xp, oracle_tol)
    rhs = factor * float(np.linalg.norm(Ux - xp)) * d_to_intersection
    return lhs, mid, rhs
