"""Iteration engine: exact, perturbed and superiorized runs plus rate checks.

The basic scheme is x^{k+1} = T_k x^k with T_k the plan operator for step
k.  The perturbed mode adds a vector p^k of norm at most e_k after each
step; the superiorized mode steers before each step,
x^{k+1} = T_k(x^k - beta_k v^k), with summable beta_k and bounded v^k.

Because summable inexactness preserves convergence (and its rate), every
perturbed or superiorized run can be audited against its own exact
restarts: continuing exactly from the recorded iterate x^i yields a
trajectory x_i^k whose deviation from the outer run obeys
||x^k - x_i^k|| <= sum_{j=i}^{k-1} e_j.  ``restart_analysis`` computes
these continuations and the derived limit and rate bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EngineError, InvalidSetError, ScheduleValidationError
from .problem import Problem
from .sets import as_point
from .strings import ControlSchedule, apply_operator, validate_schedule

DEFAULT_STOP_RESIDUAL = 1e-10
DEFAULT_MAX_ITER = 10**5
LIMIT_RESIDUAL = 1e-12
LIMIT_CAP = 10**6

MODES = ("exact", "perturbed", "superiorized")


# Perturbations --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PerturbationSchedule:
    """Summable magnitude sequence e_k plus a rule for the direction.

    Magnitudes: ``none`` (all zero), ``geometric`` e_k = e0 * ratio^k with
    ratio in [0, 1), or ``explicit`` (finite list, zero afterwards; the
    tail sum is finite by construction).  Directions: a fresh seeded
    random unit vector per step, or a fixed unit vector.  The applied
    vector is scaled so its norm never exceeds e_k.
    """

    kind: str = "none"  # "none" | "geometric" | "explicit"
    e0: float = 0.0
    ratio: float = 0.0
    values: tuple[float, ...] = ()
    direction_kind: str = "random_unit"  # "random_unit" | "fixed"
    seed: int = 0
    fixed_direction: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "geometric", "explicit"):
            raise InvalidSetError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "geometric":
            if not (self.e0 >= 0.0 and np.isfinite(self.e0)):
                raise InvalidSetError("geometric perturbation needs e0 >= 0")
            if not 0.0 <= self.ratio < 1.0:
                raise InvalidSetError(
                    "perturbation sequence must be summable: geometric ratio "
                    f"must lie in [0, 1), got {self.ratio}"
                )
        if self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if any(not np.isfinite(v) or v < 0 for v in vals):
                raise InvalidSetError("explicit perturbation values must be finite and >= 0")
            object.__setattr__(self, "values", vals)
        if self.direction_kind not in ("random_unit", "fixed"):
            raise InvalidSetError(f"unknown direction kind {self.direction_kind!r}")
        if self.direction_kind == "fixed":
            if self.fixed_direction is None:
                raise InvalidSetError("fixed direction requires a vector")
            v = as_point(self.fixed_direction, what="perturbation direction")
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                raise InvalidSetError("fixed perturbation direction must be nonzero")
            object.__setattr__(self, "fixed_direction", v / nrm)

    @classmethod
    def none(cls) -> "PerturbationSchedule":
        return cls(kind="none")

    @classmethod
    def geometric(cls, e0: float, ratio: float, seed: int = 0,
                  fixed_direction=None) -> "PerturbationSchedule":
        dk = "fixed" if fixed_direction is not None else "random_unit"
        return cls(kind="geometric", e0=e0, ratio=ratio, seed=seed,
                   direction_kind=dk, fixed_direction=fixed_direction)

    @classmethod
    def explicit(cls, values, seed: int = 0, fixed_direction=None) -> "PerturbationSchedule":
        dk = "fixed" if fixed_direction is not None else "random_unit"
        return cls(kind="explicit", values=tuple(values), seed=seed,
                   direction_kind=dk, fixed_direction=fixed_direction)

    def magnitude(self, k: int) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "geometric":
            return self.e0 * self.ratio**k
        return self.values[k] if k < len(self.values) else 0.0

    def tail_sum(self, i: int = 0) -> float:
        """sum_{j >= i} e_j (closed form for geometric magnitudes)."""
        if self.kind == "none":
            return 0.0
        if self.kind == "geometric":
            return self.e0 * self.ratio**i / (1.0 - self.ratio)
        return float(sum(self.values[i:]))

    def partial_sum(self, i: int, k: int) -> float:
        """sum_{j=i}^{k-1} e_j."""
        if k <= i:
            return 0.0
        if self.kind == "none":
            return 0.0
        if self.kind == "geometric":
            return self.e0 * (self.ratio**i - self.ratio**k) / (1.0 - self.ratio) \
                if self.ratio > 0.0 else (self.e0 if i == 0 and k > 0 else self.magnitude(i))
        return float(sum(self.values[i:k]))

    def vector(self, k: int, dim: int) -> np.ndarray:
        """Perturbation p^k with ||p^k|| <= e_k (equality up to clamping)."""
        e = self.magnitude(k)
        if e == 0.0:
            return np.zeros(dim)
        if self.direction_kind == "fixed":
            u = self.fixed_direction
        else:
            rng = np.random.default_rng([self.seed, k])
            g = rng.standard_normal(dim)
            nrm = np.linalg.norm(g)
            u = g / nrm if nrm > 0.0 else np.eye(dim)[0]
        p = e * u
        # guarantee the envelope ||p|| <= e against rounding in the normalization
        nrm = float(np.linalg.norm(p))
        while nrm > e:
            p = p * (e / nrm)
            nrm = float(np.linalg.norm(p))
        return p


# Steering -------------------------------------------------------------------


class Objective:
    """Convex objective with an analytic subgradient selection."""

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subgradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def differentiable_at(self, x: np.ndarray, margin: float) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class QuadraticObjective(Objective):
    """0.5 * ||x - target||^2."""

    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", as_point(self.target, what="target"))

    def value(self, x):
        return 0.5 * float(np.sum((x - self.target) ** 2))

    def subgradient(self, x):
        return x - self.target


@dataclass(frozen=True, eq=False)
class WeightedL1Objective(Objective):
    """sum_i w_i * |x_i - t_i|; at a kink the coordinate subgradient is 0."""

    weights: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        w = as_point(self.weights, what="l1 weights")
        t = as_point(self.target, dim=w.size, what="target")
        if np.any(w < 0):
            raise InvalidSetError("l1 weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "target", t)

    def value(self, x):
        return float(np.sum(self.weights * np.abs(x - self.target)))

    def subgradient(self, x):
        return self.weights * np.sign(x - self.target)

    def differentiable_at(self, x, margin):
        return bool(np.all(np.abs(x - self.target) > margin))


@dataclass(frozen=True, eq=False)
class LinearObjective(Objective):
    """<cost, x>."""

    cost: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cost", as_point(self.cost, what="cost"))

    def value(self, x):
        return float(self.cost @ x)

    def subgradient(self, x):
        return self.cost.copy()


@dataclass(frozen=True, eq=False)
class SteeringSpec:
    """Steering rule for the superiorized mode.

    beta_k = beta0 * ratio^k (summable since ratio in (0, 1)); the emitted
    direction is the analytic subgradient, normalized to unit length when
    ``normalize`` is set, and must respect the declared norm bound.
    """

    objective: Objective
    beta0: float
    ratio: float
    normalize: bool = True
    bound: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.beta0) and self.beta0 >= 0.0):
            raise InvalidSetError("beta0 must be a nonnegative real")
        if not 0.0 < self.ratio < 1.0:
            raise InvalidSetError(
                f"steering coefficients must be summable: ratio must lie in (0, 1), got {self.ratio}"
            )
        if not (np.isfinite(self.bound) and self.bound >= 0.0):
            raise InvalidSetError("steering norm bound must be nonnegative")

    def beta(self, k: int) -> float:
        return self.beta0 * self.ratio**k

    def beta_tail_sum(self, i: int = 0) -> float:
        return self.beta0 * self.ratio**i / (1.0 - self.ratio)

    def steering_vector(self, x: np.ndarray) -> np.ndarray:
        # bound 0 switches steering off entirely (degenerates to the basic run)
        if self.bound == 0.0:
            return np.zeros_like(x)
        g = self.objective.subgradient(x)
        if self.normalize:
            nrm = np.linalg.norm(g)
            g = g / nrm if nrm > 0.0 else np.zeros_like(g)
        nrm = float(np.linalg.norm(g))
        if nrm > self.bound * (1.0 + 1e-12):
            raise EngineError(
                f"steering vector norm {nrm:.6g} exceeds the declared bound {self.bound:.6g}"
            )
        return g


# Runs and traces ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RunConfig:
    mode: str
    x0: np.ndarray
    max_iter: int = DEFAULT_MAX_ITER
    stop_residual: float = DEFAULT_STOP_RESIDUAL
    record_every: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidSetError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_iter < 1:
            raise InvalidSetError("max_iter must be >= 1")
        if self.record_every < 1:
            raise InvalidSetError("record_every must be >= 1")
        if not (np.isfinite(self.stop_residual) and self.stop_residual >= 0.0):
            raise InvalidSetError("stop_residual must be a nonnegative real")
        object.__setattr__(self, "x0", as_point(self.x0, what="x0"))


@dataclass(eq=False)
class Trace:
    """Recorded history of one run.

    Scalar series cover every step; iterates are thinned by record_every.
    Step-indexed series (step_norms, applied_e, beta_v) have length
    ``iterations_used``: entry k describes the step from x^k to x^{k+1}.
    A completed trace is immutable by convention and safe to share.
    """

    mode: str
    x0: np.ndarray
    record_every: int
    recorded_ks: np.ndarray          # iterate indices actually stored
    iterates: np.ndarray             # (len(recorded_ks), n)
    residual_max: np.ndarray         # (K+1,), max_i d(x^k, C_i)
    step_norms: np.ndarray           # (K,), ||x^{k+1} - x^k||
    applied_e: np.ndarray | None     # (K,), perturbation magnitudes, perturbed mode
    beta_v: np.ndarray | None        # (K,), beta_k * ||v^k||, superiorized mode
    phi: np.ndarray | None           # (K+1,), objective values, superiorized mode
    x_final: np.ndarray
    iterations_used: int
    stop_reason: str                 # "residual" | "max_iter"

    def __post_init__(self):
        K = self.iterations_used
        if len(self.residual_max) != K + 1 or len(self.step_norms) != K:
            raise EngineError("trace scalar series lengths are inconsistent")
        if np.any(self.residual_max < 0):
            raise EngineError("residual series must be nonnegative")

    @property
    def has_all_iterates(self) -> bool:
        return self.record_every == 1

    def iterate_at(self, k: int) -> np.ndarray:
        pos = np.searchsorted(self.recorded_ks, k)
        if pos >= len(self.recorded_ks) or self.recorded_ks[pos] != k:
            raise EngineError(
                f"iterate x^{k} was not recorded (record_every={self.record_every}); "
                "rerun with record_every=1"
            )
        return self.iterates[pos]

    def step_envelope(self, k: int) -> float:
        """Inexactness budget e_k of the step out of x^k (0 in exact mode)."""
        if self.applied_e is not None:
            return float(self.applied_e[k])
        if self.beta_v is not None:
            return float(self.beta_v[k])
        return 0.0


def run(problem: Problem, schedule: ControlSchedule, config: RunConfig,
        pert: PerturbationSchedule | None = None,
        steer: SteeringSpec | None = None) -> Trace:
    """Execute the iteration in the configured mode and record a trace.

    The schedule is validated over the run horizon first; a failed report
    aborts the run.  Stops as soon as max_i d(x^k, C_i) <= stop_residual
    or after max_iter steps.
    """
    if config.mode == "perturbed":
        if pert is None:
            pert = PerturbationSchedule.none()
    elif pert is not None:
        raise EngineError(f"perturbation schedule given but mode is {config.mode!r}")
    if config.mode == "superiorized":
        if steer is None:
            raise EngineError("superiorized mode requires a steering spec")
    elif steer is not None:
        raise EngineError(f"steering spec given but mode is {config.mode!r}")

    horizon = max(config.max_iter, schedule.declared_s)
    report = validate_schedule(schedule, problem.num_sets, horizon)
    if not report.passed:
        k = report.first_failed_window
        detail = f"window at k={k} misses indices" if k is not None else "declared parameters violated"
        raise ScheduleValidationError(f"schedule failed validation over horizon {horizon}: {detail}")

    x = as_point(config.x0, dim=problem.dim).copy()
    residuals = [problem.max_residual(x)]
    steps: list[float] = []
    applied_e: list[float] = []
    beta_v: list[float] = []
    phis: list[float] = []
    recorded_ks = [0]
    iterates = [x.copy()]
    if steer is not None:
        phis.append(steer.objective.value(x))

    k = 0
    stop_reason = "max_iter"
    while True:
        if residuals[-1] <= config.stop_residual:
            stop_reason = "residual"
            break
        if k >= config.max_iter:
            break
        plan = schedule.plan(k)
        if config.mode == "exact":
            x_next = apply_operator(problem, plan, x)
        elif config.mode == "perturbed":
            x_next = apply_operator(problem, plan, x)
            p = pert.vector(k, problem.dim)
            x_next = x_next + p
            # the declared envelope, not ||p||: bound checks consume e_k and
            # the construction guarantees ||p|| <= e_k
            applied_e.append(pert.magnitude(k))
        else:
            b = steer.beta(k)
            v = steer.steering_vector(x)
            bv = b * float(np.linalg.norm(v))
            z = x if bv == 0.0 else x - b * v
            x_next = apply_operator(problem, plan, z)
            beta_v.append(bv)
        if not np.all(np.isfinite(x_next)):
            raise EngineError(f"non-finite iterate produced at k={k + 1}")
        steps.append(float(np.linalg.norm(x_next - x)))
        x = x_next
        k += 1
        residuals.append(problem.max_residual(x))
        if steer is not None:
            phis.append(steer.objective.value(x))
        if k % config.record_every == 0:
            recorded_ks.append(k)
            iterates.append(x.copy())

    if recorded_ks[-1] != k:
        recorded_ks.append(k)
        iterates.append(x.copy())

    return Trace(
        mode=config.mode,
        x0=config.x0.copy(),
        record_every=config.record_every,
        recorded_ks=np.array(recorded_ks, dtype=int),
        iterates=np.array(iterates),
        residual_max=np.array(residuals),
        step_norms=np.array(steps),
        applied_e=np.array(applied_e) if config.mode == "perturbed" else None,
        beta_v=np.array(beta_v) if config.mode == "superiorized" else None,
        phi=np.array(phis) if config.mode == "superiorized" else None,
        x_final=x.copy(),
        iterations_used=k,
        stop_reason=stop_reason,
    )


# Limit estimation -----------------------------------------------------------


@dataclass(frozen=True)
class LimitEstimate:
    """Exact-continuation estimate of a run's limit point.

    The terminal point stands in for the true limit; bound checks add a
    cushion of twice the terminal residual to absorb the gap.
    """

    x_inf: np.ndarray
    residual: float
    steps: int

    @property
    def cushion(self) -> float:
        return 2.0 * self.residual


def estimate_limit(problem: Problem, schedule: ControlSchedule, x_start,
                   k_start: int, tol: float = LIMIT_RESIDUAL,
                   cap: int = LIMIT_CAP) -> LimitEstimate:
    """Continue exactly from x_start (plans from k_start) until residual <= tol."""
    x = as_point(x_start, dim=problem.dim).copy()
    k = k_start
    res = problem.max_residual(x)
    steps = 0
    while res > tol:
        if steps >= cap:
            raise EngineError(
                f"limit estimation did not reach residual {tol:.1e} within {cap} steps "
                f"(currently {res:.3e})"
            )
        x = apply_operator(problem, schedule.plan(k), x)
        k += 1
        steps += 1
        res = problem.max_residual(x)
    return LimitEstimate(x_inf=x, residual=float(res), steps=steps)


# Fejer monitoring -----------------------------------------------------------


@dataclass
class FejerViolation:
    k_from: int
    k_to: int
    witness_index: int
    slack: float


@dataclass
class FejerReport:
    violations: list[FejerViolation]
    worst_slack: float
    passed: bool


def fejer_monitor(problem: Problem, trace: Trace, witnesses) -> FejerReport:
    """Check ||x^{k+1} - z|| <= ||x^k - z|| over the recorded iterates.

    In perturbed/superiorized modes the inequality is relaxed by the
    summed inexactness envelope between the two recorded indices.  Works
    on any record_every because the monotone inequality telescopes.
    """
    W = [as_point(w, dim=problem.dim, what="witness") for w in witnesses]
    for w in W:
        problem.check_member(w, 1e-8)
    violations = []
    worst = np.inf
    ks = trace.recorded_ks
    for a, b in zip(range(len(ks) - 1), range(1, len(ks))):
        ka, kb = int(ks[a]), int(ks[b])
        envelope = sum(trace.step_envelope(j) for j in range(ka, kb))
        for wi, w in enumerate(W):
            da = np.linalg.norm(trace.iterates[a] - w)
            db = np.linalg.norm(trace.iterates[b] - w)
            tol = 1e-9 * (1.0 + da)
            slack = da + envelope + tol - db
            worst = min(worst, slack)
            if slack < 0:
                violations.append(FejerViolation(ka, kb, wi, float(slack)))
    if not np.isfinite(worst):
        worst = 0.0
    return FejerReport(violations=violations, worst_slack=float(worst),
                       passed=not violations)


# Restart analysis -----------------------------------------------------------


@dataclass(eq=False)
class RestartAnalysis:
    """Exact continuation from a recorded iterate of an inexact run.

    ``exact_iterates[j]`` is x_i^{i+j} (so index 0 is x^i itself); the
    continuation always runs in exact mode regardless of the outer mode.
    ``deviations`` compares the outer run with the continuation over the
    overlap, and ``deviation_bounds`` holds the partial sums
    sum_{j=i}^{k-1} e_j they must respect.
    """

    restart_index: int
    exact_ks: np.ndarray             # i, i+1, ..., i+L
    exact_iterates: np.ndarray       # (L+1, n)
    x_i_inf: np.ndarray
    terminal_residual: float
    tail_sum: float                  # sum_{j >= i} e_j
    overlap_ks: np.ndarray           # outer indices where both trajectories exist
    deviations: np.ndarray           # ||x^k - x_i^k|| over the overlap
    deviation_bounds: np.ndarray     # sum_{j=i}^{k-1} e_j over the overlap

    @property
    def deviation_slacks(self) -> np.ndarray:
        return self.deviation_bounds - self.deviations

    @property
    def deviation_ok(self) -> bool:
        return bool(np.all(self.deviation_slacks >= -1e-10))

    def dist_to_limit(self, k: int) -> float:
        """||x_i^k - x_i^inf|| for an absolute index k >= i."""
        j = k - self.restart_index
        if not 0 <= j < len(self.exact_iterates):
            raise EngineError(f"continuation does not cover index {k}")
        return float(np.linalg.norm(self.exact_iterates[j] - self.x_i_inf))

    def iterate(self, k: int) -> np.ndarray:
        j = k - self.restart_index
        if not 0 <= j < len(self.exact_iterates):
            raise EngineError(f"continuation does not cover index {k}")
        return self.exact_iterates[j]


def _tail_sum_for(trace: Trace, pert: PerturbationSchedule | None, i: int) -> float:
    """sum_{j >= i} e_j for the realized inexact trajectory.

    Perturbed runs use the declared schedule (an upper envelope of what
    was applied); superiorized runs use the recorded beta_k ||v^k|| values,
    which are exactly the inexactness of the realized sequence (steps past
    the end of the run are exact, contributing zero).
    """
    if trace.mode == "perturbed":
        if pert is None:
            return 0.0
        return pert.tail_sum(i)
    if trace.mode == "superiorized":
        return float(np.sum(trace.beta_v[i:]))
    return 0.0


def _partial_sum_for(trace: Trace, pert: PerturbationSchedule | None,
                     i: int, k: int) -> float:
    if trace.mode == "perturbed":
        if pert is None:
            return 0.0
        return pert.partial_sum(i, min(k, trace.iterations_used))
    if trace.mode == "superiorized":
        return float(np.sum(trace.beta_v[i:k]))
    return 0.0


def restart_analysis(problem: Problem, schedule: ControlSchedule, outer_trace: Trace,
                     i: int, inner_iters: int,
                     pert: PerturbationSchedule | None = None) -> RestartAnalysis:
    """Exact continuation x_i^k from the recorded iterate x^i.

    The continuation covers k = i .. i + inner_iters; its terminal point
    estimates the limit x_i^inf once the residual is below 1e-12 (the
    terminal residual is reported so callers can widen tolerances).
    """
    if outer_trace.mode not in ("perturbed", "superiorized"):
        raise EngineError("restart analysis applies to perturbed or superiorized runs")
    x_i = outer_trace.iterate_at(i)

    K = outer_trace.iterations_used
    L = max(inner_iters, K - i)
    xs = [x_i.copy()]
    x = x_i.copy()
    for k in range(i, i + L):
        x = apply_operator(problem, schedule.plan(k), x)
        xs.append(x.copy())
    exact_iterates = np.array(xs)
    terminal_residual = problem.max_residual(x)
    if terminal_residual > LIMIT_RESIDUAL:
        extra = estimate_limit(problem, schedule, x, i + L)
        x_i_inf = extra.x_inf
        terminal_residual = extra.residual
    else:
        x_i_inf = x.copy()

    overlap = np.arange(i, K + 1)
    deviations = np.array([
        float(np.linalg.norm(outer_trace.iterate_at(k) - exact_iterates[k - i]))
        for k in overlap
    ])
    bounds = np.array([_partial_sum_for(outer_trace, pert, i, k) for k in overlap])

    return RestartAnalysis(
        restart_index=i,
        exact_ks=np.arange(i, i + L + 1),
        exact_iterates=exact_iterates,
        x_i_inf=x_i_inf,
        terminal_residual=float(terminal_residual),
        tail_sum=_tail_sum_for(outer_trace, pert, i),
        overlap_ks=overlap,
        deviations=deviations,
        deviation_bounds=bounds,
    )


# Rate checks against restarts ----------------------------------------------


@dataclass
class RateCheckEntry:
    i: int
    k: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class RateCheckReport:
    entries: list[RateCheckEntry]
    worst_slack: float
    passed: bool


def strong_rate_check(outer_trace: Trace, analyses, x_inf: np.ndarray,
                      cushion: float = 0.0) -> RateCheckReport:
    """||x^{k+1} - x^inf|| <= ||x_i^{k+1} - x_i^inf|| + 2 sum_{j>=i} e_j."""
    entries = []
    K = outer_trace.iterations_used
    for a in analyses:
        for k in range(a.restart_index, K):
            lhs = float(np.linalg.norm(outer_trace.iterate_at(k + 1) - x_inf))
            rhs = a.dist_to_limit(k + 1) + 2.0 * a.tail_sum
            entries.append(RateCheckEntry(a.restart_index, k, lhs, rhs))
    return _finish_rate_report(entries, outer_trace, cushion)


def weak_rate_check(outer_trace: Trace, analysis: RestartAnalysis, functionals,
                    x_inf: np.ndarray, x_inf_residual: float = 0.0) -> RateCheckReport:
    """|<y, x^{k+1} - x^inf>| <= |<y, x_i^{k+1} - x_i^inf>| + 2||y|| sum e.

    Requires a converged outer limit estimate; the inequality is checked
    for every supplied functional y over the overlap range.
    """
    if x_inf_residual > LIMIT_RESIDUAL:
        raise EngineError(
            f"outer run limit estimate has residual {x_inf_residual:.3e} > {LIMIT_RESIDUAL:.1e}; "
            "cannot audit the inner-product rate"
        )
    ys = [np.asarray(y, dtype=float) for y in functionals]
    entries = []
    K = outer_trace.iterations_used
    i = analysis.restart_index
    for y in ys:
        ny = float(np.linalg.norm(y))
        for k in range(i, K):
            xk1 = outer_trace.iterate_at(k + 1)
            lhs = abs(float(y @ (xk1 - x_inf)))
            rhs = abs(float(y @ (analysis.iterate(k + 1) - analysis.x_i_inf))) \
                + 2.0 * ny * analysis.tail_sum
            entries.append(RateCheckEntry(i, k, lhs, rhs))
    return _finish_rate_report(entries, outer_trace, cushion=0.0, rel=1e-8)


def _finish_rate_report(entries, trace: Trace, cushion: float, rel: float = 1e-8) -> RateCheckReport:
    scale = 1.0 + float(np.linalg.norm(trace.x0))
    tol = rel * scale + cushion
    worst = min((e.slack for e in entries), default=0.0)
    passed = all(e.slack >= -tol for e in entries)
    return RateCheckReport(entries=entries, worst_slack=float(worst), passed=passed)


# Superiorization report ------------------------------------------------------


@dataclass
class SuperiorizationReport:
    """Side-by-side audit of a superiorized run against its exact twin.

    The objective gap is reported, never asserted: the theory guarantees
    feasibility of the steered limit, not superiority.
    """

    phi_superiorized: float
    phi_exact: float
    residual_superiorized: float
    residual_exact: float
    x_inf_superiorized: np.ndarray
    x_inf_exact: np.ndarray
    rate_band: RateCheckReport | None
    enlarged_band: RateCheckReport | None
    i_epsilon: int | None

    @property
    def phi_gap(self) -> float:
        return self.phi_superiorized - self.phi_exact


def superiorization_report(problem: Problem, schedule: ControlSchedule,
                           steer: SteeringSpec, trace_super: Trace, trace_exact: Trace,
                           rate=None, restart_indices=None,
                           epsilon: float | None = None,
                           oracle_tol: float = 1e-12) -> SuperiorizationReport:
    """Compare limits and audit the rate bands of a superiorized run.

    ``rate`` is a RateConstants bundle (q and the schedule parameters); it
    supplies q_i := q and c_i := 2 d(x^i, C) / q^{s-1} for the linear-rate
    band ||x^{k+1} - x^inf|| <= c_i q^{k-i} + 2 sum_{j>=i} beta_j ||v^j||.
    With epsilon set, the distance to the enlarged intersection is checked
    to drop below c_i q^{k-i} alone once the inexactness tail has shrunk
    past epsilon/2 (restart indices at or beyond i_epsilon).
    """
    from .intersection import distance_intersection

    if trace_super.mode != "superiorized" or trace_exact.mode != "exact":
        raise EngineError("expected a superiorized trace and an exact trace")
    if not np.array_equal(trace_super.x0, trace_exact.x0):
        raise EngineError("traces start from different points")

    lim_s = estimate_limit(problem, schedule, trace_super.x_final,
                           trace_super.iterations_used)
    lim_e = estimate_limit(problem, schedule, trace_exact.x_final,
                           trace_exact.iterations_used)

    rate_band = None
    enlarged_band = None
    i_eps = None
    if rate is not None and restart_indices:
        K = trace_super.iterations_used
        entries = []
        consts = {}
        for i in restart_indices:
            d_i = distance_intersection(problem, trace_super.iterate_at(i), oracle_tol)
            c_i = 2.0 * d_i / rate.q_r ** (rate.s - 1)
            consts[i] = c_i
            tail = float(np.sum(trace_super.beta_v[i:]))
            for k in range(i, K):
                lhs = float(np.linalg.norm(trace_super.iterate_at(k + 1) - lim_s.x_inf))
                rhs = c_i * rate.q_r ** (k - i) + 2.0 * tail
                entries.append(RateCheckEntry(i, k, lhs, rhs))
        rate_band = _finish_rate_report(entries, trace_super, cushion=lim_s.cushion)

        if epsilon is not None:
            tails = np.array([float(np.sum(trace_super.beta_v[i:])) for i in range(K + 1)])
            eligible = np.nonzero(2.0 * tails <= epsilon)[0]
            i_eps = int(eligible[0]) if eligible.size else None
            e_entries = []
            if i_eps is not None:
                for i in restart_indices:
                    if i < i_eps:
                        continue
                    c_i = consts[i]
                    for k in range(i, K):
                        d_C = distance_intersection(problem, trace_super.iterate_at(k + 1),
                                                    oracle_tol)
                        lhs = max(d_C - epsilon, 0.0)
                        rhs = c_i * rate.q_r ** (k - i)
                        e_entries.append(RateCheckEntry(i, k, lhs, rhs))
            enlarged_band = _finish_rate_report(e_entries, trace_super, cushion=lim_s.cushion)

    return SuperiorizationReport(
        phi_superiorized=steer.objective.value(lim_s.x_inf),
        phi_exact=steer.objective.value(lim_e.x_inf),
        residual_superiorized=float(problem.max_residual(lim_s.x_inf)),
        residual_exact=float(problem.max_residual(lim_e.x_inf)),
        x_inf_superiorized=lim_s.x_inf,
        x_inf_exact=lim_e.x_inf,
        rate_band=rate_band,
        enlarged_band=enlarged_band,
        i_epsilon=i_eps,
    )
