"""Linear regularity estimation, subspace angles and rate constants.

Linear regularity of a family over a region S is the inequality
d(x, C) <= kappa * max_i d(x, C_i) for x in S; the constant kappa feeds
the linear convergence rate

    q = (1 - omega / (2 m s kappa^2)) ** (1 / (2 s)),
    c = 2 d(x0, C) / q**(s - 1),

so that ||x^k - x^inf|| <= c q^k and the two-sided residual band

    (1 / 2 kappa) ||x^k - x^inf|| <= max_i d(x^k, C_i) <= c q^k

holds along exact runs.  For families of linear subspaces kappa is tied
to the Friedrichs angle between them, which this module computes as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import RateCheckEntry, Trace
from .exceptions import EngineError, InvalidSetError

# the intersection oracle is part of this module's public surface
from .intersection import (  # noqa: F401
    distance_intersection,
    distance_intersection_many,
    project_intersection,
    project_intersection_many,
)
from .problem import Problem
from .sets import Ball, LinearSubspace

KAPPA_INFLATION = 1.0 / 0.95  # sampled kappa is a lower bound; inflate before use


# Rate constants --------------------------------------------------------------


@dataclass(frozen=True)
class RateConstants:
    """(c_r, q_r) bundle for a schedule with parameters (omega, m, s, kappa)."""

    omega: float
    m: int
    s: int
    kappa: float
    d0: float
    q_r: float
    c_r: float


def rate_constants(omega: float, m: int, s: int, kappa: float, d0: float) -> RateConstants:
    """Exact rate constants q = (1 - omega/(2 m s kappa^2))^(1/2s), c = 2 d0 / q^(s-1)."""
    if not 0.0 < omega <= 1.0:
        raise InvalidSetError(f"omega must lie in (0, 1], got {omega}")
    if m < 1 or s < 1:
        raise InvalidSetError("m and s must be positive integers")
    if kappa < 1.0:
        raise InvalidSetError(f"kappa must be >= 1, got {kappa}")
    if d0 < 0.0:
        raise InvalidSetError("d0 must be nonnegative")
    base = 1.0 - omega / (2.0 * m * s * kappa * kappa)
    q = base ** (1.0 / (2.0 * s))
    c = 2.0 * d0 / q ** (s - 1)
    return RateConstants(omega=omega, m=m, s=s, kappa=kappa, d0=d0, q_r=q, c_r=c)


# Regularity estimation --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegularityEstimate:
    """Sampled lower bound on kappa over a ball region.

    kappa_hat = max over samples of d(x, C) / max_i d(x, C_i); samples
    already in every set are excluded.  The true constant can only be
    larger, so consumers inflate before plugging it into bounds.
    """

    kappa_hat: float
    region: Ball
    n_samples: int
    max_ratio_witness: np.ndarray | None

    @property
    def kappa_inflated(self) -> float:
        return self.kappa_hat * KAPPA_INFLATION


def _ball_samples(seed: int, n: int, center: np.ndarray, radius: float) -> np.ndarray:
    """Uniform draws from a ball, prefix-stable in n for a fixed seed."""
    rng = np.random.default_rng(seed)
    dim = center.size
    out = np.empty((n, dim))
    for i in range(n):
        g = rng.standard_normal(dim)
        u = rng.random()
        nrm = np.linalg.norm(g)
        d = g / nrm if nrm > 0 else np.eye(dim)[0]
        out[i] = center + radius * u ** (1.0 / dim) * d
    return out


def estimate_kappa(problem: Problem, region: Ball, n_samples: int, seed: int,
                   workers: int = 1, oracle_tol: float = 1e-12) -> RegularityEstimate:
    """Sample the regularity ratio over a ball.

    Returns kappa_hat >= 1 with the witness attaining the maximum ratio;
    the estimate is 1 (vacuous) if every sample already lies in the
    intersection.  The sample stream depends only on the seed, so the
    estimate is monotone in n_samples and independent of worker count.
    """
    if n_samples < 1:
        raise InvalidSetError("n_samples must be >= 1")
    X = _ball_samples(seed, n_samples, region.center, region.radius)
    single = problem.residuals_many(X)
    max_single = np.max(single, axis=1)
    active = max_single > 1e-12
    if not np.any(active):
        return RegularityEstimate(1.0, region, n_samples, None)

    Xa = X[active]
    if workers > 1:
        chunks = np.array_split(np.arange(len(Xa)), workers)
        dists = np.empty(len(Xa))
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = {
                ex.submit(distance_intersection_many, problem, Xa[idx], oracle_tol): idx
                for idx in chunks if idx.size
            }
            for fut, idx in futs.items():
                dists[idx] = fut.result()
    else:
        dists = distance_intersection_many(problem, Xa, oracle_tol)

    ratios = dists / max_single[active]
    best = int(np.argmax(ratios))
    kappa_hat = max(1.0, float(ratios[best]))
    return RegularityEstimate(kappa_hat, region, n_samples, Xa[best].copy())


# Friedrichs angle --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AngleReport:
    cosine: float
    theta: float
    method: str                       # "exact-two-subspaces" | "sampled-M-subspaces"
    n_samples: int = 0
    bounds: tuple[float, float] | None = None


def _intersection_basis(subspaces) -> np.ndarray:
    n = subspaces[0].dim
    K = np.vstack([np.eye(n) - s.basis @ s.basis.T for s in subspaces])
    _, sv, Vt = np.linalg.svd(K)
    tol = max(K.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    return Vt[rank:].T


def _component_basis(U: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(U) ∩ span(B)^perp."""
    comp = U - B @ (B.T @ U) if B.size else U
    if comp.size == 0:
        return comp.reshape(U.shape[0], 0)
    Q, sv, _ = np.linalg.svd(comp, full_matrices=False)
    tol = max(comp.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    return Q[:, :rank]


def friedrichs_cosine(subspaces, n_samples: int = 10**5, seed: int = 0,
                      refine_iters: int = 500, kappa: float | None = None) -> AngleReport:
    """Extended cosine of the angle between linear subspaces.

    Writing A_i = C_i ∩ C^perp, the cosine of the generalized angle is

        sup (1/(M-1)) * sum_{i != j} <x_i, x_j> / sum_i ||x_i||^2

    over tuples x_i in A_i not all zero.  For M = 2 this is computed
    exactly as the largest principal-angle cosine between A_1 and A_2.
    For M > 2 a seeded random search over tuples is refined locally by
    power iteration on the stacked quotient, and the result is reported
    as a lower bound with its sample count.  When A_i components are all
    trivial (identical subspaces) the supremum ranges over an empty set
    and the cosine is 0 by convention.
    """
    subs = tuple(subspaces)
    if len(subs) < 2:
        raise InvalidSetError("need at least two subspaces")
    if not all(isinstance(s, LinearSubspace) for s in subs):
        raise InvalidSetError("angle computation requires linear subspaces")
    M = len(subs)
    B = _intersection_basis(subs)
    comps = [_component_basis(s.basis, B) for s in subs]
    bounds = None if kappa is None else cos_kappa_bounds(kappa, M)

    if all(c.shape[1] == 0 for c in comps):
        return AngleReport(0.0, np.pi / 2, "exact-two-subspaces" if M == 2 else
                           "sampled-M-subspaces", 0, bounds)

    if M == 2:
        A1, A2 = comps
        if A1.shape[1] == 0 or A2.shape[1] == 0:
            c = 0.0
        else:
            sv = np.linalg.svd(A1.T @ A2, compute_uv=False)
            c = float(np.clip(sv[0] if sv.size else 0.0, 0.0, 1.0))
        return AngleReport(c, float(np.arccos(c)), "exact-two-subspaces", 0, bounds)

    # stacked coordinates: x_i = comps[i] @ c_i; the quotient becomes
    # ((||G c||^2 - ||c||^2) / ||c||^2) / (M - 1) with G = [A_1 ... A_M]
    G = np.hstack([c for c in comps if c.shape[1]])
    dims = [c.shape[1] for c in comps]
    total = sum(dims)
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n_samples, total))
    GC = C @ G.T
    quot = (np.sum(GC * GC, axis=1) - np.sum(C * C, axis=1)) / np.sum(C * C, axis=1)
    best = C[int(np.argmax(quot))].copy()

    H = G.T @ G
    v = best / np.linalg.norm(best)
    for _ in range(refine_iters):
        w = H @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    lam = float(v @ H @ v)
    c = float(np.clip((lam - 1.0) / (M - 1), 0.0, 1.0))
    return AngleReport(c, float(np.arccos(c)), "sampled-M-subspaces", n_samples, bounds)


def cos_kappa_bounds(kappa: float, M: int) -> tuple[float, float]:
    """Interval bracketing cos(theta) in terms of the regularity constant:

        1 - 2M/((M-1) kappa) <= cos(theta) <= 1 - 1/((M-1) kappa^2).
    """
    if kappa < 1.0:
        raise InvalidSetError(f"kappa must be >= 1, got {kappa}")
    if M < 2:
        raise InvalidSetError("bounds need at least two sets")
    lower = 1.0 - 2.0 * M / ((M - 1) * kappa)
    upper = 1.0 - 1.0 / ((M - 1) * kappa * kappa)
    return lower, upper


def rate_from_angle(cos_theta: float, omega: float, m: int, s: int) -> float:
    """Angle-based overestimate of the linear rate:

        q <= (1 - (omega / (2 m s)) * ((1 - cos theta) / 4)^2) ** (1 / (2 s)).

    For the one-string cyclic case (omega=1, m=M, s=1) this reduces to
    sqrt(1 - ((1 - cos theta) / (4 M))^2).
    """
    if not 0.0 <= cos_theta < 1.0:
        raise InvalidSetError(
            f"cos(theta) must lie in [0, 1) for a linear rate, got {cos_theta}"
        )
    if not 0.0 < omega <= 1.0 or m < 1 or s < 1:
        raise InvalidSetError("parameters out of domain")
    base = 1.0 - (omega / (2.0 * m * s)) * ((1.0 - cos_theta) / 4.0) ** 2
    return base ** (1.0 / (2.0 * s))


# Error bands ------------------------------------------------------------------


@dataclass
class BandReport:
    entries: list[RateCheckEntry]
    worst_slack: float
    first_violation: tuple[int, int] | None
    passed: bool


def _band_report(entries, tol: float) -> BandReport:
    worst = min((e.slack for e in entries), default=0.0)
    first = None
    for e in entries:
        if e.slack < -tol:
            first = (e.i, e.k)
            break
    return BandReport(entries=entries, worst_slack=float(worst),
                      first_violation=first, passed=first is None)


def error_band_check(trace: Trace, rc: RateConstants, kappa: float,
                     x_inf: np.ndarray, cushion: float = 0.0) -> BandReport:
    """Two-sided residual band along an exact run:

        (1/2 kappa) ||x^k - x^inf|| <= max_i d(x^k, C_i) <= c_r q_r^k.

    The upper side is checked at every step; the lower side at every
    recorded iterate.  kappa must be a valid overestimate of the true
    regularity constant on the region the iterates visit.
    """
    if trace.mode != "exact":
        raise EngineError(
            "error_band_check applies to exact traces; use "
            "perturbed_residual_band_check for inexact runs"
        )
    scale = 1.0 + float(np.linalg.norm(trace.x0))
    tol = 1e-8 * scale + cushion
    entries = []
    for k in range(trace.iterations_used + 1):
        res = float(trace.residual_max[k])
        entries.append(RateCheckEntry(0, k, res, rc.c_r * rc.q_r**k))
    for pos, k in enumerate(trace.recorded_ks):
        res = float(trace.residual_max[int(k)])
        lhs = float(np.linalg.norm(trace.iterates[pos] - x_inf)) / (2.0 * kappa)
        entries.append(RateCheckEntry(1, int(k), lhs, res))
    return _band_report(entries, tol)


def perturbed_residual_band_check(outer_trace: Trace, analyses, kappa: float,
                                  x_inf: np.ndarray, cushion: float = 0.0) -> BandReport:
    """Two-sided residual band for inexact runs, checked at every (i, k):

        (1/2 kappa) ||x^{k+1} - x^inf|| - 2 sum_{j>=i} e_j
            <= max_j d(x^{k+1}, C_j)
            <= ||x_i^{k+1} - x_i^inf|| + 2 sum_{j>=i} e_j,

    with e_j = beta_j ||v^j|| for superiorized runs.
    """
    if outer_trace.mode not in ("perturbed", "superiorized"):
        raise EngineError("perturbed_residual_band_check needs an inexact trace")
    if not analyses:
        raise EngineError("no restart analyses supplied")
    scale = 1.0 + float(np.linalg.norm(outer_trace.x0))
    tol = 1e-8 * scale + cushion
    entries = []
    K = outer_trace.iterations_used
    for a in analyses:
        two_tail = 2.0 * a.tail_sum
        for k in range(a.restart_index, K):
            res = float(outer_trace.residual_max[k + 1])
            lower = float(np.linalg.norm(outer_trace.iterate_at(k + 1) - x_inf)) \
                / (2.0 * kappa) - two_tail
            upper = a.dist_to_limit(k + 1) + two_tail
            entries.append(RateCheckEntry(a.restart_index, k, lower, res))
            entries.append(RateCheckEntry(a.restart_index, k, res, upper))
    return _band_report(entries, tol)
