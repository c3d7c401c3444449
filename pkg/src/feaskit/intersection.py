"""Nearest-point oracle for the intersection of a set family.

The general path is Dykstra's cyclic correction scheme, which converges to
the exact nearest point of the intersection (plain alternating projections
only find *a* point of it).  Two exact fast paths avoid iteration entirely:

* all sets are affine/linear subspaces: the intersection is itself an
  affine subspace, assembled once from a stacked nullspace;
* all sets are half-spaces/hyperplanes in dimension <= 3: the nearest
  point of the polyhedron is found by enumerating active constraint sets.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .exceptions import OracleConvergenceError
from .problem import Problem
from .sets import AffineSubspace, HalfSpace, Hyperplane, as_point

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 10**5

_ACTIVE_SET_MAX_DIM = 3
_ACTIVE_SET_MAX_SETS = 12


def _affine_projector(problem: Problem):
    """(x_particular, nullspace basis N) describing the intersection subspace."""
    n = problem.dim
    blocks = []
    rhs = []
    for s in problem.sets:
        K = np.eye(n) - s.basis @ s.basis.T
        blocks.append(K)
        rhs.append(K @ s.anchor)
    K = np.vstack(blocks)
    r = np.concatenate(rhs)
    xp, *_ = np.linalg.lstsq(K, r, rcond=None)
    _, sv, Vt = np.linalg.svd(K)
    tol = max(K.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    N = Vt[rank:].T  # (n, n - rank), orthonormal columns
    return xp, N


def _project_affine_many(problem: Problem, X: np.ndarray) -> np.ndarray:
    xp, N = _affine_projector(problem)
    return xp + (X - xp) @ N @ N.T


def _project_polyhedron_many(problem: Problem, X: np.ndarray, tol: float) -> np.ndarray:
    """Exact projection onto an intersection of half-spaces/hyperplanes.

    Enumerates active subsets of inequality constraints (equalities are
    always active) and keeps the feasible candidate closest to each x.
    Exact for any polyhedron; practical only at desk scale.
    """
    A_eq, b_eq, A_in, b_in = [], [], [], []
    for s in problem.sets:
        if isinstance(s, Hyperplane):
            A_eq.append(s.normal)
            b_eq.append(s.offset)
        else:
            A_in.append(s.normal)
            b_in.append(s.offset)
    A_eq = np.array(A_eq).reshape(-1, problem.dim)
    b_eq = np.array(b_eq)
    n_in = len(A_in)
    A_in = np.array(A_in).reshape(-1, problem.dim)
    b_in = np.array(b_in)

    out = np.empty_like(X)
    feas_tol = 1e-9
    for row, x in enumerate(X):
        best = None
        best_d = np.inf
        max_active = problem.dim - A_eq.shape[0]
        for k in range(max(0, max_active) + 1):
            for S in combinations(range(n_in), k):
                A = np.vstack([A_eq, A_in[list(S)]]) if (A_eq.size or S) else np.zeros((0, problem.dim))
                b = np.concatenate([b_eq, b_in[list(S)]])
                if A.shape[0] == 0:
                    z = x.copy()
                else:
                    # nearest point with A z = b: x - A^+ (A x - b)
                    z = x - np.linalg.pinv(A) @ (A @ x - b)
                    if np.linalg.norm(A @ z - b) > feas_tol * (1.0 + np.linalg.norm(b)):
                        continue  # inconsistent active set
                scale = feas_tol * (1.0 + np.linalg.norm(z))
                if A_in.size and np.any(A_in @ z - b_in > scale):
                    continue
                if A_eq.size and np.any(np.abs(A_eq @ z - b_eq) > scale):
                    continue
                d = np.linalg.norm(x - z)
                if d < best_d:
                    best, best_d = z, d
        if best is None:
            raise OracleConvergenceError("no feasible candidate found; is the problem feasible?")
        out[row] = best
    return out


def _dykstra_many(problem: Problem, X0: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    X = X0.copy()
    M = problem.num_sets
    R = np.zeros((M,) + X.shape)
    delta = np.inf
    for _ in range(max_sweeps):
        X_prev = X.copy()
        for i, s in enumerate(problem.sets):
            Y = X + R[i]
            Xn = s._project(Y)
            R[i] = Y - Xn
            X = Xn
        delta = float(np.max(np.linalg.norm(X - X_prev, axis=1)))
        if delta <= tol and float(np.max(problem.max_residual_many(X))) <= tol:
            return X
    worst = float(np.max(problem.max_residual_many(X)))
    raise OracleConvergenceError(
        f"intersection projection did not converge in {max_sweeps} sweeps "
        f"(last change {delta:.3e}, residual {worst:.3e})",
        best=X,
        residual=worst,
    )


def project_intersection_many(
    problem: Problem, X, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS
) -> np.ndarray:
    """Nearest points of the intersection for a batch of query points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if all(isinstance(s, AffineSubspace) for s in problem.sets):
        return _project_affine_many(problem, X)
    if (
        problem.dim <= _ACTIVE_SET_MAX_DIM
        and problem.num_sets <= _ACTIVE_SET_MAX_SETS
        and all(isinstance(s, (HalfSpace, Hyperplane)) for s in problem.sets)
    ):
        return _project_polyhedron_many(problem, X, tol)
    return _dykstra_many(problem, X, tol, max_sweeps)


def project_intersection(problem: Problem, x, tol: float = DEFAULT_TOL,
                         max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Nearest point of C = C_1 ∩ ... ∩ C_M to x, to the requested tolerance."""
    xp = as_point(x, dim=problem.dim)
    return project_intersection_many(problem, xp[None, :], tol, max_sweeps)[0]


def distance_intersection(problem: Problem, x, tol: float = DEFAULT_TOL) -> float:
    """d(x, C) via the nearest-point oracle."""
    xp = as_point(x, dim=problem.dim)
    return float(np.linalg.norm(xp - project_intersection(problem, xp, tol)))


def distance_intersection_many(problem: Problem, X, tol: float = DEFAULT_TOL) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P = project_intersection_many(problem, X, tol)
    return np.linalg.norm(X - P, axis=1)
