"""Closed convex sets with exact metric projections.

Every descriptor in the catalog has a closed-form nearest-point map, so
projection, distance and membership queries are exact up to floating point.
The nearest point y of x onto a set C is characterized by y in C and
<x - y, z - y> <= 0 for all z in C; the test suite checks this
characterization directly against sampled set members.

All descriptors are immutable and all operations are pure functions, so
they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    InvalidSetError,
    NonFiniteInputError,
)

# Membership checks are relative to (1 + ||x||); construction-time
# orthonormality of subspace bases is enforced to ORTHONORMAL_TOL.
MEMBERSHIP_RTOL = 1e-10
ORTHONORMAL_TOL = 1e-10


def as_point(x, dim: int | None = None, what: str = "point") -> np.ndarray:
    """Convert array-like input to a finite 1-D float vector."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidSetError(f"{what} must be a nonempty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"{what} contains non-finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(dim, arr.size, what)
    return arr


def _as_batch(X, dim: int) -> tuple[np.ndarray, bool]:
    """Return (2-D batch view, was_single_point)."""
    arr = np.asarray(X, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidSetError(f"expected a point or batch of points, got shape {arr.shape}")
    if arr.shape[1] != dim:
        raise DimensionMismatchError(dim, arr.shape[1])
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("input contains non-finite entries")
    return arr, single


class ConvexSet:
    """Base class for the set catalog.  Subclasses implement ``_project``."""

    dim: int

    def _project(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        X, single = _as_batch(x, self.dim)
        Y = self._project(X)
        return Y[0] if single else Y

    def distance(self, x) -> float:
        X, single = _as_batch(x, self.dim)
        d = np.linalg.norm(X - self._project(X), axis=1)
        return float(d[0]) if single else d

    def contains(self, x, tol: float = 0.0) -> bool:
        if tol < 0:
            raise InvalidSetError(f"tolerance must be nonnegative, got {tol}")
        return bool(self.distance(x) <= tol)


@dataclass(frozen=True, eq=False)
class HalfSpace(ConvexSet):
    """{x : <a, x> <= b} with a != 0."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_point(self.normal, what="half-space normal")
        if np.linalg.norm(a) == 0.0:
            raise InvalidSetError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def _project(self, X):
        a = self.normal
        nn = float(a @ a)
        viol = np.maximum(X @ a - self.offset, 0.0)
        return X - np.outer(viol / nn, a)

    def distance(self, x):
        X, single = _as_batch(x, self.dim)
        d = np.maximum(X @ self.normal - self.offset, 0.0) / np.linalg.norm(self.normal)
        return float(d[0]) if single else d


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """{x : <a, x> = b} with a != 0."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_point(self.normal, what="hyperplane normal")
        if np.linalg.norm(a) == 0.0:
            raise InvalidSetError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def _project(self, X):
        a = self.normal
        nn = float(a @ a)
        return X - np.outer((X @ a - self.offset) / nn, a)

    def distance(self, x):
        X, single = _as_batch(x, self.dim)
        d = np.abs(X @ self.normal - self.offset) / np.linalg.norm(self.normal)
        return float(d[0]) if single else d


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box {x : lower <= x <= upper}.  lower == upper is allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower, what="box lower corner")
        hi = as_point(self.upper, dim=lo.size, what="box upper corner")
        if np.any(lo > hi):
            raise InvalidSetError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def _project(self, X):
        return np.clip(X, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Euclidean ball of given center and radius (radius 0 = singleton)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_point(self.center, what="ball center")
        r = float(self.radius)
        if not np.isfinite(r) or r < 0:
            raise InvalidSetError(f"ball radius must be a nonnegative real, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def _project(self, X):
        D = X - self.center
        norms = np.linalg.norm(D, axis=1)
        inside = norms <= self.radius
        # avoid 0/0 for points at the center of a radius-0 ball
        safe = np.where(norms > 0.0, norms, 1.0)
        Y = self.center + D * (self.radius / safe)[:, None]
        Y[inside] = X[inside]
        return Y

    def distance(self, x):
        X, single = _as_batch(x, self.dim)
        d = np.maximum(np.linalg.norm(X - self.center, axis=1) - self.radius, 0.0)
        return float(d[0]) if single else d


def _orthonormalize(vectors, dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the given vectors.

    Uses an SVD so that linearly dependent inputs are reduced to a true
    basis; the result satisfies ||U^T U - I|| <= ORTHONORMAL_TOL.
    """
    rows = [as_point(v, dim=dim, what="basis vector") for v in vectors]
    if not rows:
        return np.zeros((dim, 0))
    A = np.stack(rows, axis=1)  # (dim, k)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > max(A.shape) * np.finfo(float).eps * s[0])) if s.size else 0
    return U[:, :rank]


@dataclass(frozen=True, eq=False)
class AffineSubspace(ConvexSet):
    """anchor + span(basis), stored with an orthonormal basis.

    ``basis`` may be any spanning family; it is orthonormalized on
    construction.  An empty basis gives the singleton {anchor}.
    """

    basis: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        p = as_point(self.anchor, what="affine anchor")
        U = _orthonormalize(self.basis, p.size)
        G = U.T @ U - np.eye(U.shape[1])
        if U.shape[1] and np.max(np.abs(G)) > ORTHONORMAL_TOL:
            raise InvalidSetError("basis orthonormalization failed")
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "anchor", p)

    @property
    def dim(self) -> int:
        return self.anchor.size

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    def _project(self, X):
        Z = X - self.anchor
        return self.anchor + (Z @ self.basis) @ self.basis.T


@dataclass(frozen=True, eq=False)
class LinearSubspace(AffineSubspace):
    """span(basis): an affine subspace anchored at the origin."""

    def __init__(self, basis):
        rows = [as_point(v, what="basis vector") for v in np.atleast_2d(np.asarray(basis, dtype=float))]
        dim = rows[0].size if rows else 0
        if dim == 0:
            raise InvalidSetError("linear subspace needs at least one basis vector")
        super().__init__(basis=rows, anchor=np.zeros(dim))


# Module-level operation surface ------------------------------------------


def project(set_: ConvexSet, x) -> np.ndarray:
    """Nearest point of ``set_`` to ``x``."""
    return set_.project(x)


def distance(set_: ConvexSet, x) -> float:
    """Euclidean distance from ``x`` to ``set_`` (zero iff member)."""
    return set_.distance(x)


def contains(set_: ConvexSet, x, tol: float) -> bool:
    """True iff distance(set_, x) <= tol."""
    return set_.contains(x, tol)


def project_enlarged(set_: ConvexSet, x, eps: float) -> np.ndarray:
    """Project onto the eps-enlargement {y : d(y, C) <= eps}.

    Points already within distance eps are returned unchanged; otherwise
    the result is the convex combination
    (1 - eps/d) P_C x + (eps/d) x with d = ||x - P_C x||, which realizes
    d(x, C) = d(x, C_eps) + eps.
    """
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0:
        raise InvalidSetError(f"enlargement radius must be nonnegative, got {eps}")
    xp = as_point(x, dim=set_.dim)
    d = set_.distance(xp)
    if d <= eps:
        return xp.copy()
    p = set_.project(xp)
    t = eps / d
    return (1.0 - t) * p + t * xp
