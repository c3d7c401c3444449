"""Feasibility instances: an indexed family of closed convex sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, InfeasibleWitnessError, InvalidSetError
from .sets import ConvexSet, as_point

WITNESS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Problem:
    """A family C_1, ..., C_M whose intersection C is assumed nonempty.

    Sets are indexed 1..M throughout the public API (strings refer to
    them by these indices).  If a witness point is supplied it is checked
    against every set, which turns the nonempty-intersection assumption
    into a verified fact for that instance.
    """

    sets: tuple[ConvexSet, ...]
    witness: np.ndarray | None = None

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise InvalidSetError("a problem needs at least one set")
        dim = sets[0].dim
        for i, s in enumerate(sets):
            if s.dim != dim:
                raise DimensionMismatchError(dim, s.dim, what=f"set {i + 1}")
        object.__setattr__(self, "sets", sets)
        if self.witness is not None:
            w = as_point(self.witness, dim=dim, what="witness")
            res = self.residuals(w)
            worst = int(np.argmax(res))
            if res[worst] > WITNESS_TOL:
                raise InfeasibleWitnessError(worst + 1, float(res[worst]))
            object.__setattr__(self, "witness", w)

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    @property
    def num_sets(self) -> int:
        return len(self.sets)

    def set_at(self, index: int) -> ConvexSet:
        """Set for a 1-based index."""
        if not 1 <= index <= len(self.sets):
            raise IndexError(f"set index {index} out of range [1, {len(self.sets)}]")
        return self.sets[index - 1]

    def residuals(self, x) -> np.ndarray:
        """Distances of x to every set, as an (M,) array."""
        return np.array([s.distance(x) for s in self.sets])

    def max_residual(self, x) -> float:
        """max_i d(x, C_i): the proximity function driving every stopping rule."""
        return float(np.max(self.residuals(x)))

    def residuals_many(self, X) -> np.ndarray:
        """Distances of a batch (N, n) to every set, as an (N, M) array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([s.distance(X) for s in self.sets], axis=1)

    def max_residual_many(self, X) -> np.ndarray:
        return np.max(self.residuals_many(X), axis=1)

    def is_feasible(self, x, tol: float = WITNESS_TOL) -> bool:
        return self.max_residual(x) <= tol

    def check_member(self, x, tol: float = WITNESS_TOL) -> None:
        """Raise InfeasibleWitnessError naming the worst set if x is not in C."""
        res = self.residuals(x)
        worst = int(np.argmax(res))
        if res[worst] > tol:
            raise InfeasibleWitnessError(worst + 1, float(res[worst]))
