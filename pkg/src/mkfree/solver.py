"""Direct solution of the constrained system K U = F via dense Cholesky.

The factor is kept in original DOF order (no fill-reducing permutation) so
that reanalysis can address factor columns by DOF index directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cholesky, eigh, solve_triangular

from .assembly import StiffnessSystem
from .errors import RigidBodyError

__all__ = ["CholeskyFactor", "factorize", "solve"]


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L0 with K = L0 L0^T, in DOF order."""

    L0: np.ndarray

    @property
    def n(self) -> int:
        return self.L0.shape[0]

    def apply_inverse(self, rhs: np.ndarray) -> np.ndarray:
        """K^-1 rhs through the two triangular solves."""
        y = solve_triangular(self.L0, rhs, lower=True)
        return solve_triangular(self.L0, y, lower=True, trans="T")


def _near_null_vector(K: np.ndarray) -> np.ndarray | None:
    if K.shape[0] > 2000:
        return None
    try:
        w, v = eigh(K, subset_by_index=[0, 0])
    except LinAlgError:
        return None
    return v[:, 0]


def factorize(system: StiffnessSystem) -> CholeskyFactor:
    """Cholesky-factor the BC-applied stiffness matrix.

    Raises RigidBodyError (with a near-null vector when affordable) if the
    matrix is not positive definite, i.e. the model is under-constrained.
    """
    K = system.K.toarray() if sp.issparse(system.K) else np.asarray(system.K)
    try:
        L0 = cholesky(K, lower=True)
    except LinAlgError as exc:
        null = _near_null_vector(K)
        raise RigidBodyError(
            "stiffness matrix is not positive definite; the model is likely "
            "under-constrained (rigid-body mode present)",
            null_vector=null) from exc
    return CholeskyFactor(L0=L0)


def solve(factor: CholeskyFactor, F: np.ndarray) -> np.ndarray:
    """Solve K U = F with the precomputed factor."""
    F = np.asarray(F, dtype=float)
    if F.shape[0] != factor.n:
        raise ValueError(f"rhs length {F.shape[0]} != system size {factor.n}")
    return factor.apply_inverse(F)
