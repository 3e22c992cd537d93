"""Sparse direct solves with an explicit relative-residual check."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu


class SolverError(RuntimeError):
    """A linear solve failed or left a residual above the tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class Factor:
    """LU factorisation of a sparse matrix, reusable across right-hand sides."""

    def __init__(self, matrix, rtol: float = 1e-10):
        self.matrix = csc_matrix(matrix)
        self.rtol = rtol
        try:
            self._lu = splu(self.matrix)
        except RuntimeError as exc:  # singular factorisation
            raise SolverError(f"sparse factorisation failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        scale = float(np.linalg.norm(b))
        residual = float(np.linalg.norm(self.matrix @ x - b))
        if scale > 0:
            residual /= scale
        if not np.isfinite(residual) or residual > self.rtol:
            raise SolverError(
                f"linear solve residual {residual:.3e} exceeds tolerance {self.rtol:.1e}",
                residual=residual,
            )
        return x


def factorize(matrix, rtol: float = 1e-10) -> Factor:
    """Factorise a sparse matrix once for repeated residual-checked solves."""
    return Factor(matrix, rtol=rtol)
