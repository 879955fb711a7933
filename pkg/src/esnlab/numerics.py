"""Dense-matrix kernels: products, spectral quantities, min-norm least squares.

These are thin, contract-enforcing fronts over LAPACK (through numpy). The
spectral radius uses a full eigensolve rather than power iteration: random
uniform matrices routinely have complex-conjugate dominant pairs, and the
eigensolve handles them without special cases while meeting the 1e-8 accuracy
the rescaling step needs. All functions are pure and deterministic: identical
inputs produce bit-identical outputs on a given platform.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DataError, NumericalError
from .validation import as_matrix, as_vector


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product with dimension checks."""
    if m.ndim != 2 or v.ndim != 1:
        raise ConfigurationError(f"matvec expects a 2-D matrix and 1-D vector, got {m.ndim}-D and {v.ndim}-D")
    if m.shape[1] != v.shape[0]:
        raise ConfigurationError(f"matvec dimension mismatch: matrix is {m.shape}, vector has length {v.shape[0]}")
    return m @ v


def spectral_radius(m: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    m = as_matrix(m, "spectral_radius input")
    if m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"spectral_radius requires a square matrix, got {m.shape}")
    try:
        eigenvalues = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed to converge: {exc}") from exc
    return float(np.max(np.abs(eigenvalues)))


def operator_norm_2(m: np.ndarray) -> float:
    """Largest singular value (operator 2-norm)."""
    m = as_matrix(m, "operator_norm_2 input")
    try:
        singular_values = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular value iteration failed to converge: {exc}") from exc
    return float(singular_values[0])


class LeastSquaresSolver:
    """Factored least-squares solve against a fixed design matrix.

    Factor once with ``LeastSquaresSolver(x, ridge)``, then solve for any
    number of right-hand sides. With ridge = 0 the solution is the minimum-norm
    (Moore-Penrose) one; with ridge > 0 it minimizes ||xb - y||^2 + ridge*||b||^2.
    Solving column by column gives bit-identical results to a batched solve of
    the corresponding single column, which the memory-capacity scan relies on.
    """

    def __init__(self, x: np.ndarray, ridge: float = 0.0):
        x = as_matrix(x, "design matrix")
        if not np.isfinite(ridge) or ridge < 0.0:
            raise ConfigurationError(f"ridge must be finite and >= 0, got {ridge!r}")
        self.n, self.p = x.shape
        try:
            u, s, vt = np.linalg.svd(x, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD failed to converge while factoring the design matrix: {exc}") from exc
        if ridge == 0.0:
            # Moore-Penrose cutoff, same convention as numpy's lstsq/pinv.
            cutoff = max(self.n, self.p) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
            inv = np.zeros_like(s)
            np.divide(1.0, s, out=inv, where=s > cutoff)
        else:
            inv = s / (s * s + ridge)
        self._ut = u.T
        self._vt = vt
        self._filter = inv

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Coefficients for targets ``y`` of shape (n,) or (n, q)."""
        y = np.ascontiguousarray(y, dtype=np.float64)
        if y.shape[0] != self.n:
            raise DataError(f"target has {y.shape[0]} rows, design matrix has {self.n}")
        if not np.isfinite(y).all():
            raise DataError("target contains NaN or Inf entries")
        if y.ndim == 1:
            return self._vt.T @ (self._filter * (self._ut @ y))
        if y.ndim == 2:
            return self._vt.T @ (self._filter[:, None] * (self._ut @ y))
        raise DataError(f"target must be 1-D or 2-D, got ndim={y.ndim}")


def least_squares_fit(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Solve min ||xb - y||^2 (+ ridge penalty) for matrix targets.

    Rank deficiency is not an error: the ridge-free solution is the minimum
    Frobenius norm element of the solution set.
    """
    solver = LeastSquaresSolver(x, ridge)
    y = as_matrix(y, "target matrix")
    return solver.solve(y)
