"""Closed-form one-vs-all ridge regression for a bank of part classifiers.

Each row ``d_i`` of the data matrix ``D`` (n x k) is the positive of its own
classifier ``c_i``; every other row is a negative with label 0. All
classifiers come out of a single solve,

    C = D^T (D D^T + lam I_n)^{-1},

which only factorizes the small n x n Gram matrix. The direct k x k
solves below are kept as test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateGeometryError, InvalidInputError


def _check_data(D) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise InvalidInputError(f"data matrix must be 2-D, got shape {D.shape}")
    if D.shape[0] < 2:
        raise InvalidInputError("data matrix needs at least two rows")
    if not np.all(np.isfinite(D)):
        raise InvalidInputError("data matrix has non-finite entries")
    return D


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and np.isfinite(lam)):
        raise InvalidInputError(f"lambda must be positive, got {lam}")
    return lam


@dataclass(frozen=True, eq=False)
class ClassifierBank:
    """Column ``i`` of ``columns`` (k x n) is the classifier of row ``i``."""

    columns: np.ndarray
    lam: float

    def __len__(self) -> int:
        return self.columns.shape[1]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.columns[:, i]

    def own_responses(self, D) -> np.ndarray:
        """Response of every classifier on its own positive, ``d_i . c_i``.

        ``D`` may hold only the first rows of the training matrix.
        """
        D = np.asarray(D, dtype=np.float64)
        return np.einsum("ik,ki->i", D, self.columns[:, :D.shape[0]])


def train_bank(D, lam: float) -> ClassifierBank:
    """Train one classifier per row of ``D`` with a single Cholesky solve."""
    D = _check_data(D)
    lam = _check_lambda(lam)
    n = D.shape[0]
    gram = D @ D.T
    gram[np.diag_indices(n)] += lam
    factor = cho_factor(gram, lower=True, check_finite=False)
    # C = D^T G^{-1}; G symmetric so C^T = G^{-1} D
    C = cho_solve(factor, D, check_finite=False).T
    return ClassifierBank(C, lam)


def train_single_oracle(D, i: int, lam: float) -> np.ndarray:
    """Solve ``(D^T D + lam I_k) c = d_i`` directly (k x k system)."""
    D = _check_data(D)
    lam = _check_lambda(lam)
    if not 0 <= i < D.shape[0]:
        raise InvalidInputError(f"row index {i} out of range")
    A = D.T @ D
    A[np.diag_indices_from(A)] += lam
    return np.linalg.solve(A, D[i])


def train_weighted_oracle(D, i: int, lam: float, w: float) -> np.ndarray:
    """Solve ``(D^T W D + lam I) theta = D^T W y_i`` with
    ``W = I_n + w e_i e_i^T`` and ``y_i = e_i``."""
    D = _check_data(D)
    lam = _check_lambda(lam)
    n = D.shape[0]
    if not 0 <= i < n:
        raise InvalidInputError(f"row index {i} out of range")
    if w < 0:
        raise InvalidInputError(f"weight must be non-negative, got {w}")
    W = np.ones(n)
    W[i] += w
    A = D.T @ (W[:, None] * D)
    A[np.diag_indices_from(A)] += lam
    y = np.zeros(n)
    y[i] = 1.0
    return np.linalg.solve(A, D.T @ (W * y))


def weighted_scale_factor(d, c, w: float, tol: float = 1e-12) -> float:
    """Scale ``q`` with ``q c`` solving the positive-weighted problem.

    ``q = (1 + w) / (1 + w d.c)``; with ``w = n - 1`` this is
    ``n / (1 + (n - 1) d.c)``.
    """
    denom = 1.0 + w * float(np.dot(d, c))
    if abs(denom) <= tol:
        raise DegenerateGeometryError(f"scale factor denominator vanishes ({denom:g})")
    return (1.0 + w) / denom


def response(c, d) -> float:
    """Classifier response: the inner product ``c . d``."""
    c = np.asarray(c)
    d = getattr(d, "values", d)
    d = np.asarray(d)
    if c.shape != d.shape:
        raise InvalidInputError(f"length mismatch: {c.shape} vs {d.shape}")
    return float(np.dot(c, d))


def calibrate(bank: ClassifierBank, D, min_response: float = 1e-12) -> np.ndarray:
    """Rescale every column so it answers 1 on its own positive.

    Positive rescaling keeps each direction (weighting the positive only
    changes the magnitude), so this is equivalent to any choice of
    positive weight. Columns whose own response is not positive are
    returned as zero vectors.
    """
    own = bank.own_responses(D)
    scale = np.where(own > min_response, 1.0 / np.where(own > min_response, own, 1.0), 0.0)
    return bank.columns * scale


def primal_form(D, lam: float) -> np.ndarray:
    """``(D^T D + lam I_k)^{-1} D^T`` computed on the k x k side."""
    D = _check_data(D)
    A = D.T @ D
    A[np.diag_indices_from(A)] += _check_lambda(lam)
    return np.linalg.solve(A, D.T)


def dual_form(D, lam: float) -> np.ndarray:
    """``D^T (D D^T + lam I_n)^{-1}`` computed on the n x n side."""
    D = _check_data(D)
    G = D @ D.T
    G[np.diag_indices_from(G)] += _check_lambda(lam)
    return np.linalg.solve(G, D).T
