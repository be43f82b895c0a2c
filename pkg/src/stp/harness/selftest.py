"""Randomized cross-checks of the classifier-bank solver against direct solves."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from ..ridge_bank import (dual_form, primal_form, train_bank, train_single_oracle,
                          train_weighted_oracle, weighted_scale_factor)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: worst={self.worst:.3e} tol={self.tolerance:.0e} "
                f"({self.seconds:.2f}s)")


def _random_instance(rng, n_range=(5, 100), k_max=400):
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    k = int(rng.integers(n + 1, k_max + 1))
    lam = float(rng.choice([0.01, 0.1, 1.0]))
    return rng.standard_normal((n, k)), lam


def bank_vs_oracle(n_instances: int = 100, seed: int = 0) -> float:
    """Worst relative column error of the bank against per-column k x k solves."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        D, lam = _random_instance(rng)
        C = train_bank(D, lam).columns
        A = D.T @ D + lam * np.eye(D.shape[1])
        ref = np.linalg.solve(A, D.T)    # column i solves A c = d_i
        rel = np.abs(C - ref).max(axis=0) / np.abs(ref).max(axis=0)
        worst = max(worst, rel.max())
    return worst


def scale_factor_property(n_instances: int = 100, seed: int = 1):
    """Worst relative error of ``q c_i`` against the weighted solve, and the
    worst deviation of their cosine from 1."""
    rng = np.random.default_rng(seed)
    worst_rel = worst_cos = 0.0
    for _ in range(n_instances):
        D, lam = _random_instance(rng, (5, 60), 200)
        n = D.shape[0]
        i = int(rng.integers(n))
        c = train_single_oracle(D, i, lam)
        for w in (0.5, 1.0, n - 1.0, 100.0):
            theta = train_weighted_oracle(D, i, lam, w)
            q = weighted_scale_factor(D[i], c, w)
            worst_rel = max(worst_rel, np.abs(theta - q * c).max() / np.abs(theta).max())
            cos = theta @ c / (np.linalg.norm(theta) * np.linalg.norm(c))
            worst_cos = max(worst_cos, abs(1.0 - cos))
    return worst_rel, worst_cos


def woodbury_identity(n_instances: int = 50, seed: int = 2) -> float:
    """Worst entrywise gap between the k x k and n x n closed forms."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        D, lam = _random_instance(rng, (5, 60), 200)
        worst = max(worst, np.abs(primal_form(D, lam) - dual_form(D, lam)).max())
    return worst


def _timed(fn: Callable):
    t0 = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - t0


def run_selftest() -> List[CheckResult]:
    results = []
    worst, dt = _timed(bank_vs_oracle)
    results.append(CheckResult("bank matches per-column solve", worst < 1e-8, worst, 1e-8, dt))
    (rel, cos), dt = _timed(scale_factor_property)
    results.append(CheckResult("weighted solution equals q * unweighted", rel < 1e-8, rel, 1e-8, dt))
    results.append(CheckResult("weighted direction unchanged (1 - cos)", cos < 1e-12, cos, 1e-12, dt))
    worst, dt = _timed(woodbury_identity)
    results.append(CheckResult("matrix inversion lemma forms agree", worst < 1e-8, worst, 1e-8, dt))
    return results
