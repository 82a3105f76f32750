"""Permutation utilities and equivariance / semi-invariance check drivers.

A sequence-to-sequence map f is equivariant when f(permuted X) equals
the same permutation of f(X).  A sequence-to-point map g(x1, rest) is
semi-invariant when it ignores the order of ``rest``.  ``lift`` converts
a semi-invariant g into the equivariant map whose row i applies g with
token i in front.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations as _all_perms
from typing import Callable

import numpy as np

from .errors import ShapeError

# g(token, other_tokens) -> output vector; other_tokens is an (n-1) x d matrix
# whose row order must not matter.
SemiInvariantFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(n)


def identity_permutation(n: int) -> np.ndarray:
    return np.arange(n)


def permute(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Row i of the output is row p[i] of the input."""
    p = np.asarray(p)
    if x.shape[0] != p.shape[0]:
        raise ShapeError(f"permutation length {p.shape[0]} vs {x.shape[0]} rows")
    return x[p]


def compose(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Composition such that permute(permute(x, p), q) == permute(x, compose(p, q))."""
    return np.asarray(p)[np.asarray(q)]


def invert(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p))
    return inv


def lift(g: SemiInvariantFn) -> Callable[[np.ndarray], np.ndarray]:
    """Equivariant sequence map whose row i is g(x_i, all other rows)."""

    def lifted(x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        rows = []
        for i in range(n):
            rest = np.delete(x, i, axis=0)
            rows.append(np.asarray(g(x[i], rest), dtype=np.float64).reshape(-1))
        return np.vstack(rows)

    return lifted


@dataclass
class CheckReport:
    """Result of a sampled invariance check."""

    max_violation: float
    witness_input: np.ndarray | None
    witness_permutation: np.ndarray | None

    def passed(self, tol: float) -> bool:
        return self.max_violation <= tol


def _permutations_for(n: int, rng: np.random.Generator, fix_first: bool):
    """All permutations for n <= 6, a single random draw otherwise."""
    if n <= 6:
        if fix_first:
            for rest in _all_perms(range(1, n)):
                yield np.array((0,) + rest)
        else:
            for p in _all_perms(range(n)):
                yield np.array(p)
    else:
        if fix_first:
            yield np.concatenate([[0], 1 + rng.permutation(n - 1)])
        else:
            yield rng.permutation(n)


def check_equivariance(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    d: int,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
) -> CheckReport:
    """Max over sampled (X, pi) of ||f(pi X) - pi f(X)||_inf.

    Each trial draws one X uniform in [0,1]^{n x d}; for n <= 6 all n!
    permutations are checked per draw, otherwise one random permutation.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    witness_x = witness_p = None
    for _ in range(trials):
        x = rng.uniform(size=(n, d))
        fx = f(x)
        for p in _permutations_for(n, rng, fix_first=False):
            violation = float(np.max(np.abs(f(permute(x, p)) - permute(fx, p))))
            if violation > worst:
                worst, witness_x, witness_p = violation, x, p
    return CheckReport(worst, witness_x, witness_p)


def check_semi_invariance(
    g: SemiInvariantFn,
    n: int,
    d: int,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-12,
) -> CheckReport:
    """Like check_equivariance but permutes only the ``rest`` argument of g."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    witness_x = witness_p = None
    for _ in range(trials):
        x = rng.uniform(size=(n, d))
        first, rest = x[0], x[1:]
        reference = np.asarray(g(first, rest), dtype=np.float64)
        for p in _permutations_for(n - 1, rng, fix_first=False):
            violation = float(np.max(np.abs(np.asarray(g(first, rest[p])) - reference)))
            if violation > worst:
                worst, witness_x, witness_p = violation, x, p
    return CheckReport(worst, witness_x, witness_p)
