"""Shared constructors for test inputs."""

from __future__ import annotations

import numpy as np

from poth.ranking import Direction, RankProbabilityMatrix, ReferenceEffects, TreatmentSet
from poth.resampling import DrawsMatrix


def labels(n: int) -> tuple[str, ...]:
    return tuple(f"T{i + 1}" for i in range(n))


def treatments(n: int, direction: Direction = Direction.LARGER) -> TreatmentSet:
    return TreatmentSet(labels(n), direction)


def rank_matrix(probs, direction: Direction = Direction.LARGER) -> RankProbabilityMatrix:
    probs = np.asarray(probs, dtype=float)
    return RankProbabilityMatrix(probs=probs, treatments=treatments(probs.shape[0], direction))


def random_doubly_stochastic(rng: np.random.Generator, n: int, n_perms: int = 6) -> np.ndarray:
    """Random convex combination of permutation matrices."""
    weights = rng.random(n_perms)
    weights /= weights.sum()
    m = np.zeros((n, n))
    for w in weights:
        m[np.arange(n), rng.permutation(n)] += w
    return m


def cluster_draws(direction: Direction = Direction.LARGER) -> DrawsMatrix:
    """Three treatments: A and B exchangeable at the top, C always last.

    Rank probabilities are A = B = (0.5, 0.5, 0) and C = (0, 0, 1).
    """
    good, bad = (1.0, -5.0) if direction is Direction.LARGER else (-1.0, 5.0)
    draws = np.array(
        [
            [good, 0.0, bad],
            [0.0, good, bad],
        ]
    )
    return DrawsMatrix(draws=draws, treatments=TreatmentSet(("A", "B", "C"), direction))


def certain_draws(n: int = 4, n_draws: int = 5) -> DrawsMatrix:
    """Every draw strictly ordered the same way: a perfectly certain hierarchy."""
    row = np.arange(n, 0, -1, dtype=float)
    return DrawsMatrix(draws=np.tile(row, (n_draws, 1)), treatments=treatments(n))


def random_reference_effects(rng: np.random.Generator, n: int) -> ReferenceEffects:
    """Reference effects with a random positive-definite covariance."""
    k = n - 1
    a = rng.normal(size=(k, k))
    cov = a @ a.T + 0.05 * np.eye(k)
    return ReferenceEffects(
        effects=rng.normal(scale=1.5, size=k),
        covariance=cov,
        reference=labels(n)[0],
        treatments=treatments(n),
    )


def random_draws(rng: np.random.Generator, n: int, n_draws: int = 60) -> DrawsMatrix:
    return DrawsMatrix(draws=rng.normal(size=(n_draws, n)), treatments=treatments(n))
