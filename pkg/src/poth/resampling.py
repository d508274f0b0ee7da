"""Monte Carlo machinery: effect sampling and draw-based rank probabilities.

Draws are generated in fixed-size chunks whose random streams depend only
on (seed, chunk index), so output is byte-identical regardless of how many
worker threads generate the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefiniteError, ValidationError
from .ranking import (
    Direction,
    RankProbabilityMatrix,
    ReferenceEffects,
    ScoreVector,
    TreatmentSet,
    sucra_from_rank_probs,
)

DEFAULT_N_DRAWS = 10_000
DRAW_CHUNK = 8_192
_JITTER_SCALES = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True, eq=False)
class DrawsMatrix:
    """N x n samples of relative effects, one column per treatment.

    Values are on the relative-effect scale against a common anchor; the
    anchor treatment's column is identically zero when the draws come from
    ``sample_mvn``. ``source`` records whether the draws were sampled here
    (seed mandatory) or supplied by the user.
    """

    draws: np.ndarray
    treatments: TreatmentSet
    seed: int | None = None
    source: str = "supplied"

    def __post_init__(self):
        draws = np.array(self.draws, dtype=float)
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        if self.source not in ("sampled", "supplied"):
            raise ValidationError(f"source must be 'sampled' or 'supplied', got {self.source!r}")
        if draws.ndim != 2 or draws.shape[0] < 1:
            raise ValidationError(f"draws must be an N x n matrix with N >= 1, got shape {draws.shape}")
        if draws.shape[1] != self.treatments.n:
            raise ValidationError(
                f"draws have {draws.shape[1]} columns but there are {self.treatments.n} treatments"
            )
        if not np.all(np.isfinite(draws)):
            d, t = np.argwhere(~np.isfinite(draws))[0]
            raise ValidationError(f"non-finite value in draw {d}, column {t}")
        if self.source == "sampled" and self.seed is None:
            raise ValidationError("sampled draws must record their seed")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]


def _factor_covariance(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, tolerating near-PSD input via diagonal jitter.

    Jitter starts at 1e-10 * mean(diag) and escalates tenfold up to
    1e-6 * mean(diag) before giving up. An all-zero covariance factors to
    zero (exactly degenerate distribution).
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    if not cov.any():
        return np.zeros_like(cov)
    base = float(np.diag(cov).mean())
    eye = np.eye(cov.shape[0])
    for scale in _JITTER_SCALES:
        try:
            return np.linalg.cholesky(cov + (scale * base) * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveSemidefiniteError(
        "covariance is not positive semidefinite (Cholesky failed after "
        f"jitter up to {_JITTER_SCALES[-1]:g} * mean diagonal)"
    )


def _chunk_normals(seed: int, chunk_index: int, rows: int, cols: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))
    return rng.standard_normal((rows, cols))


def sample_mvn(
    r: ReferenceEffects,
    n_draws: int = DEFAULT_N_DRAWS,
    seed: int = 1,
    workers: int = 1,
) -> DrawsMatrix:
    """Sample relative effects from the multivariate normal (effects, covariance).

    The reference column is fixed at exactly zero. Output is a deterministic
    function of (effects, covariance, n_draws, seed) and does not depend on
    ``workers``.
    """
    if n_draws < 1:
        raise ValidationError(f"n_draws must be >= 1, got {n_draws}")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    n = r.treatments.n
    ref_idx = r.treatments.index(r.reference)
    non_ref = [i for i in range(n) if i != ref_idx]
    factor = _factor_covariance(r.covariance)

    chunks = [
        (ci, start, min(start + DRAW_CHUNK, n_draws))
        for ci, start in enumerate(range(0, n_draws, DRAW_CHUNK))
    ]
    out = np.zeros((n_draws, n))

    def fill(chunk) -> None:
        ci, start, stop = chunk
        z = _chunk_normals(seed, ci, stop - start, n - 1)
        out[start:stop, non_ref] = r.effects + z @ factor.T

    if workers == 1 or len(chunks) == 1:
        for chunk in chunks:
            fill(chunk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))

    return DrawsMatrix(draws=out, treatments=r.treatments, seed=seed, source="sampled")


def _rank_counts(values: np.ndarray, direction: Direction) -> tuple[np.ndarray, int]:
    """Integer rank counts over the columns of ``values`` plus the tied-draw count.

    Rank 1 goes to the largest (direction ``larger``) or smallest value in
    each row; ties within a row are broken by column index (stable sort),
    and the number of rows containing any tie is returned alongside.
    """
    n_rows, m = values.shape
    oriented = -values if direction is Direction.LARGER else values
    order = np.argsort(oriented, axis=1, kind="stable")
    counts = np.empty((m, m), dtype=np.int64)
    for k in range(m):
        counts[:, k] = np.bincount(order[:, k], minlength=m)
    sorted_vals = np.sort(values, axis=1)
    tie_count = int((np.diff(sorted_vals, axis=1) == 0).any(axis=1).sum())
    return counts, tie_count


def _rank_probs_over(d: DrawsMatrix, idx: np.ndarray, sub: TreatmentSet) -> RankProbabilityMatrix:
    counts, tie_count = _rank_counts(d.draws[:, idx], d.treatments.direction)
    probs = counts / d.n_draws
    return RankProbabilityMatrix(probs=probs, treatments=sub, tie_count=tie_count)


def rank_probs_from_draws(d: DrawsMatrix) -> RankProbabilityMatrix:
    """Empirical rank probabilities: p[i, k] = #(draws where i takes rank k+1) / N.

    Each draw contributes one full permutation, so the result is exactly
    doubly stochastic at the level of the underlying integer counts.
    """
    return _rank_probs_over(d, np.arange(d.treatments.n), d.treatments)


def subset_rank_probs_from_draws(d: DrawsMatrix, subset) -> RankProbabilityMatrix:
    """Rank probabilities after re-ranking each draw over ``subset`` only.

    Columns outside the subset are ignored draw by draw. With the full
    treatment set this is bit-identical to ``rank_probs_from_draws``.
    """
    sub = d.treatments.restrict(subset)
    idx = d.treatments.indices(subset)
    return _rank_probs_over(d, idx, sub)


def sucra_from_draws(d: DrawsMatrix) -> ScoreVector:
    """SUCRAs of the empirical rank distribution of ``d``."""
    return sucra_from_rank_probs(rank_probs_from_draws(d))
