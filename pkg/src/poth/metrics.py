"""The hierarchy-certainty metric family.

The headline quantity (POTH, precision of treatment hierarchy) is the
variance of the SUCRA or P-score values normalized by its attainable
maximum, so it lives in [0, 1] with 1 for a perfectly certain hierarchy
and 0 when every score collapses to 0.5. Three equivalent routes are
provided: from scores, from expected ranks, and from the average variance
of the per-treatment rank distributions.

Subset variants (leave-one-out residuals, cumulative best-k series) need
joint ranking information, so they accept pairwise effects or draws but
refuse bare marginal rank matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentScoresError, NumericalError, UnsupportedSourceError, ValidationError
from .ranking import (
    Direction,
    PairwiseEffects,
    RankProbabilityMatrix,
    ScoreVector,
    expected_rank,
    pscore_from_pairwise,
    subset_pscore,
    sucra_from_rank_probs,
)
from .resampling import DrawsMatrix, subset_rank_probs_from_draws, sucra_from_draws

CLAMP_TOL = 1e-12

JointSource = PairwiseEffects | DrawsMatrix


def score_variance(s: ScoreVector) -> float:
    """Variance of the scores about their theoretical mean of 0.5."""
    return float(np.mean((s.scores - 0.5) ** 2))


def variance_from_expected_ranks(eranks, n: int | None = None) -> float:
    """Score variance expressed through the expected ranks.

    sum((E[rank] - (n+1)/2)^2) / (n (n-1)^2); identical to
    ``score_variance`` of the corresponding SUCRAs.
    """
    eranks = np.asarray(eranks, dtype=float)
    if n is None:
        n = eranks.size
    if n < 2:
        raise ValidationError(f"need at least 2 treatments, got n={n}")
    if eranks.min() < 1 - 1e-9 or eranks.max() > n + 1e-9:
        raise ValidationError(f"expected ranks must lie in [1, {n}]")
    centered = eranks - (n + 1) / 2.0
    return float(np.sum(centered**2) / (n * (n - 1) ** 2))


def max_variance(n: int) -> float:
    """Largest attainable score variance: (n+1) / (12 (n-1)).

    Attained when the scores are evenly spaced over [0, 1]; decreases
    towards 1/12 (the continuous-uniform variance) as n grows.
    """
    if n < 2:
        raise ValidationError(f"need at least 2 treatments, got n={n}")
    return (n + 1) / (12.0 * (n - 1))


def _clamp_unit(x: float, what: str, error_cls=NumericalError) -> float:
    if 0.0 <= x <= 1.0:
        return x
    if -CLAMP_TOL <= x < 0.0:
        return 0.0
    if 1.0 < x <= 1.0 + CLAMP_TOL:
        return 1.0
    raise error_cls(f"{what} = {x!r} lies outside [0, 1] beyond tolerance {CLAMP_TOL}")


def poth_from_scores(s: ScoreVector) -> float:
    """Score variance normalized by its maximum: 12 (n-1) / (n+1) * S^2.

    Raises if the implied variance exceeds the attainable maximum beyond
    floating-point tolerance, which means the input was not a valid
    SUCRA/P-score vector.
    """
    n = s.n
    raw = 12.0 * (n - 1) / (n + 1) * score_variance(s)
    return _clamp_unit(raw, "POTH from scores", InconsistentScoresError)


def avg_rank_variance(m: RankProbabilityMatrix) -> float:
    """Mean over treatments of the variance of each rank distribution.

    Zero exactly when the matrix is a permutation matrix (every treatment
    holds one rank with certainty).
    """
    ranks = np.arange(1, m.n + 1, dtype=float)
    deviations = ranks[None, :] - expected_rank(m)[:, None]
    per_treatment = np.sum(deviations**2 * m.probs, axis=1)
    return float(per_treatment.mean())


def poth_from_rank_probs(m: RankProbabilityMatrix) -> float:
    """POTH via the rank-distribution route: 1 - 12 V / ((n+1)(n-1)).

    Agrees with ``poth_from_scores(sucra_from_rank_probs(m))`` because the
    total squared rank spread decomposes into within-treatment variance
    plus between-treatment score variance with no cross term.
    """
    n = m.n
    raw = 1.0 - 12.0 * avg_rank_variance(m) / ((n + 1.0) * (n - 1.0))
    return _clamp_unit(raw, "POTH from rank probabilities")


@dataclass(frozen=True)
class SubsetSpec:
    """A subset of treatments to re-rank among themselves.

    ``kind`` records how the subset arose: chosen explicitly, by leaving
    one treatment out (param = its label), or as the best-k treatments by
    global score (param = str(k)).
    """

    ids: tuple[str, ...]
    kind: str = "explicit"
    param: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        if self.kind not in ("explicit", "leave-one-out", "best-k"):
            raise ValidationError(f"unknown subset kind {self.kind!r}")
        if len(self.ids) < 2:
            raise ValidationError(f"subset must contain at least 2 treatments, got {len(self.ids)}")


def scores_from_source(source: JointSource) -> ScoreVector:
    """Global scores for a joint source: P-scores for effects, SUCRAs for draws."""
    if isinstance(source, PairwiseEffects):
        return pscore_from_pairwise(source)
    if isinstance(source, DrawsMatrix):
        return sucra_from_draws(source)
    _reject_source(source)


def subset_scores(source: JointSource, subset) -> ScoreVector:
    if isinstance(source, PairwiseEffects):
        return subset_pscore(source, subset)
    if isinstance(source, DrawsMatrix):
        return sucra_from_rank_probs(subset_rank_probs_from_draws(source, subset))
    _reject_source(source)


def _reject_source(source) -> None:
    if isinstance(source, RankProbabilityMatrix):
        raise UnsupportedSourceError(
            "subset rankings cannot be derived from a marginal rank-probability "
            "matrix; joint information (pairwise effects or draws) is required"
        )
    raise ValidationError(f"unsupported source type {type(source).__name__}")


def subset_poth(source: JointSource, subset) -> float:
    """POTH of the hierarchy restricted to ``subset``, re-ranked among itself.

    With the full treatment set this equals the global POTH exactly.
    """
    ids = subset.ids if isinstance(subset, SubsetSpec) else subset
    return poth_from_scores(subset_scores(source, ids))


def poth_residuals(source: JointSource) -> np.ndarray:
    """Leave-one-out contribution of each treatment to the global POTH.

    residual(j) = POTH - POTH(all treatments except j); positive means j
    sharpens the hierarchy, negative means it blurs it. Requires n >= 3 so
    every leave-one-out set still ranks at least two treatments.
    """
    labels = _source_labels(source)
    n = len(labels)
    if n < 3:
        raise ValidationError(f"residuals need at least 3 treatments, got {n}")
    total = subset_poth(source, labels)
    return np.array(
        [total - subset_poth(source, labels[:j] + labels[j + 1 :]) for j in range(n)]
    )


def best_k_order(scores: ScoreVector) -> tuple[np.ndarray, tuple[str, ...]]:
    """Treatment indices sorted best-first by score, ties by treatment index.

    Returns the ordering plus warnings for any tie crossing a best-k
    boundary, where the deterministic index rule silently picked one of
    several equally scored treatments.
    """
    n = scores.n
    order = np.lexsort((np.arange(n), -scores.scores))
    tied = []
    for k in range(1, n):
        if scores.scores[order[k - 1]] == scores.scores[order[k]]:
            tied.append(
                f"best-{k} boundary tie between "
                f"{scores.treatments.labels[order[k - 1]]!r} and "
                f"{scores.treatments.labels[order[k]]!r}; kept the smaller treatment index"
            )
    return order, tuple(tied)


def cumulative_poth(source: JointSource) -> dict[int, float]:
    """POTH of the best-k treatments for k = 2..n.

    "Best k" means the k highest global scores; the k = n entry equals the
    global POTH exactly.
    """
    scores = scores_from_source(source)
    labels = scores.treatments.labels
    order, _ = best_k_order(scores)
    return {
        k: subset_poth(source, tuple(labels[i] for i in order[:k]))
        for k in range(2, len(labels) + 1)
    }


def _source_labels(source: JointSource) -> tuple[str, ...]:
    if isinstance(source, (PairwiseEffects, DrawsMatrix)):
        return source.treatments.labels
    _reject_source(source)


@dataclass(frozen=True)
class ReportMetadata:
    method: str  # pscore | draws | rank-matrix | scores
    direction: Direction
    n_draws: int | None = None
    seed: int | None = None
    tie_count: int | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.method not in ("pscore", "draws", "rank-matrix", "scores"):
            raise ValidationError(f"unknown report method {self.method!r}")
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        object.__setattr__(self, "warnings", tuple(self.warnings))


@dataclass(frozen=True, eq=False)
class SubsetResult:
    spec: SubsetSpec
    poth: float
    scores: ScoreVector


@dataclass(frozen=True, eq=False)
class HierarchyReport:
    """Full output of a hierarchy-certainty analysis.

    ``residuals`` and ``cumulative`` are None when the input source cannot
    support them (marginal rank matrices, bare score vectors, or n = 2 for
    residuals). When present, the cumulative series ends at the global
    POTH exactly.
    """

    poth: float
    scores: ScoreVector
    metadata: ReportMetadata
    residuals: dict[str, float] | None = None
    cumulative: dict[int, float] | None = None
    subsets: tuple[SubsetResult, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "subsets", tuple(self.subsets))
        if not 0.0 <= self.poth <= 1.0:
            raise ValidationError(f"POTH must lie in [0, 1], got {self.poth}")
        n = self.scores.n
        if self.residuals is not None:
            if set(self.residuals) != set(self.scores.treatments.labels):
                raise ValidationError("residual labels do not match the treatments")
            worst = max(abs(v) for v in self.residuals.values())
            if worst > 1.0:
                raise ValidationError(f"residuals must lie in [-1, 1], worst was {worst}")
        if self.cumulative is not None:
            if sorted(self.cumulative) != list(range(2, n + 1)):
                raise ValidationError("cumulative series must cover k = 2..n")
            if self.cumulative[n] != self.poth:
                raise ValidationError(
                    f"cumulative[{n}] = {self.cumulative[n]!r} must equal the "
                    f"global POTH {self.poth!r} exactly"
                )
