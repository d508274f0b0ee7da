"""Domain types and closed-form ranking metrics.

Conventions used throughout the package:

* Rank 1 is the best rank. A rank-probability matrix has one row per
  treatment and one column per rank, so ``probs[i, k]`` is the probability
  that treatment ``i`` takes rank ``k + 1``.
* Scores (SUCRA or P-score) are preference-oriented: 1 means certainly
  best, 0 certainly worst, regardless of whether the clinical outcome is
  beneficial or harmful.
* The outcome direction is consulted exactly once, at the point where raw
  effects enter rank space (orienting z statistics for P-scores, choosing
  the sort order when ranking draws). Everything downstream of a score
  vector or rank matrix is direction-free. For ``smaller`` direction the
  P-scores are the exact complement of the canonical larger-is-better
  scores, which makes a direction flip an exact ``s -> 1 - s`` map.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateCovarianceError, ValidationError

ROW_SUM_TOL = 1e-8
COLUMN_SUM_TOL = 1e-6
SYMMETRY_TOL = 1e-10
SCORE_RANGE_TOL = 1e-8


class Direction(str, Enum):
    """Whether larger or smaller outcome values are preferable."""

    LARGER = "larger"
    SMALLER = "smaller"

    @classmethod
    def parse(cls, value: "str | Direction") -> "Direction":
        if isinstance(value, Direction):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(
                f"direction must be 'larger' or 'smaller', got {value!r}"
            ) from None


class RankMatrixWarning(UserWarning):
    """Rank-probability matrix is row- but not column-stochastic."""


def normal_cdf(z):
    """Standard normal CDF, Phi(z) = erfc(-z / sqrt(2)) / 2.

    Evaluated with scipy's ``ndtr`` (Cephes complementary error function),
    accurate to full double precision over the whole real line.
    """
    return ndtr(z)


@dataclass(frozen=True)
class TreatmentSet:
    """Ordered, unique treatment labels plus the outcome direction."""

    labels: tuple[str, ...]
    direction: Direction = Direction.LARGER

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "direction", Direction.parse(self.direction))
        if len(labels) < 2:
            raise ValidationError(f"need at least 2 treatments, got {len(labels)}")
        if any(not isinstance(lab, str) or not lab for lab in labels):
            raise ValidationError("treatment labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
            raise ValidationError(f"duplicate treatment labels: {dupes}")

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown treatment {label!r}") from None

    def indices(self, ids) -> np.ndarray:
        """Positions of ``ids``, returned in network (index) order."""
        ids = list(ids)
        if len(set(ids)) != len(ids):
            raise ValidationError(f"subset contains duplicate labels: {ids}")
        return np.array(sorted(self.index(lab) for lab in ids), dtype=int)

    def restrict(self, ids) -> "TreatmentSet":
        """Subset TreatmentSet with labels kept in network order."""
        idx = self.indices(ids)
        if idx.size < 2:
            raise ValidationError(f"subset must contain at least 2 treatments, got {idx.size}")
        return TreatmentSet(tuple(self.labels[i] for i in idx), self.direction)

    def flipped(self) -> "TreatmentSet":
        other = Direction.SMALLER if self.direction is Direction.LARGER else Direction.LARGER
        return TreatmentSet(self.labels, other)


def _read_only(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RankProbabilityMatrix:
    """Marginal rank distributions: probs[i, k] = P(treatment i takes rank k+1).

    Rows must sum to 1 within ``ROW_SUM_TOL`` (hard error). Columns are
    expected to sum to 1 when the matrix comes from joint rankings; a
    violation beyond ``COLUMN_SUM_TOL`` is recorded and warned about but
    accepted, since SUCRA remains well defined row by row.
    """

    probs: np.ndarray
    treatments: TreatmentSet
    tie_count: int | None = None
    column_warnings: tuple[str, ...] = field(init=False, default=(), repr=False)

    def __post_init__(self):
        probs = _read_only(self.probs)
        object.__setattr__(self, "probs", probs)
        n = self.treatments.n
        if probs.shape != (n, n):
            raise ValidationError(
                f"rank matrix must be {n}x{n} to match the treatments, got {probs.shape}"
            )
        if not np.all(np.isfinite(probs)):
            i, k = np.argwhere(~np.isfinite(probs))[0]
            raise ValidationError(f"non-finite rank probability at row {i}, column {k}")
        if probs.min() < -1e-9 or probs.max() > 1 + 1e-9:
            i, k = np.argwhere((probs < -1e-9) | (probs > 1 + 1e-9))[0]
            raise ValidationError(
                f"rank probability out of [0, 1] at row {i}, column {k}: {probs[i, k]}"
            )
        row_sums = probs.sum(axis=1)
        bad = np.abs(row_sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            i = int(np.argmax(bad))
            raise ValidationError(
                f"rank probabilities for {self.treatments.labels[i]!r} sum to "
                f"{row_sums[i]:.12g}, expected 1 within {ROW_SUM_TOL}"
            )
        col_sums = probs.sum(axis=0)
        off = np.abs(col_sums - 1.0) > COLUMN_SUM_TOL
        if off.any():
            msgs = tuple(
                f"rank {k + 1} probabilities sum to {col_sums[k]:.12g}, expected 1"
                for k in np.flatnonzero(off)
            )
            object.__setattr__(self, "column_warnings", msgs)
            warnings.warn(
                "rank matrix is not column-stochastic: " + "; ".join(msgs),
                RankMatrixWarning,
                stacklevel=2,
            )

    @property
    def n(self) -> int:
        return self.treatments.n


@dataclass(frozen=True, eq=False)
class ReferenceEffects:
    """Relative effects of each non-reference treatment versus a common reference.

    ``effects`` follows the order of the non-reference treatments within
    ``treatments``; ``covariance`` is the joint covariance of those
    estimates. The reference itself is an exact zero with zero variance.
    """

    effects: np.ndarray
    covariance: np.ndarray
    reference: str
    treatments: TreatmentSet

    def __post_init__(self):
        object.__setattr__(self, "effects", _read_only(self.effects))
        object.__setattr__(self, "covariance", _read_only(self.covariance))
        self.treatments.index(self.reference)  # membership check
        k = self.treatments.n - 1
        if self.effects.shape != (k,):
            raise ValidationError(
                f"expected {k} relative effects (one per non-reference treatment), "
                f"got shape {self.effects.shape}"
            )
        if self.covariance.shape != (k, k):
            raise ValidationError(
                f"covariance must be {k}x{k}, got {self.covariance.shape}"
            )
        if not np.all(np.isfinite(self.effects)) or not np.all(np.isfinite(self.covariance)):
            raise ValidationError("effects and covariance must be finite")
        asym = np.abs(self.covariance - self.covariance.T).max() if k else 0.0
        if asym > SYMMETRY_TOL:
            raise ValidationError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
        if np.diag(self.covariance).min(initial=0.0) < 0:
            raise ValidationError("covariance has a negative diagonal entry")

    @property
    def non_reference_labels(self) -> tuple[str, ...]:
        return tuple(lab for lab in self.treatments.labels if lab != self.reference)


@dataclass(frozen=True, eq=False)
class PairwiseEffects:
    """All-contrasts effect estimates: theta[i, j] is the effect of i versus j."""

    theta: np.ndarray
    se: np.ndarray
    treatments: TreatmentSet

    def __post_init__(self):
        object.__setattr__(self, "theta", _read_only(self.theta))
        object.__setattr__(self, "se", _read_only(self.se))
        n = self.treatments.n
        for name, a in (("theta", self.theta), ("se", self.se)):
            if a.shape != (n, n):
                raise ValidationError(f"{name} must be {n}x{n}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"{name} contains non-finite entries")
        if np.abs(self.theta + self.theta.T).max() > SYMMETRY_TOL:
            raise ValidationError("theta must be antisymmetric: theta[i, j] = -theta[j, i]")
        if np.abs(np.diag(self.theta)).max() > SYMMETRY_TOL:
            raise ValidationError("theta diagonal must be zero")
        if np.abs(self.se - self.se.T).max() > SYMMETRY_TOL:
            raise ValidationError("se must be symmetric")
        off = ~np.eye(n, dtype=bool)
        if self.se[off].min() <= 0:
            i, j = np.argwhere(off & (self.se <= 0))[0]
            raise ValidationError(
                f"standard error for {self.treatments.labels[i]!r} vs "
                f"{self.treatments.labels[j]!r} must be positive, got {self.se[i, j]}"
            )

    @property
    def n(self) -> int:
        return self.treatments.n


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Per-treatment SUCRA or P-score values in [0, 1].

    Over a full competing set the scores average to 0.5; user-supplied
    (e.g. rounded) vectors may deviate, which is reported rather than
    rejected, see ``mean_deviation``.
    """

    scores: np.ndarray
    kind: str
    treatments: TreatmentSet

    def __post_init__(self):
        if self.kind not in ("sucra", "pscore"):
            raise ValidationError(f"score kind must be 'sucra' or 'pscore', got {self.kind!r}")
        scores = np.array(self.scores, dtype=float)
        n = self.treatments.n
        if scores.shape != (n,):
            raise ValidationError(f"expected {n} scores, got shape {scores.shape}")
        if not np.all(np.isfinite(scores)):
            raise ValidationError("scores must be finite")
        if scores.min() < -SCORE_RANGE_TOL or scores.max() > 1 + SCORE_RANGE_TOL:
            bad = int(np.argmax((scores < -SCORE_RANGE_TOL) | (scores > 1 + SCORE_RANGE_TOL)))
            raise ValidationError(
                f"score for {self.treatments.labels[bad]!r} is outside [0, 1]: {scores[bad]}"
            )
        scores = np.clip(scores, 0.0, 1.0)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return self.treatments.n

    def mean_deviation(self) -> float:
        """Absolute deviation of the score mean from 0.5."""
        return abs(float(self.scores.mean()) - 0.5)

    def as_dict(self) -> dict[str, float]:
        return {lab: float(s) for lab, s in zip(self.treatments.labels, self.scores)}


def sucra_from_rank_probs(m: RankProbabilityMatrix) -> ScoreVector:
    """SUCRA: the average over cutoffs r = 1..n-1 of P(rank <= r).

    Equals the normalized area under each treatment's cumulative ranking
    curve; 1 for a certain winner, 0 for a certain loser.
    """
    n = m.n
    cumulative = np.cumsum(m.probs[:, : n - 1], axis=1)
    scores = cumulative.sum(axis=1) / (n - 1)
    return ScoreVector(scores, kind="sucra", treatments=m.treatments)


def expected_rank(m: RankProbabilityMatrix) -> np.ndarray:
    """Mean of each treatment's rank distribution, in [1, n]."""
    ranks = np.arange(1, m.n + 1, dtype=float)
    return m.probs @ ranks


def sucra_from_expected_rank(
    eranks,
    n: int | None = None,
    treatments: TreatmentSet | None = None,
) -> ScoreVector:
    """SUCRA via the linear identity (n - E[rank]) / (n - 1)."""
    eranks = np.asarray(eranks, dtype=float)
    if treatments is not None:
        n = treatments.n
    elif n is None:
        n = eranks.size
    if n < 2:
        raise ValidationError(f"need at least 2 treatments, got n={n}")
    if eranks.min() < 1 - 1e-9 or eranks.max() > n + 1e-9:
        bad = float(eranks[np.argmax((eranks < 1 - 1e-9) | (eranks > n + 1e-9))])
        raise ValidationError(f"expected rank {bad} outside [1, {n}]")
    if treatments is None:
        treatments = TreatmentSet(tuple(f"T{i + 1}" for i in range(eranks.size)))
    scores = (n - eranks) / (n - 1)
    return ScoreVector(scores, kind="sucra", treatments=treatments)


def pairwise_from_reference(r: ReferenceEffects) -> PairwiseEffects:
    """Expand reference-based estimates into the full contrast matrix.

    theta[i, j] = mu_i - mu_j and Var(theta[i, j]) = V_ii + V_jj - 2 V_ij,
    with the reference treated as an exact zero (zero variance against
    itself). A non-positive derived variance (perfectly correlated
    contrast) is refused.
    """
    n = r.treatments.n
    ref_idx = r.treatments.index(r.reference)
    non_ref = [i for i in range(n) if i != ref_idx]

    mu = np.zeros(n)
    mu[non_ref] = r.effects
    cov = np.zeros((n, n))
    cov[np.ix_(non_ref, non_ref)] = r.covariance

    theta = mu[:, None] - mu[None, :]
    var = np.diag(cov)[:, None] + np.diag(cov)[None, :] - 2.0 * cov
    off = ~np.eye(n, dtype=bool)
    if var[off].min() <= 0:
        i, j = np.argwhere(off & (var <= 0))[0]
        raise DegenerateCovarianceError(
            f"derived variance for {r.treatments.labels[i]!r} vs "
            f"{r.treatments.labels[j]!r} is {var[i, j]:.6g} (must be positive)"
        )
    se = np.sqrt(np.where(off, var, 0.0))
    return PairwiseEffects(theta=theta, se=se, treatments=r.treatments)


def _pscores_over(p: PairwiseEffects, idx: np.ndarray) -> np.ndarray:
    """Mean over competitors of Phi(theta_ij / se_ij), restricted to idx.

    Phi is evaluated once per unordered pair (upper triangle) and mirrored
    as the exact complement, so opposing entries add to 1 and the score
    mean stays at 0.5 to float precision. The smaller-is-better direction
    complements the final scores, keeping a direction flip exact.
    """
    m = idx.size
    theta = p.theta[np.ix_(idx, idx)]
    se = p.se[np.ix_(idx, idx)]
    iu, ju = np.triu_indices(m, k=1)
    phi_upper = normal_cdf(theta[iu, ju] / se[iu, ju])
    phi = np.zeros((m, m))
    phi[iu, ju] = phi_upper
    phi[ju, iu] = 1.0 - phi_upper
    scores = phi.sum(axis=1) / (m - 1)
    if p.treatments.direction is Direction.SMALLER:
        scores = 1.0 - scores
    return scores


def pscore_from_pairwise(p: PairwiseEffects) -> ScoreVector:
    """P-score of each treatment: its mean certainty of beating a competitor."""
    scores = _pscores_over(p, np.arange(p.n))
    return ScoreVector(scores, kind="pscore", treatments=p.treatments)


def subset_pscore(p: PairwiseEffects, subset) -> ScoreVector:
    """P-scores recomputed with the competing set restricted to ``subset``.

    With the full treatment set this reproduces ``pscore_from_pairwise``
    bit for bit.
    """
    sub = p.treatments.restrict(subset)
    idx = p.treatments.indices(subset)
    scores = _pscores_over(p, idx)
    return ScoreVector(scores, kind="pscore", treatments=sub)
