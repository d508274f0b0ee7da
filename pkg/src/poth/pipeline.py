"""End-to-end assembly of hierarchy reports from parsed input documents."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnsupportedSourceError, ValidationError
from .io_formats import NetworkInputDocument
from .metrics import (
    HierarchyReport,
    ReportMetadata,
    SubsetResult,
    SubsetSpec,
    best_k_order,
    cumulative_poth,
    poth_from_scores,
    poth_residuals,
    subset_poth,
    subset_scores,
)
from .ranking import (
    PairwiseEffects,
    RankProbabilityMatrix,
    ReferenceEffects,
    ScoreVector,
    pairwise_from_reference,
    pscore_from_pairwise,
    sucra_from_rank_probs,
)
from .resampling import DEFAULT_N_DRAWS, DrawsMatrix, rank_probs_from_draws, sample_mvn


@dataclass(frozen=True)
class ComputeOptions:
    """Knobs for report assembly.

    ``method`` selects how reference effects are scored: the analytic
    P-score route (default) or Monte Carlo ranking of sampled draws.
    Draws inputs always use the draws route; pairwise inputs always use
    P-scores (their SEs carry no joint covariance to sample from).
    """

    method: str | None = None  # None = auto
    n_draws: int = DEFAULT_N_DRAWS
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.method not in (None, "pscore", "draws"):
            raise ValidationError(f"method must be 'pscore' or 'draws', got {self.method!r}")
        if self.n_draws < 1:
            raise ValidationError(f"n_draws must be >= 1, got {self.n_draws}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


def _resolve_source(doc: NetworkInputDocument, options: ComputeOptions):
    """Returns (method, joint source or None, n_draws, seed)."""
    payload = doc.payload
    if isinstance(payload, ReferenceEffects):
        if options.method == "draws":
            draws = sample_mvn(payload, options.n_draws, options.seed, options.workers)
            return "draws", draws, options.n_draws, options.seed
        return "pscore", pairwise_from_reference(payload), None, None
    if isinstance(payload, PairwiseEffects):
        if options.method == "draws":
            raise ValidationError(
                "pairwise effects carry no joint covariance to sample from; "
                "use the pscore method or supply reference effects"
            )
        return "pscore", payload, None, None
    if isinstance(payload, DrawsMatrix):
        if options.method == "pscore":
            raise ValidationError("draws input supports only the draws method")
        return "draws", payload, payload.n_draws, payload.seed
    if isinstance(payload, RankProbabilityMatrix):
        return "rank-matrix", None, None, None
    if isinstance(payload, ScoreVector):
        return "scores", None, None, None
    raise ValidationError(f"unsupported payload type {type(payload).__name__}")


def build_report(
    doc: NetworkInputDocument,
    options: ComputeOptions | None = None,
    subsets=(),
) -> HierarchyReport:
    """Compute the full certainty report for one network.

    ``subsets`` is an iterable of treatment-id lists; each is scored,
    measured, and appended to the report. Residuals and the cumulative
    series are included whenever the source carries joint ranking
    information (and n >= 3 for residuals); marginal rank matrices and
    bare score vectors yield the global POTH and scores only.
    """
    options = options or ComputeOptions()
    method, source, n_draws, seed = _resolve_source(doc, options)
    warnings = list(doc.warnings)
    tie_count = None

    if method == "draws":
        rank_probs = rank_probs_from_draws(source)
        tie_count = rank_probs.tie_count
        scores = sucra_from_rank_probs(rank_probs)
    elif method == "pscore":
        scores = pscore_from_pairwise(source)
    elif method == "rank-matrix":
        scores = sucra_from_rank_probs(doc.payload)
    else:  # bare scores
        scores = doc.payload

    poth = poth_from_scores(scores)

    residuals = None
    cumulative = None
    if source is not None:
        labels = scores.treatments.labels
        if len(labels) >= 3:
            residuals = {
                lab: float(r) for lab, r in zip(labels, poth_residuals(source))
            }
        cumulative = cumulative_poth(source)
        _, tie_warnings = best_k_order(scores)
        warnings.extend(tie_warnings)

    subset_results = []
    for ids in subsets:
        ids = tuple(ids)
        if source is None:
            raise UnsupportedSourceError(
                f"subset analysis needs joint ranking information; "
                f"a {method} input provides only marginal scores"
            )
        spec = SubsetSpec(ids=ids, kind="explicit")
        subset_results.append(
            SubsetResult(
                spec=spec,
                poth=subset_poth(source, ids),
                scores=subset_scores(source, ids),
            )
        )

    metadata = ReportMetadata(
        method=method,
        direction=doc.treatments.direction,
        n_draws=n_draws,
        seed=seed,
        tie_count=tie_count,
        warnings=tuple(warnings),
    )
    return HierarchyReport(
        poth=poth,
        scores=scores,
        metadata=metadata,
        residuals=residuals,
        cumulative=cumulative,
        subsets=tuple(subset_results),
    )
