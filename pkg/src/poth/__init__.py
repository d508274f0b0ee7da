"""Certainty of treatment hierarchies from network meta-analysis outputs.

Computes SUCRAs, P-scores, and the POTH (precision of treatment
hierarchy) family: global POTH, subset POTH, leave-one-out residuals, and
the cumulative best-k series, from effect estimates, posterior or sampled
draws, or rank-probability matrices. Includes input/report serialization,
SVG charts, a CLI, and a corpus batch harness.
"""

from .batch import (
    BatchSummaryRow,
    pearson,
    prop_significant,
    run_batch,
    spearman,
    summarize_network,
    write_summary_csv,
)
from .errors import (
    DegenerateCovarianceError,
    InconsistentScoresError,
    NotPositiveSemidefiniteError,
    NumericalError,
    ParseError,
    PothError,
    UnsupportedSourceError,
    ValidationError,
)
from .io_formats import (
    NetworkInputDocument,
    NetworkMetadata,
    canonical_json,
    parse_file,
    parse_input,
    read_report,
    write_input,
    write_report,
)
from .metrics import (
    HierarchyReport,
    ReportMetadata,
    SubsetResult,
    SubsetSpec,
    avg_rank_variance,
    cumulative_poth,
    max_variance,
    poth_from_rank_probs,
    poth_from_scores,
    poth_residuals,
    score_variance,
    scores_from_source,
    subset_poth,
    subset_scores,
    variance_from_expected_ranks,
)
from .pipeline import ComputeOptions, build_report
from .plots import render_plot
from .ranking import (
    Direction,
    PairwiseEffects,
    RankProbabilityMatrix,
    ReferenceEffects,
    ScoreVector,
    TreatmentSet,
    expected_rank,
    normal_cdf,
    pairwise_from_reference,
    pscore_from_pairwise,
    subset_pscore,
    sucra_from_expected_rank,
    sucra_from_rank_probs,
)
from .resampling import (
    DEFAULT_N_DRAWS,
    DrawsMatrix,
    rank_probs_from_draws,
    sample_mvn,
    subset_rank_probs_from_draws,
    sucra_from_draws,
)

__version__ = "0.1.0"
