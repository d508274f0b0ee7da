"""Corpus-level harness: POTH across many networks plus summary statistics.

The harness consumes a directory of JSON network documents (the canonical
self-describing format). Effects-based networks take the analytic P-score
route and also yield the proportion of significant pairwise comparisons;
draws documents are ranked directly; rank matrices and score vectors yield
POTH only. Files that fail to parse are skipped and reported, never fatal
unless nothing parses at all.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import PothError, ValidationError
from .io_formats import NetworkInputDocument, parse_file
from .pipeline import build_report
from .ranking import PairwiseEffects, ReferenceEffects, normal_cdf, pairwise_from_reference

SUMMARY_COLUMNS = ("network_id", "n_treatments", "poth", "effect_measure", "tau", "prop_significant")


@dataclass(frozen=True)
class BatchSummaryRow:
    network_id: str
    n_treatments: int
    poth: float
    effect_measure: str | None = None
    tau_estimate: float | None = None
    prop_significant: float | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.poth <= 1.0:
            raise ValidationError(f"poth must lie in [0, 1], got {self.poth}")
        if self.prop_significant is not None and not 0.0 <= self.prop_significant <= 1.0:
            raise ValidationError(f"prop_significant must lie in [0, 1], got {self.prop_significant}")
        if self.n_treatments < 2:
            raise ValidationError(f"n_treatments must be >= 2, got {self.n_treatments}")


def pearson(x, y) -> float:
    """Product-moment correlation; refuses zero-variance input."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValidationError("correlation needs at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.sqrt(np.sum(xc**2) * np.sum(yc**2)))
    if denom == 0.0:
        raise ValidationError("correlation is undefined for zero-variance input")
    return float(np.sum(xc * yc) / denom)


def spearman(x, y) -> float:
    """Rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def prop_significant(p: PairwiseEffects, alpha: float = 0.05) -> float:
    """Fraction of unordered comparisons with a two-sided z-test p-value below alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    iu, ju = np.triu_indices(p.n, k=1)
    z = np.abs(p.theta[iu, ju]) / p.se[iu, ju]
    pvalues = 2.0 * (1.0 - normal_cdf(z))
    return float(np.mean(pvalues < alpha))


def _pairwise_of(doc: NetworkInputDocument) -> PairwiseEffects | None:
    if isinstance(doc.payload, PairwiseEffects):
        return doc.payload
    if isinstance(doc.payload, ReferenceEffects):
        return pairwise_from_reference(doc.payload)
    return None


def summarize_network(doc: NetworkInputDocument, alpha: float = 0.05) -> BatchSummaryRow:
    report = build_report(doc)
    pairwise = _pairwise_of(doc)
    return BatchSummaryRow(
        network_id=doc.metadata.network_id or "unnamed",
        n_treatments=doc.treatments.n,
        poth=report.poth,
        effect_measure=doc.metadata.effect_measure,
        tau_estimate=doc.metadata.tau_estimate,
        prop_significant=prop_significant(pairwise, alpha) if pairwise is not None else None,
        warnings=report.metadata.warnings,
    )


def run_batch(directory: str | Path, alpha: float = 0.05) -> tuple[list[BatchSummaryRow], dict]:
    """Summarize every parseable JSON document in ``directory``.

    Returns the per-network rows (ordered by network id) and a summary
    dict with the POTH distribution, the rank correlation of POTH against
    network size, and per-effect-measure correlations of POTH against the
    heterogeneity estimate. Unparseable files are skipped and listed under
    ``skipped``. Output depends only on directory contents, not file
    order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"{directory} is not a directory")
    rows: list[tuple[str, BatchSummaryRow]] = []
    skipped: list[dict] = []
    for path in sorted(directory.glob("*.json")):
        try:
            row = summarize_network(parse_file(path), alpha)
        except PothError as exc:
            skipped.append({"file": path.name, "error": str(exc)})
            continue
        rows.append((path.name, row))
    if not rows:
        raise ValidationError(
            f"no parseable network documents in {directory} "
            f"({len(skipped)} file(s) skipped)"
        )
    ordered = [row for _, row in sorted(rows, key=lambda item: (item[1].network_id, item[0]))]
    return ordered, _summary_stats(ordered, skipped)


def _guarded_correlation(fn, x, y) -> float | None:
    try:
        return fn(x, y)
    except ValidationError:
        return None


def _summary_stats(rows: list[BatchSummaryRow], skipped: list[dict]) -> dict:
    poths = np.array([row.poth for row in rows])
    sizes = np.array([row.n_treatments for row in rows], dtype=float)
    q1, median, q3 = (float(q) for q in np.percentile(poths, [25, 50, 75]))

    tau_by_measure: dict[str, float | None] = {}
    measures = sorted({row.effect_measure for row in rows if row.effect_measure is not None})
    for measure in measures:
        pairs = [
            (row.poth, row.tau_estimate)
            for row in rows
            if row.effect_measure == measure and row.tau_estimate is not None
        ]
        if len(pairs) >= 2:
            p, t = zip(*pairs)
            tau_by_measure[measure] = _guarded_correlation(pearson, p, t)
        else:
            tau_by_measure[measure] = None

    return {
        "n_networks": len(rows),
        "n_skipped": len(skipped),
        "skipped": skipped,
        "poth_median": median,
        "poth_q1": q1,
        "poth_q3": q3,
        "spearman_poth_vs_n_treatments": (
            _guarded_correlation(spearman, sizes, poths) if len(rows) >= 2 else None
        ),
        "pearson_poth_vs_tau_by_measure": tau_by_measure,
    }


def write_summary_csv(rows: list[BatchSummaryRow]) -> bytes:
    """Fixed-column CSV: network_id,n_treatments,poth,effect_measure,tau,prop_significant."""

    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return str(value)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow(
            (
                cell(row.network_id),
                cell(row.n_treatments),
                cell(row.poth),
                cell(row.effect_measure),
                cell(row.tau_estimate),
                cell(row.prop_significant),
            )
        )
    return buf.getvalue().encode("utf-8")
