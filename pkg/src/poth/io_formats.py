"""Parsing and serialization of all input and output documents.

JSON is the canonical machine format: self-describing documents with
``format``, ``direction``, ``treatments``, ``payload`` and optional
``metadata``. CSV is the human on-ramp; its layouts are fixed:

* reference-effects: header ``treatment,effect,se``, the reference row has
  empty effect/se; an optional companion ``covariance.csv`` holds a labeled
  square matrix over the non-reference treatments.
* pairwise: long form ``treatment_i,treatment_j,theta,se``, each unordered
  pair exactly once (the mirror is derived).
* draws: header row of treatment labels, one draw per line.
* rank-probs: header ``treatment,rank1,...,rankN``.
* scores: header ``treatment,score``.

Reports serialize to canonical JSON: sorted keys, two-space indentation,
floats at 17 significant digits, so identical analyses yield identical
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .metrics import HierarchyReport, ReportMetadata, SubsetResult, SubsetSpec
from .ranking import (
    Direction,
    PairwiseEffects,
    RankProbabilityMatrix,
    ReferenceEffects,
    ScoreVector,
    TreatmentSet,
)
from .resampling import DrawsMatrix

FORMATS = ("reference-effects", "pairwise", "draws", "rank-probs", "scores")
_ALIASES = {"reference": "reference-effects", "rank_probs": "rank-probs"}
SCORE_MEAN_WARN_TOL = 1e-8

Payload = ReferenceEffects | PairwiseEffects | DrawsMatrix | RankProbabilityMatrix | ScoreVector


@dataclass(frozen=True)
class NetworkMetadata:
    network_id: str | None = None
    effect_measure: str | None = None
    tau_estimate: float | None = None
    source_citation: str | None = None


@dataclass(frozen=True, eq=False)
class NetworkInputDocument:
    format: str
    treatments: TreatmentSet
    payload: Payload
    metadata: NetworkMetadata = NetworkMetadata()
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValidationError(f"unknown input format {self.format!r}")


def normalize_format(fmt: str | None) -> str | None:
    if fmt is None:
        return None
    fmt = _ALIASES.get(fmt, fmt)
    if fmt not in FORMATS:
        raise ValidationError(f"unknown input format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return fmt


def parse_input(
    data: bytes | str,
    declared_format: str | None = None,
    *,
    direction: str | Direction | None = None,
    network_id: str | None = None,
    covariance_csv: bytes | str | None = None,
) -> NetworkInputDocument:
    """Parse a network input document from JSON or CSV bytes.

    ``declared_format`` may be omitted for self-describing JSON and for
    CSVs whose header identifies the layout. ``direction`` (from the
    caller, e.g. a CLI flag) must agree with a JSON document's own
    direction if both are present.
    """
    declared_format = normalize_format(declared_format)
    text = _decode(data)
    if text.lstrip().startswith("{"):
        return _parse_json_document(text, declared_format, direction, network_id)
    return _parse_csv_document(text, declared_format, direction, network_id, covariance_csv)


def parse_file(
    path: str | Path,
    declared_format: str | None = None,
    *,
    direction: str | Direction | None = None,
) -> NetworkInputDocument:
    """Parse a document from disk; picks up a sibling ``covariance.csv`` if present."""
    path = Path(path)
    companion = path.parent / "covariance.csv"
    covariance_csv = companion.read_bytes() if companion.is_file() else None
    return parse_input(
        path.read_bytes(),
        declared_format,
        direction=direction,
        network_id=path.stem,
        covariance_csv=covariance_csv,
    )


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None


def _resolve_direction(
    from_document: str | None, from_caller: str | Direction | None
) -> Direction:
    doc = Direction.parse(from_document) if from_document is not None else None
    caller = Direction.parse(from_caller) if from_caller is not None else None
    if doc is not None and caller is not None and doc is not caller:
        raise ParseError(
            f"direction conflict: document says {doc.value!r} but caller requested {caller.value!r}"
        )
    return doc or caller or Direction.LARGER


# ---------------------------------------------------------------------------
# JSON documents


def _parse_json_document(text, declared_format, direction, network_id) -> NetworkInputDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("document root must be a JSON object")
    _check_keys(raw, "document", required={"format", "treatments", "payload"},
                optional={"direction", "metadata"})

    fmt = normalize_format(_expect_str(raw["format"], "format"))
    if declared_format is not None and declared_format != fmt:
        raise ParseError(f"declared format {declared_format!r} but document says {fmt!r}")

    labels = raw["treatments"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ParseError("'treatments' must be a list of strings")
    resolved = _resolve_direction(raw.get("direction"), direction)
    treatments = TreatmentSet(tuple(labels), resolved)

    metadata = _parse_metadata(raw.get("metadata"), network_id)
    payload_raw = raw["payload"]
    if not isinstance(payload_raw, dict):
        raise ParseError("'payload' must be a JSON object")

    warnings: list[str] = []
    parser = {
        "reference-effects": _json_reference,
        "pairwise": _json_pairwise,
        "draws": _json_draws,
        "rank-probs": _json_rank_probs,
        "scores": _json_scores,
    }[fmt]
    payload = parser(payload_raw, treatments, warnings)
    _note_payload_warnings(payload, warnings)
    return NetworkInputDocument(
        format=fmt, treatments=treatments, payload=payload,
        metadata=metadata, warnings=tuple(warnings),
    )


def _parse_metadata(raw, network_id) -> NetworkMetadata:
    if raw is None:
        return NetworkMetadata(network_id=network_id)
    if not isinstance(raw, dict):
        raise ParseError("'metadata' must be a JSON object")
    _check_keys(raw, "metadata", required=set(),
                optional={"network_id", "effect_measure", "tau_estimate", "source_citation"})
    tau = raw.get("tau_estimate")
    if tau is not None:
        tau = _expect_finite(tau, "metadata.tau_estimate")
    for key in ("network_id", "effect_measure", "source_citation"):
        if raw.get(key) is not None and not isinstance(raw[key], str):
            raise ParseError(f"metadata.{key} must be a string")
    return NetworkMetadata(
        network_id=raw.get("network_id") or network_id,
        effect_measure=raw.get("effect_measure"),
        tau_estimate=tau,
        source_citation=raw.get("source_citation"),
    )


def _check_keys(obj: dict, where: str, required: set, optional: set) -> None:
    missing = required - obj.keys()
    if missing:
        raise ParseError(f"{where} is missing required keys: {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise ParseError(f"{where} has unknown keys: {sorted(unknown)}")


def _expect_str(value, where: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"{where} must be a string")
    return value


def _expect_finite(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ParseError(f"{where} is not finite: {value}")
    return value


def _label_map(raw, where: str, expected_labels) -> dict[str, float]:
    if not isinstance(raw, dict):
        raise ParseError(f"{where} must map treatment labels to numbers")
    expected = set(expected_labels)
    if set(raw) != expected:
        raise ParseError(
            f"{where} labels {sorted(raw)} do not match the expected treatments {sorted(expected)}"
        )
    return {lab: _expect_finite(v, f"{where}[{lab}]") for lab, v in raw.items()}


def _matrix(raw, where: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != rows:
        raise ParseError(f"{where} must be a list of {rows} rows")
    out = np.empty((rows, cols))
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != cols:
            raise ParseError(f"{where} row {i} must have {cols} entries")
        for j, v in enumerate(row):
            out[i, j] = _expect_finite(v, f"{where}[{i}][{j}]")
    return out


def _json_reference(payload, treatments, warnings) -> ReferenceEffects:
    _check_keys(payload, "payload", required={"reference", "effects"},
                optional={"se", "covariance"})
    reference = _expect_str(payload["reference"], "payload.reference")
    non_ref = [lab for lab in treatments.labels if lab != reference]
    if len(non_ref) == treatments.n:
        raise ParseError(f"reference {reference!r} is not among the treatments")
    effects_map = _label_map(payload["effects"], "payload.effects", non_ref)
    effects = np.array([effects_map[lab] for lab in non_ref])
    k = len(non_ref)
    if payload.get("covariance") is not None:
        cov = _matrix(payload["covariance"], "payload.covariance", k, k)
    elif payload.get("se") is not None:
        se_map = _label_map(payload["se"], "payload.se", non_ref)
        cov = np.diag([se_map[lab] ** 2 for lab in non_ref])
        warnings.append(
            "covariance off-diagonals not supplied; defaulted to 0 (independent estimates)"
        )
    else:
        raise ParseError("payload must provide 'se' or 'covariance'")
    return ReferenceEffects(
        effects=effects, covariance=cov, reference=reference, treatments=treatments
    )


def _json_pairwise(payload, treatments, warnings) -> PairwiseEffects:
    _check_keys(payload, "payload", required={"comparisons"}, optional=set())
    rows = payload["comparisons"]
    if not isinstance(rows, list):
        raise ParseError("payload.comparisons must be a list")
    entries = []
    for idx, row in enumerate(rows):
        if not isinstance(row, dict):
            raise ParseError(f"comparison {idx} must be an object")
        _check_keys(row, f"comparison {idx}", required={"i", "j", "theta", "se"}, optional=set())
        entries.append((
            _expect_str(row["i"], f"comparison {idx}.i"),
            _expect_str(row["j"], f"comparison {idx}.j"),
            _expect_finite(row["theta"], f"comparison {idx}.theta"),
            _expect_finite(row["se"], f"comparison {idx}.se"),
        ))
    return _assemble_pairwise(entries, treatments)


def _assemble_pairwise(entries, treatments: TreatmentSet) -> PairwiseEffects:
    n = treatments.n
    theta = np.zeros((n, n))
    se = np.zeros((n, n))
    seen = set()
    for lab_i, lab_j, th, s in entries:
        i, j = treatments.index(lab_i), treatments.index(lab_j)
        if i == j:
            raise ParseError(f"comparison of {lab_i!r} with itself")
        key = frozenset((i, j))
        if key in seen:
            raise ParseError(f"duplicate comparison {lab_i!r} vs {lab_j!r}")
        seen.add(key)
        if s <= 0:
            raise ParseError(f"standard error for {lab_i!r} vs {lab_j!r} must be positive, got {s}")
        theta[i, j], theta[j, i] = th, -th
        se[i, j] = se[j, i] = s
    expected = n * (n - 1) // 2
    if len(seen) != expected:
        missing = next(
            (a, b)
            for i, a in enumerate(treatments.labels)
            for b in treatments.labels[i + 1 :]
            if frozenset((treatments.index(a), treatments.index(b))) not in seen
        )
        raise ParseError(f"missing comparison {missing[0]!r} vs {missing[1]!r} "
                         f"({len(seen)} of {expected} pairs supplied)")
    return PairwiseEffects(theta=theta, se=se, treatments=treatments)


def _json_draws(payload, treatments, warnings) -> DrawsMatrix:
    _check_keys(payload, "payload", required={"draws"}, optional={"seed"})
    raw = payload["draws"]
    if not isinstance(raw, list) or not raw:
        raise ParseError("payload.draws must be a non-empty list of rows")
    draws = _matrix(raw, "payload.draws", len(raw), treatments.n)
    seed = payload.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ParseError("payload.seed must be an integer")
    return DrawsMatrix(draws=draws, treatments=treatments, seed=seed, source="supplied")


def _json_rank_probs(payload, treatments, warnings) -> RankProbabilityMatrix:
    _check_keys(payload, "payload", required={"probs"}, optional=set())
    n = treatments.n
    probs = _matrix(payload["probs"], "payload.probs", n, n)
    return RankProbabilityMatrix(probs=probs, treatments=treatments)


def _json_scores(payload, treatments, warnings) -> ScoreVector:
    _check_keys(payload, "payload", required={"scores"}, optional={"kind"})
    kind = payload.get("kind", "sucra")
    score_map = _label_map(payload["scores"], "payload.scores", treatments.labels)
    scores = np.array([score_map[lab] for lab in treatments.labels])
    return ScoreVector(scores, kind=kind, treatments=treatments)


def _note_payload_warnings(payload, warnings: list[str]) -> None:
    if isinstance(payload, RankProbabilityMatrix):
        warnings.extend(payload.column_warnings)
    if isinstance(payload, ScoreVector) and payload.mean_deviation() > SCORE_MEAN_WARN_TOL:
        warnings.append(
            f"supplied scores average {float(payload.scores.mean()):.6g}; "
            "a full competing set should average 0.5"
        )


# ---------------------------------------------------------------------------
# CSV documents


def _csv_rows(text: str, where: str) -> list[tuple[int, list[str]]]:
    try:
        rows = [
            (line, [cell.strip() for cell in row])
            for line, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if any(cell.strip() for cell in row)
        ]
    except csv.Error as exc:
        raise ParseError(f"{where}: malformed CSV: {exc}") from None
    if len(rows) < 2:
        raise ParseError(f"{where}: expected a header row and at least one data row")
    return rows


def _csv_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"line {line}, {column}: {cell!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(f"line {line}, {column}: value is not finite")
    return value


def _sniff_csv_format(header: list[str]) -> str:
    if header == ["treatment", "effect", "se"]:
        return "reference-effects"
    if header == ["treatment_i", "treatment_j", "theta", "se"]:
        return "pairwise"
    if header == ["treatment", "score"]:
        return "scores"
    if (
        len(header) >= 3
        and header[0] == "treatment"
        and all(h == f"rank{k}" for k, h in enumerate(header[1:], start=1))
    ):
        return "rank-probs"
    return "draws"


def _parse_csv_document(
    text, declared_format, direction, network_id, covariance_csv
) -> NetworkInputDocument:
    rows = _csv_rows(text, "input")
    fmt = declared_format or _sniff_csv_format(rows[0][1])
    resolved = Direction.parse(direction) if direction is not None else Direction.LARGER
    warnings: list[str] = []
    parser = {
        "reference-effects": _csv_reference,
        "pairwise": _csv_pairwise,
        "draws": _csv_draws,
        "rank-probs": _csv_rank_probs,
        "scores": _csv_scores,
    }[fmt]
    treatments, payload = parser(rows, resolved, warnings, covariance_csv)
    _note_payload_warnings(payload, warnings)
    return NetworkInputDocument(
        format=fmt, treatments=treatments, payload=payload,
        metadata=NetworkMetadata(network_id=network_id), warnings=tuple(warnings),
    )


def _require_header(rows, expected: list[str]) -> None:
    line, header = rows[0]
    if header != expected:
        raise ParseError(f"line {line}: expected header {','.join(expected)!r}, got {','.join(header)!r}")


def _csv_reference(rows, direction, warnings, covariance_csv):
    _require_header(rows, ["treatment", "effect", "se"])
    labels: list[str] = []
    reference = None
    effects: dict[str, float] = {}
    ses: dict[str, float] = {}
    for line, row in rows[1:]:
        if len(row) != 3:
            raise ParseError(f"line {line}: expected 3 cells, got {len(row)}")
        label, effect, se = row
        labels.append(label)
        if effect == "" and se == "":
            if reference is not None:
                raise ParseError(f"line {line}: second reference row (empty effect/se)")
            reference = label
            continue
        if effect == "" or se == "":
            raise ParseError(f"line {line}: effect and se must both be present (or both empty for the reference)")
        effects[label] = _csv_float(effect, line, "effect")
        ses[label] = _csv_float(se, line, "se")
    if reference is None:
        raise ParseError("no reference row found (one row must leave effect and se empty)")
    treatments = TreatmentSet(tuple(labels), direction)
    non_ref = [lab for lab in labels if lab != reference]
    effects_vec = np.array([effects[lab] for lab in non_ref])
    if covariance_csv is not None:
        cov = _csv_covariance(_decode(covariance_csv), non_ref)
    else:
        cov = np.diag([ses[lab] ** 2 for lab in non_ref])
        warnings.append(
            "covariance off-diagonals not supplied; defaulted to 0 (independent estimates)"
        )
    payload = ReferenceEffects(
        effects=effects_vec, covariance=cov, reference=reference, treatments=treatments
    )
    return treatments, payload


def _csv_covariance(text: str, non_ref: list[str]) -> np.ndarray:
    rows = _csv_rows(text, "covariance.csv")
    line, header = rows[0]
    if header[0] not in ("", "treatment") or header[1:] != non_ref:
        raise ParseError(
            f"covariance.csv line {line}: header labels must be the non-reference "
            f"treatments in order: {non_ref}"
        )
    k = len(non_ref)
    if len(rows) - 1 != k:
        raise ParseError(f"covariance.csv: expected {k} rows, got {len(rows) - 1}")
    cov = np.empty((k, k))
    for i, (line, row) in enumerate(rows[1:]):
        if row[0] != non_ref[i]:
            raise ParseError(f"covariance.csv line {line}: row label {row[0]!r}, expected {non_ref[i]!r}")
        if len(row) != k + 1:
            raise ParseError(f"covariance.csv line {line}: expected {k + 1} cells")
        for j, cell in enumerate(row[1:]):
            cov[i, j] = _csv_float(cell, line, f"column {non_ref[j]}")
    return cov


def _csv_pairwise(rows, direction, warnings, covariance_csv):
    _require_header(rows, ["treatment_i", "treatment_j", "theta", "se"])
    labels: list[str] = []
    entries = []
    for line, row in rows[1:]:
        if len(row) != 4:
            raise ParseError(f"line {line}: expected 4 cells, got {len(row)}")
        lab_i, lab_j, theta, se = row
        for lab in (lab_i, lab_j):
            if lab not in labels:
                labels.append(lab)
        entries.append((lab_i, lab_j,
                        _csv_float(theta, line, "theta"),
                        _csv_float(se, line, "se")))
    treatments = TreatmentSet(tuple(labels), direction)
    return treatments, _assemble_pairwise(entries, treatments)


def _csv_draws(rows, direction, warnings, covariance_csv):
    _, header = rows[0]
    treatments = TreatmentSet(tuple(header), direction)
    n = treatments.n
    draws = np.empty((len(rows) - 1, n))
    for d, (line, row) in enumerate(rows[1:]):
        if len(row) != n:
            raise ParseError(f"line {line}: expected {n} values, got {len(row)}")
        for j, cell in enumerate(row):
            draws[d, j] = _csv_float(cell, line, f"column {header[j]}")
    return treatments, DrawsMatrix(draws=draws, treatments=treatments, source="supplied")


def _csv_rank_probs(rows, direction, warnings, covariance_csv):
    _, header = rows[0]
    n = len(rows) - 1
    expected = ["treatment"] + [f"rank{k}" for k in range(1, n + 1)]
    if header != expected:
        raise ParseError(
            f"expected header {','.join(expected)!r} for a {n}-treatment rank matrix, "
            f"got {','.join(header)!r}"
        )
    labels = []
    probs = np.empty((n, n))
    for i, (line, row) in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise ParseError(f"line {line}: expected {n + 1} cells, got {len(row)}")
        labels.append(row[0])
        for k, cell in enumerate(row[1:]):
            probs[i, k] = _csv_float(cell, line, f"rank{k + 1}")
    treatments = TreatmentSet(tuple(labels), direction)
    return treatments, RankProbabilityMatrix(probs=probs, treatments=treatments)


def _csv_scores(rows, direction, warnings, covariance_csv):
    _require_header(rows, ["treatment", "score"])
    labels = []
    values = []
    for line, row in rows[1:]:
        if len(row) != 2:
            raise ParseError(f"line {line}: expected 2 cells, got {len(row)}")
        labels.append(row[0])
        values.append(_csv_float(row[1], line, "score"))
    treatments = TreatmentSet(tuple(labels), direction)
    return treatments, ScoreVector(np.array(values), kind="sucra", treatments=treatments)


# ---------------------------------------------------------------------------
# Canonical JSON


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite value {x!r}")
    return format(x + 0.0, ".17g")  # +0.0 normalizes -0.0


def canonical_json(value) -> str:
    """Deterministic JSON: sorted keys, 2-space indent, floats at 17 digits."""
    out: list[str] = []
    _emit(value, out, 0)
    out.append("\n")
    return "".join(out)


def _emit(value, out: list[str], level: int) -> None:
    pad = "  " * (level + 1)
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        out.append(_format_float(float(value)))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise ValidationError(f"JSON object keys must be strings, got {key!r}")
            out.append(("," if i else "") + "\n" + pad + json.dumps(key) + ": ")
            _emit(value[key], out, level + 1)
        out.append("\n" + "  " * level + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[")
        for i, item in enumerate(value):
            out.append(("," if i else "") + "\n" + pad)
            _emit(item, out, level + 1)
        out.append("\n" + "  " * level + "]")
    else:
        raise ValidationError(f"cannot serialize {type(value).__name__} to JSON")


# ---------------------------------------------------------------------------
# Reports


def write_report(report: HierarchyReport) -> bytes:
    """Serialize a report to canonical JSON bytes (byte-stable across reruns)."""
    n = report.scores.n
    labels = report.scores.treatments.labels
    doc = {
        "poth": report.poth,
        "kind": report.scores.kind,
        "scores": report.scores.as_dict(),
        "residuals": dict(report.residuals) if report.residuals is not None else None,
        "cumulative": (
            [report.cumulative[k] for k in range(2, n + 1)]
            if report.cumulative is not None
            else None
        ),
        "subsets": [
            {
                "ids": list(s.spec.ids),
                "kind": s.spec.kind,
                "param": s.spec.param,
                "poth": s.poth,
                "scores": s.scores.as_dict(),
            }
            for s in report.subsets
        ],
        "metadata": {
            "method": report.metadata.method,
            "direction": report.metadata.direction.value,
            "n_draws": report.metadata.n_draws,
            "seed": report.metadata.seed,
            "tie_count": report.metadata.tie_count,
            "treatments": list(labels),
            "warnings": list(report.metadata.warnings),
        },
    }
    return canonical_json(doc).encode("utf-8")


def read_report(data: bytes | str) -> HierarchyReport:
    """Inverse of ``write_report``."""
    try:
        raw = json.loads(_decode(data))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid report JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("report root must be a JSON object")
    _check_keys(
        raw, "report",
        required={"poth", "kind", "scores", "residuals", "cumulative", "subsets", "metadata"},
        optional=set(),
    )
    meta_raw = raw["metadata"]
    _check_keys(
        meta_raw, "report metadata",
        required={"method", "direction", "n_draws", "seed", "tie_count", "treatments", "warnings"},
        optional=set(),
    )
    treatments = TreatmentSet(tuple(meta_raw["treatments"]), Direction.parse(meta_raw["direction"]))
    labels = treatments.labels
    scores_map = _label_map(raw["scores"], "report scores", labels)
    scores = ScoreVector(
        np.array([scores_map[lab] for lab in labels]), kind=raw["kind"], treatments=treatments
    )
    residuals = None
    if raw["residuals"] is not None:
        res_map = _label_map(raw["residuals"], "report residuals", labels)
        residuals = {lab: res_map[lab] for lab in labels}
    cumulative = None
    if raw["cumulative"] is not None:
        series = raw["cumulative"]
        if not isinstance(series, list) or len(series) != treatments.n - 1:
            raise ParseError("cumulative series must have one entry per k = 2..n")
        cumulative = {
            k: _expect_finite(v, f"cumulative[{k}]") for k, v in enumerate(series, start=2)
        }
    subsets = []
    for idx, s in enumerate(raw["subsets"]):
        _check_keys(s, f"subset {idx}", required={"ids", "kind", "param", "poth", "scores"},
                    optional=set())
        sub_treatments = TreatmentSet(tuple(s["ids"]), treatments.direction)
        sub_scores_map = _label_map(s["scores"], f"subset {idx} scores", sub_treatments.labels)
        subsets.append(
            SubsetResult(
                spec=SubsetSpec(ids=tuple(s["ids"]), kind=s["kind"], param=s["param"]),
                poth=_expect_finite(s["poth"], f"subset {idx} poth"),
                scores=ScoreVector(
                    np.array([sub_scores_map[lab] for lab in sub_treatments.labels]),
                    kind=scores.kind,
                    treatments=sub_treatments,
                ),
            )
        )
    metadata = ReportMetadata(
        method=meta_raw["method"],
        direction=treatments.direction,
        n_draws=meta_raw["n_draws"],
        seed=meta_raw["seed"],
        tie_count=meta_raw["tie_count"],
        warnings=tuple(meta_raw["warnings"]),
    )
    return HierarchyReport(
        poth=_expect_finite(raw["poth"], "poth"),
        scores=scores,
        metadata=metadata,
        residuals=residuals,
        cumulative=cumulative,
        subsets=tuple(subsets),
    )


# ---------------------------------------------------------------------------
# Document serialization (canonical JSON), used for corpus generation and
# round-trip testing.


def write_input(doc: NetworkInputDocument) -> bytes:
    payload = doc.payload
    if isinstance(payload, ReferenceEffects):
        non_ref = payload.non_reference_labels
        body = {
            "reference": payload.reference,
            "effects": {lab: float(v) for lab, v in zip(non_ref, payload.effects)},
            "covariance": [[float(v) for v in row] for row in payload.covariance],
        }
    elif isinstance(payload, PairwiseEffects):
        labels = payload.treatments.labels
        body = {
            "comparisons": [
                {
                    "i": labels[i],
                    "j": labels[j],
                    "theta": float(payload.theta[i, j]),
                    "se": float(payload.se[i, j]),
                }
                for i in range(payload.n)
                for j in range(i + 1, payload.n)
            ]
        }
    elif isinstance(payload, DrawsMatrix):
        body = {"draws": [[float(v) for v in row] for row in payload.draws]}
        if payload.seed is not None:
            body["seed"] = payload.seed
    elif isinstance(payload, RankProbabilityMatrix):
        body = {"probs": [[float(v) for v in row] for row in payload.probs]}
    elif isinstance(payload, ScoreVector):
        body = {"kind": payload.kind, "scores": payload.as_dict()}
    else:
        raise ValidationError(f"cannot serialize payload of type {type(payload).__name__}")

    meta = {
        key: value
        for key, value in (
            ("network_id", doc.metadata.network_id),
            ("effect_measure", doc.metadata.effect_measure),
            ("tau_estimate", doc.metadata.tau_estimate),
            ("source_citation", doc.metadata.source_citation),
        )
        if value is not None
    }
    out = {
        "format": doc.format,
        "direction": doc.treatments.direction.value,
        "treatments": list(doc.treatments.labels),
        "payload": body,
    }
    if meta:
        out["metadata"] = meta
    return canonical_json(out).encode("utf-8")
