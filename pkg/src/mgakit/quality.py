"""Completeness and consistency scoring for metadata collections.

A record is a flat field→value map; an ElementSpec says which fields a
complete record must or should carry and how known value variants map
to canonical spellings.  Scores are exact rationals (required fields
present / required fields total) so reports compare without float
drift; the collection view adds min/mean/max and a decile histogram.

Consistency looks across records: every observed raw value is mapped
through the normalization table (identity when unmapped) and a field is
consistent only when each canonical class is spelled exactly one way.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import MgaError
from .metamodel import Project, SchemaViolation

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"
SEVERITY_INFO = "info"

_SPEC_NS = "urn:mga:project:1"


class QualityError(MgaError):
    pass


class EmptySpec(QualityError):
    pass


class EmptyCollection(QualityError):
    pass


class InvalidElementSpec(QualityError):
    pass


class UnknownField(QualityError):
    pass


@dataclass(frozen=True)
class ElementSpec:
    required: frozenset[str]
    recommended: frozenset[str] = frozenset()
    normalization: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        overlap = self.required & self.recommended
        if overlap:
            raise InvalidElementSpec(
                f"fields {sorted(overlap)} are both required and recommended"
            )
        for fname, mapping in self.normalization.items():
            for raw, canonical in mapping.items():
                if mapping.get(canonical, canonical) != canonical:
                    raise InvalidElementSpec(
                        f"normalization for {fname!r} is not idempotent: "
                        f"{raw!r} -> {canonical!r} -> {mapping[canonical]!r}"
                    )

    @property
    def known_fields(self) -> list[str]:
        return sorted(self.required | self.recommended | set(self.normalization))


@dataclass
class Completeness:
    score: Fraction
    missing_required: list[str]
    missing_recommended: list[str]


@dataclass
class FieldConsistency:
    field: str
    classes: dict[str, list[str]]  # canonical -> sorted raw variants
    consistent: bool
    unknown_variants: list[str]


@dataclass
class RecordScore:
    record_id: str
    completeness: Completeness


@dataclass
class CollectionStats:
    mean: Fraction
    min: Fraction
    max: Fraction
    histogram: list[int]  # deciles [0,0.1) .. [0.9,1.0]


@dataclass(frozen=True)
class QualityFinding:
    severity: str
    code: str
    record_id: str | None
    field: str | None
    message: str


@dataclass
class QualityReport:
    per_record: list[RecordScore]
    collection: CollectionStats
    consistency: dict[str, FieldConsistency]
    findings: list[QualityFinding]

    @property
    def has_errors(self) -> bool:
        return any(f.severity == SEVERITY_ERROR for f in self.findings)

    def to_json_dict(self) -> dict:
        return {
            "per_record": [
                {
                    "record_id": r.record_id,
                    "completeness_score": str(r.completeness.score),
                    "missing_required": r.completeness.missing_required,
                    "missing_recommended": r.completeness.missing_recommended,
                }
                for r in self.per_record
            ],
            "collection": {
                "mean": str(self.collection.mean),
                "min": str(self.collection.min),
                "max": str(self.collection.max),
                "histogram": self.collection.histogram,
            },
            "consistency": {
                name: {
                    "consistent": fc.consistent,
                    "classes": {c: fc.classes[c] for c in sorted(fc.classes)},
                    "unknown_variants": fc.unknown_variants,
                }
                for name, fc in self.consistency.items()
            },
            "findings": [
                {
                    "severity": f.severity,
                    "code": f.code,
                    "record_id": f.record_id,
                    "field": f.field,
                    "message": f.message,
                }
                for f in self.findings
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        lines = ["record            score  missing"]
        for r in self.per_record:
            missing = ",".join(r.completeness.missing_required) or "-"
            lines.append(
                f"{r.record_id:<16}  {str(r.completeness.score):>5}  {missing}"
            )
        c = self.collection
        lines.append(f"collection: mean {c.mean}  min {c.min}  max {c.max}")
        inconsistent = [n for n, fc in self.consistency.items() if not fc.consistent]
        lines.append(
            "inconsistent fields: " + (", ".join(inconsistent) if inconsistent else "none")
        )
        for f in self.findings:
            where = f.record_id or "*"
            lines.append(f"[{f.severity}] {f.code} {where}.{f.field or '*'}: {f.message}")
        return "\n".join(lines) + "\n"


def _is_present(value: object) -> bool:
    if value is None:
        return False
    if isinstance(value, str):
        return bool(value.strip())
    if isinstance(value, (list, tuple, set, frozenset, dict)):
        return len(value) > 0
    return True


def _raw_strings(value: object) -> list[str]:
    # Collections contribute each element as its own observed variant.
    if isinstance(value, (list, tuple, set, frozenset)):
        return sorted(str(v) for v in value)
    return [str(value)]


def completeness(record: Mapping[str, object], spec: ElementSpec) -> Completeness:
    """Required-field coverage of one record, as an exact fraction."""
    if not spec.required:
        raise EmptySpec("completeness is undefined for an empty required set")
    missing_required = sorted(
        f for f in spec.required if not _is_present(record.get(f))
    )
    missing_recommended = sorted(
        f for f in spec.recommended if not _is_present(record.get(f))
    )
    present = len(spec.required) - len(missing_required)
    return Completeness(
        score=Fraction(present, len(spec.required)),
        missing_required=missing_required,
        missing_recommended=missing_recommended,
    )


def consistency(
    records: Mapping[str, Mapping[str, object]], field_name: str, spec: ElementSpec
) -> FieldConsistency:
    """Group one field's observed raw values into canonical classes."""
    if field_name not in spec.known_fields:
        raise UnknownField(f"field {field_name!r} is not part of the spec")
    mapping = spec.normalization.get(field_name, {})
    known_values = set(mapping) | set(mapping.values())
    classes: dict[str, set[str]] = {}
    unknown: list[str] = []
    for record in records.values():
        value = record.get(field_name)
        if not _is_present(value):
            continue
        for raw in _raw_strings(value):
            canonical = mapping.get(raw, raw)
            classes.setdefault(canonical, set()).add(raw)
            if mapping and raw not in known_values and raw not in unknown:
                unknown.append(raw)
    return FieldConsistency(
        field=field_name,
        classes={c: sorted(v) for c, v in classes.items()},
        consistent=all(len(v) == 1 for v in classes.values()),
        unknown_variants=unknown,
    )


def assess(
    records: Mapping[str, Mapping[str, object]],
    spec: ElementSpec,
    reference: Mapping[str, Mapping[str, object]] | None = None,
) -> QualityReport:
    """Full report: per-record completeness, collection stats, consistency.

    The optional reference collection is a second source keyed by the
    same record ids; fields whose values disagree between the two are
    reported as DIVERGENT_VALUE errors.
    """
    if not records:
        raise EmptyCollection("no records to assess")

    findings: list[QualityFinding] = []
    per_record: list[RecordScore] = []
    for record_id, record in records.items():
        comp = completeness(record, spec)
        per_record.append(RecordScore(record_id, comp))
        for f in comp.missing_required:
            findings.append(
                QualityFinding(
                    SEVERITY_ERROR, "MISSING_REQUIRED", record_id, f,
                    f"required field {f!r} is missing or empty",
                )
            )
        for f in comp.missing_recommended:
            findings.append(
                QualityFinding(
                    SEVERITY_INFO, "MISSING_RECOMMENDED", record_id, f,
                    f"recommended field {f!r} is missing or empty",
                )
            )

    scores = [r.completeness.score for r in per_record]
    histogram = [0] * 10
    for s in scores:
        histogram[min(9, int(s * 10))] += 1
    stats = CollectionStats(
        mean=Fraction(sum(scores), len(scores)),
        min=min(scores),
        max=max(scores),
        histogram=histogram,
    )

    consistency_by_field: dict[str, FieldConsistency] = {}
    for field_name in spec.known_fields:
        fc = consistency(records, field_name, spec)
        consistency_by_field[field_name] = fc
        for raw in fc.unknown_variants:
            carrier = next(
                rid
                for rid, rec in records.items()
                if _is_present(rec.get(field_name))
                and raw in _raw_strings(rec.get(field_name))
            )
            findings.append(
                QualityFinding(
                    SEVERITY_WARNING, "UNKNOWN_VARIANT", carrier, field_name,
                    f"value {raw!r} is not a known variant of {field_name!r}",
                )
            )
        if not fc.consistent:
            variants = {c: v for c, v in fc.classes.items() if len(v) > 1}
            findings.append(
                QualityFinding(
                    SEVERITY_WARNING, "INCONSISTENT_FIELD", None, field_name,
                    f"multiple spellings per canonical class: {variants}",
                )
            )

    if reference is not None:
        for record_id, record in records.items():
            other = reference.get(record_id)
            if other is None:
                continue
            for field_name in spec.known_fields:
                mine, theirs = record.get(field_name), other.get(field_name)
                if not (_is_present(mine) and _is_present(theirs)):
                    continue
                if _raw_strings(mine) != _raw_strings(theirs):
                    findings.append(
                        QualityFinding(
                            SEVERITY_ERROR, "DIVERGENT_VALUE", record_id, field_name,
                            f"{_raw_strings(mine)} here vs {_raw_strings(theirs)} "
                            "in the reference collection",
                        )
                    )

    return QualityReport(per_record, stats, consistency_by_field, findings)


def validate_project(
    project: Project,
    spec: ElementSpec,
    reference: Mapping[str, Mapping[str, object]] | None = None,
) -> QualityReport:
    """Assess a Project's segments as records.

    Each segment contributes label, loi, topics, location, timestamp,
    and inherits the programme's formal keys.
    """
    records = {s.id: segment_record(project, s.id) for s in project.segments}
    return assess(records, spec, reference)


def segment_record(project: Project, segment_id: str) -> dict[str, object]:
    segment = project.segment_by_id(segment_id)
    if segment is None:
        raise UnknownField(f"no segment {segment_id!r} in project")
    record: dict[str, object] = dict(project.programme.formal)
    record.update(
        label=segment.label,
        loi=segment.loi,
        topics=set(segment.topics),
        location=(
            f"{segment.location.lat!r},{segment.location.lon!r}"
            if segment.location is not None
            else None
        ),
        timestamp=(
            segment.timestamp.isoformat() if segment.timestamp is not None else None
        ),
    )
    return record


def element_spec_from_xml(text: str) -> ElementSpec:
    """Read an ElementSpec from its XML form.

    <elementSpec xmlns="urn:mga:project:1">
      <required field="label"/>
      <recommended field="location"/>
      <normalize field="topics"><variant raw="Sport" canonical="sport"/></normalize>
    </elementSpec>
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SchemaViolation(f"/elementSpec: not well-formed XML ({exc})") from None
    if root.tag != f"{{{_SPEC_NS}}}elementSpec":
        raise SchemaViolation(
            f"/elementSpec: root element is {root.tag!r}, not elementSpec"
        )

    def fields_of(tag: str) -> frozenset[str]:
        names = []
        for e in root.findall(f"{{{_SPEC_NS}}}{tag}"):
            name = e.get("field")
            if not name:
                raise SchemaViolation(f"/elementSpec/{tag}/@field missing")
            names.append(name)
        return frozenset(names)

    normalization: dict[str, dict[str, str]] = {}
    for n in root.findall(f"{{{_SPEC_NS}}}normalize"):
        fname = n.get("field")
        if not fname:
            raise SchemaViolation("/elementSpec/normalize/@field missing")
        mapping = normalization.setdefault(fname, {})
        for v in n.findall(f"{{{_SPEC_NS}}}variant"):
            raw, canonical = v.get("raw"), v.get("canonical")
            if raw is None or canonical is None:
                raise SchemaViolation(
                    "/elementSpec/normalize/variant needs raw and canonical"
                )
            mapping[raw] = canonical
    return ElementSpec(fields_of("required"), fields_of("recommended"), normalization)
