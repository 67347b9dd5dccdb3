"""Deterministic structured-answer scoring.

Every answer row is an AnswerNode (a leaf atom, a structured numerical
record, or a structured text record).  Each atom subtype has a fixed
comparator returning a score in [0, 1]; field scores combine the atom
comparator with the unit-mapped rationale judge, and the row score is the
unweighted mean over fields with a defined score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from datetime import datetime
from importlib import resources
from typing import Optional

ATOM_SUBTYPES = (
    "binary",
    "categorical",
    "ordinal",
    "integer_count",
    "numeric_scalar",
    "duration",
    "timestamp",
    "interval",
    "event_list",
)

ROW_KINDS = ("leaf", "structured_numerical", "structured_text")

# Fixed tolerance bands (seconds).
TIMESTAMP_FULL_BAND_S = 3600.0
TIMESTAMP_HALF_BAND_S = 86400.0
EVENT_MATCH_BAND_S = 3600.0
IOU_FLOOR_S = 1e-9


def _norm_label(label: str) -> str:
    return " ".join(str(label).strip().lower().replace("_", " ").split())


def _load_asset(name: str) -> dict:
    text = resources.files("tsforge.assets").joinpath(name).read_text()
    return json.loads(text)


def load_synonyms() -> dict[str, str]:
    """Flatten the synonym asset to a label -> canonical-bucket map."""
    table = _load_asset("synonyms.json")
    flat: dict[str, str] = {}
    for canonical, labels in table.items():
        flat[canonical] = canonical
        for label in labels:
            flat[_norm_label(label)] = canonical
    return flat


def load_hierarchies() -> dict[str, list[str]]:
    return _load_asset("hierarchies.json")


_SYNONYMS = load_synonyms()
_HIERARCHIES = load_hierarchies()


def canonicalize(label: str, synonym_table: Optional[dict[str, str]] = None) -> str:
    table = synonym_table if synonym_table is not None else _SYNONYMS
    norm = _norm_label(label)
    return table.get(norm, norm)


def parse_timestamp(value) -> datetime:
    if isinstance(value, datetime):
        return value
    if isinstance(value, (int, float)):
        return datetime.fromtimestamp(float(value))
    s = str(value).strip().replace("T", " ")
    for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d"):
        try:
            return datetime.strptime(s, fmt)
        except ValueError:
            continue
    raise ValueError(f"unparseable timestamp: {value!r}")


# ---------------------------------------------------------------------------
# Answer structures


@dataclass
class Atom:
    subtype: str
    value: object
    unit: Optional[str] = None

    def __post_init__(self):
        if self.subtype not in ATOM_SUBTYPES:
            raise ValueError(f"unknown atom subtype: {self.subtype}")

    def to_dict(self) -> dict:
        value = self.value
        if self.subtype == "timestamp":
            value = parse_timestamp(value).isoformat(sep=" ")
        elif self.subtype == "interval":
            a, b = value
            value = [parse_timestamp(a).isoformat(sep=" "), parse_timestamp(b).isoformat(sep=" ")]
        elif self.subtype == "event_list":
            value = [[label, parse_timestamp(t).isoformat(sep=" ")] for label, t in value]
        d = {"subtype": self.subtype, "value": value}
        if self.unit:
            d["unit"] = self.unit
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Atom":
        return cls(subtype=d["subtype"], value=d["value"], unit=d.get("unit"))


@dataclass
class AnswerField:
    atom: Optional[Atom] = None
    rationale: Optional[str] = None

    def to_dict(self) -> dict:
        d: dict = {}
        if self.atom is not None:
            d["atom"] = self.atom.to_dict()
        if self.rationale is not None:
            d["rationale"] = self.rationale
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerField":
        atom = Atom.from_dict(d["atom"]) if d.get("atom") else None
        return cls(atom=atom, rationale=d.get("rationale"))


@dataclass
class AnswerNode:
    kind: str
    fields: dict[str, AnswerField] = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ROW_KINDS:
            raise ValueError(f"unknown row kind: {self.kind}")

    def validate(self) -> None:
        atoms = [f for f in self.fields.values() if f.atom is not None]
        if self.kind == "leaf":
            if len(self.fields) != 1 or len(atoms) != 1:
                raise ValueError("leaf row must have exactly one atom-bearing field")
        elif self.kind == "structured_numerical":
            if not atoms:
                raise ValueError("structured_numerical row needs at least one atom")
            if any(f.rationale for f in self.fields.values()):
                raise ValueError("structured_numerical row carries no rationales")
        else:
            if not self.fields:
                raise ValueError("structured_text row needs at least one field")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "fields": {k: f.to_dict() for k, f in self.fields.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerNode":
        return cls(
            kind=d["kind"],
            fields={k: AnswerField.from_dict(v) for k, v in d.get("fields", {}).items()},
        )


@dataclass
class ScoreRecord:
    field_scores: dict[str, dict]
    row_score: float
    provenance: str
    flags: list[str] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "field_scores": self.field_scores,
            "row_score": self.row_score,
            "provenance": self.provenance,
            "flags": self.flags,
        }


# ---------------------------------------------------------------------------
# Atomic comparators


def score_binary(pred, gold) -> float:
    return 1.0 if _norm_label(pred) == _norm_label(gold) else 0.0


def score_categorical(pred, gold, synonym_table: Optional[dict[str, str]] = None) -> float:
    return 1.0 if canonicalize(pred, synonym_table) == canonicalize(gold, synonym_table) else 0.0


def score_ordinal(pred, gold, hierarchies: Optional[dict[str, list[str]]] = None) -> float:
    hier = hierarchies if hierarchies is not None else _HIERARCHIES
    p, g = _norm_label(pred), _norm_label(gold)
    # The gold label picks the hierarchy; a shared label ("moderate") is
    # resolved in gold's favor.
    for labels in hier.values():
        normed = [_norm_label(x) for x in labels]
        if g in normed:
            if p not in normed:
                continue
            d = abs(normed.index(p) - normed.index(g))
            if d == 0:
                return 1.0
            if d == 1:
                return 0.5
            if d == 2:
                return 0.25
            return 0.0
    return 0.0


def score_count(pred, gold) -> float:
    p, g = int(pred), int(gold)
    if p == g:
        return 1.0
    if abs(p - g) == 1:
        return 0.5
    return 0.0


def score_relative(pred, gold) -> float:
    y_hat, y = float(pred), float(gold)
    r = abs(y_hat - y) / max(abs(y), 1.0)
    if r <= 0.05:
        return 1.0
    if r <= 0.10:
        return 0.5
    return 0.0


def score_duration(pred_seconds, gold_seconds) -> float:
    return score_relative(float(pred_seconds), float(gold_seconds))


def score_timestamp(pred, gold) -> float:
    dt = abs((parse_timestamp(pred) - parse_timestamp(gold)).total_seconds())
    if dt <= TIMESTAMP_FULL_BAND_S:
        return 1.0
    if dt <= TIMESTAMP_HALF_BAND_S:
        return 0.5
    return 0.0


def score_interval(pred, gold) -> float:
    p0, p1 = (parse_timestamp(pred[0]), parse_timestamp(pred[1]))
    g0, g1 = (parse_timestamp(gold[0]), parse_timestamp(gold[1]))
    if p0 > p1:
        p0, p1 = p1, p0
    if g0 > g1:
        g0, g1 = g1, g0
    if p0 == p1 and g0 == g1:
        return 1.0 if p0 == g0 else 0.0
    inter = (min(p1, g1) - max(p0, g0)).total_seconds()
    inter = max(inter, 0.0)
    union = (max(p1, g1) - min(p0, g0)).total_seconds()
    return inter / max(union, IOU_FLOOR_S)


def score_event_list(pred, gold, synonym_table: Optional[dict[str, str]] = None) -> float:
    gold_events = [(canonicalize(lbl, synonym_table), parse_timestamp(t)) for lbl, t in gold]
    pred_events = [(canonicalize(lbl, synonym_table), parse_timestamp(t)) for lbl, t in pred]
    if not gold_events and not pred_events:
        return 1.0
    unmatched = list(range(len(pred_events)))
    matched = 0
    for g_label, g_time in gold_events:
        best = None
        best_off = None
        for j in unmatched:
            p_label, p_time = pred_events[j]
            if p_label != g_label:
                continue
            off = abs((p_time - g_time).total_seconds())
            if off > EVENT_MATCH_BAND_S:
                continue
            if best_off is None or off < best_off:
                best, best_off = j, off
        if best is not None:
            unmatched.remove(best)
            matched += 1
    return matched / max(len(pred_events), len(gold_events))


def map_likert(s: int) -> float:
    s = min(5, max(1, int(s)))
    return (s - 1) / 4.0


_COMPARATORS = {
    "binary": lambda p, g: score_binary(p.value, g.value),
    "categorical": lambda p, g: score_categorical(p.value, g.value),
    "ordinal": lambda p, g: score_ordinal(p.value, g.value),
    "integer_count": lambda p, g: score_count(p.value, g.value),
    "numeric_scalar": lambda p, g: score_relative(p.value, g.value),
    "duration": lambda p, g: score_duration(p.value, g.value),
    "timestamp": lambda p, g: score_timestamp(p.value, g.value),
    "interval": lambda p, g: score_interval(p.value, g.value),
    "event_list": lambda p, g: score_event_list(p.value, g.value),
}


def _guard(score) -> float:
    try:
        s = float(score)
    except (TypeError, ValueError):
        return 0.0
    if math.isnan(s):
        return 0.0
    return min(1.0, max(0.0, s))


def combine_field(atom_score: Optional[float], rationale_score: Optional[float]):
    """Per-field combination; `None` inputs mean the gold schema lacks that
    component (a prediction-side omission must be passed as 0.0, not None)."""
    if atom_score is not None and rationale_score is not None:
        return (atom_score + rationale_score) / 2.0
    if atom_score is not None:
        return atom_score
    if rationale_score is not None:
        return rationale_score
    return None


def score_atom(pred_atom: Optional[Atom], gold_atom: Atom) -> tuple[float, str]:
    comparator = gold_atom.subtype
    if pred_atom is None:
        return 0.0, comparator
    try:
        raw = _COMPARATORS[comparator](pred_atom, gold_atom)
    except (TypeError, ValueError, KeyError):
        raw = 0.0
    return _guard(raw), comparator


def score_row(
    pred: Optional[AnswerNode],
    gold: AnswerNode,
    provenance: str = "ok",
    rationale_scores: Optional[dict[str, float]] = None,
) -> Optional[ScoreRecord]:
    """Score one row. Returns None when the gold schema has no scoreable
    field (such rows are excluded from evaluation)."""
    rationale_scores = rationale_scores or {}
    field_scores: dict[str, dict] = {}
    flags: list[str] = []
    defined: list[float] = []

    for name, gold_field in gold.fields.items():
        pred_field = (pred.fields.get(name) if pred is not None else None) or AnswerField()
        atom_score = None
        comparator = None
        if gold_field.atom is not None:
            atom_score, comparator = score_atom(pred_field.atom, gold_field.atom)
            if gold_field.atom.subtype == "numeric_scalar" and abs(float(gold_field.atom.value)) <= 1.0:
                flags.append(f"{name}:absolute_error_regime")
        rationale_score = None
        if gold_field.rationale is not None:
            rationale_score = _guard(rationale_scores.get(name, 0.0))
            if comparator is None:
                comparator = "rationale_judge"
        f = combine_field(atom_score, rationale_score)
        if f is None:
            continue
        f = _guard(f)
        field_scores[name] = {"matched_comparator": comparator, "score": f}
        defined.append(f)

    if not defined:
        return None
    if provenance == "all_failed":
        return ScoreRecord(field_scores={}, row_score=0.0, provenance=provenance, flags=flags)
    row = sum(defined) / len(defined)
    return ScoreRecord(field_scores=field_scores, row_score=_guard(row), provenance=provenance, flags=flags)


# ---------------------------------------------------------------------------
# Headline bucket reporting

_BUCKET_BY_SUBTYPE = {
    "binary": "categorical",
    "categorical": "categorical",
    "ordinal": "categorical",
    "integer_count": "numerical",
    "numeric_scalar": "numerical",
    "timestamp": "numerical",
    "interval": "numerical",
    "duration": "numerical",
    "event_list": "numerical",
}


def row_bucket(gold: AnswerNode) -> str:
    if gold.kind == "structured_text":
        return "text"
    if gold.kind == "structured_numerical":
        return "numerical"
    atom = next(f.atom for f in gold.fields.values() if f.atom is not None)
    return _BUCKET_BY_SUBTYPE[atom.subtype]


def bucket_report(records: list[tuple[ScoreRecord, AnswerNode]]) -> dict[str, Optional[float]]:
    sums: dict[str, list[float]] = {"categorical": [], "numerical": [], "text": []}
    for record, gold in records:
        sums[row_bucket(gold)].append(record.row_score)
    return {k: (sum(v) / len(v) if v else None) for k, v in sums.items()}
