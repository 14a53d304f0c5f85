"""Triage-note records: normalization, keyword filtering, and JSONL storage.

Records arrive as raw free text plus demographics. ``preprocess`` produces the
canonical ``clean_text`` every downstream stage consumes. ``keyword_filter``
builds the focused pool and doubles as the rule-based baseline classifier via
``pattern_match``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


class Sex(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class Pool(str, Enum):
    FOCUSED = "focused"
    DEPLOYMENT = "deployment"
    SYNTHETIC = "synthetic"


class Label(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNLABELED = "unlabeled"


class LabelSource(str, Enum):
    HUMAN = "human"
    SIMULATED = "simulated"
    COUNTERFACTUAL = "counterfactual"
    NONE = "none"


class EmptyAfterStrip(ValueError):
    """Raised when stripping boilerplate leaves no note text."""


class InvalidRecord(ValueError):
    """Raised when a record violates a structural invariant."""


_WS = re.compile(r"\s+")


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass(frozen=True)
class TriageRecord:
    id: str
    raw_text: str
    clean_text: str = ""
    age: int | None = None
    sex: Sex = Sex.UNKNOWN
    site: str | None = None
    timestamp: str | None = None
    pool: Pool = Pool.FOCUSED
    label: Label = Label.UNLABELED
    label_source: LabelSource = LabelSource.NONE
    counterfactual_of: str | None = None

    def __post_init__(self) -> None:
        if self.age is not None and self.age < 0:
            raise InvalidRecord(f"{self.id}: negative age {self.age}")
        if (self.label is Label.UNLABELED) != (self.label_source is LabelSource.NONE):
            raise InvalidRecord(
                f"{self.id}: label {self.label.value} inconsistent with "
                f"label_source {self.label_source.value}"
            )
        if self.pool is Pool.SYNTHETIC and self.label_source is not LabelSource.COUNTERFACTUAL:
            raise InvalidRecord(f"{self.id}: synthetic records must be counterfactual-labeled")
        if (self.pool is Pool.SYNTHETIC) != (self.counterfactual_of is not None):
            raise InvalidRecord(f"{self.id}: counterfactual_of is set iff the record is synthetic")
        if self.clean_text and ("\t" in self.clean_text or "\n" in self.clean_text):
            raise InvalidRecord(f"{self.id}: clean_text contains tab/newline")

    def with_label(self, label: Label, source: LabelSource) -> "TriageRecord":
        return replace(self, label=label, label_source=source)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "raw_text": self.raw_text,
            "clean_text": self.clean_text,
            "age": self.age,
            "sex": self.sex.value,
            "site": self.site,
            "timestamp": self.timestamp,
            "pool": self.pool.value,
            "label": self.label.value,
            "label_source": self.label_source.value,
            "counterfactual_of": self.counterfactual_of,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TriageRecord":
        return cls(
            id=str(obj["id"]),
            raw_text=obj["raw_text"],
            clean_text=obj.get("clean_text", ""),
            age=obj.get("age"),
            sex=Sex(obj.get("sex", "unknown")),
            site=obj.get("site"),
            timestamp=obj.get("timestamp"),
            pool=Pool(obj.get("pool", "focused")),
            label=Label(obj.get("label", "unlabeled")),
            label_source=LabelSource(obj.get("label_source", "none")),
            counterfactual_of=obj.get("counterfactual_of"),
        )


@dataclass(frozen=True)
class FilterRuleSet:
    """Substring include terms plus status-phrase exclusions, all lowercase."""

    include_terms: tuple[str, ...]
    exclude_phrases: tuple[str, ...] = ()
    min_length: int = 3

    def __post_init__(self) -> None:
        if not self.include_terms:
            raise ValueError("include_terms must be non-empty")
        if self.min_length < 1:
            raise ValueError("min_length must be >= 1")
        object.__setattr__(self, "include_terms", tuple(t.lower() for t in self.include_terms))
        object.__setattr__(self, "exclude_phrases", tuple(p.lower() for p in self.exclude_phrases))

    def to_json(self) -> dict:
        return {
            "include_terms": list(self.include_terms),
            "exclude_phrases": list(self.exclude_phrases),
            "min_length": self.min_length,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FilterRuleSet":
        return cls(
            include_terms=tuple(obj["include_terms"]),
            exclude_phrases=tuple(obj.get("exclude_phrases", ())),
            min_length=int(obj.get("min_length", 3)),
        )


# Starter vocabulary: core roots, brands in local use, and diseases people are
# vaccinated against. Operators are expected to override via config.
DEFAULT_INCLUDE_TERMS = (
    "vacc",
    "vax",
    "immunis",
    "immuniz",
    "pfizer",
    "moderna",
    "astrazeneca",
    "novavax",
    "comirnaty",
    "spikevax",
    "fluvax",
    "flu shot",
    "flu vaccine",
    "mmr",
    "dtpa",
    "boostrix",
    "gardasil",
    "menactra",
    "bexsero",
    "prevenar",
    "zostavax",
    "shingrix",
    "rotarix",
    "havrix",
    "engerix",
    "tetanus shot",
    "whooping cough vaccine",
)

DEFAULT_EXCLUDE_PHRASES = (
    "fully vaxed",
    "fully vaxxed",
    "fully vaccinated",
    "triple vaxed",
    "triple vaxxed",
    "double vaxed",
    "double vaxxed",
    "covid vaccinated",
    "unvaccinated",
    "not vaccinated",
    "up to date with vaccinations",
    "vaccinations up to date",
)


def default_rules() -> FilterRuleSet:
    return FilterRuleSet(
        include_terms=DEFAULT_INCLUDE_TERMS,
        exclude_phrases=DEFAULT_EXCLUDE_PHRASES,
        min_length=3,
    )


def preprocess(record: TriageRecord, strip_patterns: Sequence[str] = ()) -> TriageRecord:
    """Build clean_text: "<age> <sex> " prefix + lowercased, stripped note.

    Missing age or sex contribute the token "unk". Stripping removes each
    literal fragment occurrence (case-insensitive) before whitespace collapse,
    so repeated application yields the same clean_text.
    """
    if not record.raw_text:
        raise EmptyAfterStrip(f"{record.id}: raw_text is empty")
    body = record.raw_text.lower()
    for pattern in strip_patterns:
        if pattern:
            body = body.replace(pattern.lower(), " ")
    body = collapse_ws(body)
    if not body:
        raise EmptyAfterStrip(f"{record.id}: nothing left after stripping")
    age_tok = "unk" if record.age is None else str(record.age)
    sex_tok = "unk" if record.sex is Sex.UNKNOWN else record.sex.value
    return replace(record, clean_text=f"{age_tok} {sex_tok} {body}")


def _contains_include_term(text: str, rules: FilterRuleSet) -> bool:
    return any(term in text for term in rules.include_terms)


def _delete_exclusions(text: str, rules: FilterRuleSet) -> str:
    # Replace with a space rather than deleting outright so fragments on
    # either side of an excised phrase can never fuse into a new match.
    for phrase in rules.exclude_phrases:
        if phrase:
            text = text.replace(phrase, " ")
    return text


def pattern_match(record: TriageRecord, rules: FilterRuleSet) -> bool:
    """Rule-based classifier: keyword present, and still present once status
    phrases are excised."""
    text = record.clean_text
    if len(text) < rules.min_length:
        return False
    if not _contains_include_term(text, rules):
        return False
    return _contains_include_term(_delete_exclusions(text, rules), rules)


def keyword_filter(
    records: Iterable[TriageRecord], rules: FilterRuleSet
) -> tuple[list[TriageRecord], list[TriageRecord]]:
    """Partition records into (retained, rejected) under the rule set."""
    retained: list[TriageRecord] = []
    rejected: list[TriageRecord] = []
    for record in records:
        (retained if pattern_match(record, rules) else rejected).append(record)
    return retained, rejected


def rejection_reason(record: TriageRecord, rules: FilterRuleSet) -> str | None:
    """Why keyword_filter rejected a record, or None if retained."""
    text = record.clean_text
    if len(text) < rules.min_length:
        return "too_short"
    if not _contains_include_term(text, rules):
        return "no_include_term"
    if not _contains_include_term(_delete_exclusions(text, rules), rules):
        return "status_phrase_only"
    return None


def read_records(path: str | Path) -> list[TriageRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(TriageRecord.from_json(json.loads(line)))
    return out


def write_records(path: str | Path, records: Iterable[TriageRecord], **extra_fields) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            obj = record.to_json()
            for key, fn in extra_fields.items():
                obj[key] = fn(record)
            fh.write(json.dumps(obj) + "\n")


@dataclass
class RecordStore:
    """In-memory id-keyed collection with serialized label writes."""

    records: dict[str, TriageRecord] = field(default_factory=dict)

    def add(self, record: TriageRecord) -> None:
        if record.id in self.records:
            raise InvalidRecord(f"duplicate record id {record.id}")
        self.records[record.id] = record

    def add_all(self, records: Iterable[TriageRecord]) -> None:
        for record in records:
            self.add(record)

    def get(self, record_id: str) -> TriageRecord:
        return self.records[record_id]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.records

    def __len__(self) -> int:
        return len(self.records)

    def set_label(self, record_id: str, label: Label, source: LabelSource) -> TriageRecord:
        updated = self.records[record_id].with_label(label, source)
        self.records[record_id] = updated
        return updated

    def in_pool(self, pool: Pool) -> list[TriageRecord]:
        return [r for r in self.records.values() if r.pool is pool]

    def labeled(self) -> list[TriageRecord]:
        return [r for r in self.records.values() if r.label is not Label.UNLABELED]

    def unlabeled_ids(self, pool: Pool) -> list[str]:
        return sorted(
            r.id for r in self.records.values() if r.pool is pool and r.label is Label.UNLABELED
        )
