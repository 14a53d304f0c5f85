"""Counterfactual label-flip augmentation.

A positive note becomes a synthetic negative by removing the span that
carries the class signal (the vaccine linkage); a negative becomes a
synthetic positive by inserting such a span at a chosen token position.
Every pair stores the exact characters moved and where, so the source
text is recoverable byte for byte from the synthetic text.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from .datasets import LabeledDataset
from .records import (
    FilterRuleSet,
    Label,
    LabelSource,
    Pool,
    RecordStore,
    TriageRecord,
    default_rules,
)


class SpanNotFound(ValueError):
    pass


class AmbiguousSpan(ValueError):
    """The span occurs more than once; the edit would not be invertible."""


class SpanLacksSignal(ValueError):
    """The span carries no keyword, so moving it cannot change the class."""


class PositionOutOfBounds(ValueError):
    pass


class DirectionConflict(ValueError):
    """Flip direction disagrees with the source record's label."""


class EmptyResidual(ValueError):
    """The edit would leave no text behind."""


class Direction(str, Enum):
    TO_NEGATIVE = "flip_to_negative"
    TO_POSITIVE = "flip_to_positive"


@dataclass(frozen=True)
class CounterfactualPair:
    """Provenance link between a source record and its flipped twin.

    chunk is the exact substring removed from (or inserted into) the source
    at offset, whitespace included; invert() replays it in reverse.
    """

    source_id: str
    synthetic_id: str
    direction: Direction
    span: str
    offset: int
    chunk: str
    position: int | None = None

    def invert(self, synthetic_text: str) -> str:
        if self.direction is Direction.TO_NEGATIVE:
            return synthetic_text[: self.offset] + self.chunk + synthetic_text[self.offset :]
        return synthetic_text[: self.offset] + synthetic_text[self.offset + len(self.chunk) :]

    def to_json(self) -> dict:
        return {
            "source_id": self.source_id,
            "synthetic_id": self.synthetic_id,
            "direction": self.direction.value,
            "span": self.span,
            "offset": self.offset,
            "chunk": self.chunk,
            "position": self.position,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CounterfactualPair":
        return cls(
            source_id=obj["source_id"],
            synthetic_id=obj["synthetic_id"],
            direction=Direction(obj["direction"]),
            span=obj["span"],
            offset=int(obj["offset"]),
            chunk=obj["chunk"],
            position=obj.get("position"),
        )


def _check_span(span: str, rules: FilterRuleSet) -> None:
    if not span or span != span.strip() or span.strip() == "":
        raise SpanNotFound(f"span must be non-empty with no leading/trailing space: {span!r}")
    if "\t" in span or "\n" in span:
        raise SpanNotFound("span must not contain tabs or newlines")
    lowered = span.lower()
    if not any(term in lowered for term in rules.include_terms):
        raise SpanLacksSignal(f"span {span!r} contains no keyword from the active rules")


def _synthetic_id(source: TriageRecord, direction: Direction, span: str, position: int | None) -> str:
    key = f"{source.id}|{direction.value}|{span}|{position}".encode()
    return f"syn-{source.id}-{hashlib.blake2b(key, digest_size=4).hexdigest()}"


def _build_synthetic(
    source: TriageRecord, text: str, label: Label, synthetic_id: str
) -> TriageRecord:
    return TriageRecord(
        id=synthetic_id,
        raw_text=source.raw_text,
        clean_text=text,
        age=source.age,
        sex=source.sex,
        site=source.site,
        timestamp=source.timestamp,
        pool=Pool.SYNTHETIC,
        label=label,
        label_source=LabelSource.COUNTERFACTUAL,
        counterfactual_of=source.id,
    )


def flip_to_negative(
    source: TriageRecord,
    span: str,
    synthetic_id: str | None = None,
    rules: FilterRuleSet | None = None,
) -> tuple[TriageRecord, CounterfactualPair]:
    """Remove the class-determining span from a labeled positive. One
    adjacent space is absorbed with the span, the preceding one when both
    exist, so no doubled space is left behind."""
    if source.label is not Label.POSITIVE:
        raise DirectionConflict(f"{source.id}: flip_to_negative needs a positive source")
    _check_span(span, rules or default_rules())
    text = source.clean_text
    start = text.find(span)
    if start < 0:
        raise SpanNotFound(f"{source.id}: span {span!r} not present")
    if text.find(span, start + 1) >= 0:
        raise AmbiguousSpan(f"{source.id}: span {span!r} occurs more than once")
    end = start + len(span)
    if start > 0 and text[start - 1] == " ":
        start -= 1
    elif end < len(text) and text[end] == " ":
        end += 1
    chunk = text[start:end]
    result = text[:start] + text[end:]
    if not result.strip():
        raise EmptyResidual(f"{source.id}: removing {span!r} leaves an empty note")
    sid = synthetic_id or _synthetic_id(source, Direction.TO_NEGATIVE, span, None)
    pair = CounterfactualPair(
        source_id=source.id,
        synthetic_id=sid,
        direction=Direction.TO_NEGATIVE,
        span=span,
        offset=start,
        chunk=chunk,
    )
    return _build_synthetic(source, result, Label.NEGATIVE, sid), pair


def flip_to_positive(
    source: TriageRecord,
    span: str,
    position: int,
    synthetic_id: str | None = None,
    rules: FilterRuleSet | None = None,
) -> tuple[TriageRecord, CounterfactualPair]:
    """Insert a class-determining span before token `position` of a labeled
    negative (position == token count appends)."""
    if source.label is not Label.NEGATIVE:
        raise DirectionConflict(f"{source.id}: flip_to_positive needs a negative source")
    _check_span(span, rules or default_rules())
    text = source.clean_text
    tokens = text.split(" ")
    if not 0 <= position <= len(tokens):
        raise PositionOutOfBounds(f"{source.id}: position {position} outside 0..{len(tokens)}")
    if position == len(tokens):
        offset, chunk = len(text), " " + span
    else:
        offset = sum(len(t) + 1 for t in tokens[:position])
        chunk = span + " "
    result = text[:offset] + chunk + text[offset:]
    sid = synthetic_id or _synthetic_id(source, Direction.TO_POSITIVE, span, position)
    pair = CounterfactualPair(
        source_id=source.id,
        synthetic_id=sid,
        direction=Direction.TO_POSITIVE,
        span=span,
        offset=offset,
        chunk=chunk,
        position=position,
    )
    return _build_synthetic(source, result, Label.POSITIVE, sid), pair


def round_trip(pair: CounterfactualPair, synthetic: TriageRecord, source: TriageRecord) -> bool:
    """True when inverting the edit reproduces the source text exactly."""
    return pair.invert(synthetic.clean_text).encode() == source.clean_text.encode()


def synthetic_fraction(dataset: LabeledDataset, store: RecordStore, split: str = "train") -> int:
    """Whole-percent share of counterfactual records in a dataset split,
    rounded down."""
    if split == "train":
        return dataset.train_counts.synthetic_percent
    if split == "validation":
        return dataset.validation_counts.synthetic_percent
    raise ValueError(f"unknown split {split!r}")
