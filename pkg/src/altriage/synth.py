"""Deterministic synthetic triage-note corpus with planted ground truth.

Template-based on purpose: every note is auditable back to a category and
the label follows the labeling guideline by construction (recent vaccine
plus symptom linkage is positive; status, history, future, or animal
vaccination mentions are negative). The generated corpus is hard enough
that keyword matching has both false positives (vaccuming, campyvax,
status-adjacent mentions) and false negatives (misspelled or slang
vaccine mentions), so a learned model can beat the rule baseline.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .records import Label, Pool, Sex, TriageRecord, write_records


@dataclass(frozen=True)
class TemplatePack:
    name: str
    symptoms: tuple[str, ...]
    complaints: tuple[str, ...]
    vaccines: tuple[str, ...]
    evasive_vaccines: tuple[str, ...]  # mentions the keyword rules miss
    linkages: tuple[str, ...]
    timings: tuple[str, ...]
    durations: tuple[str, ...]
    status_phrases: tuple[str, ...]  # excluded by the default rules
    keyword_confusers: tuple[str, ...]  # negatives the rules still match
    plain_confusers: tuple[str, ...]
    attributions: tuple[str, ...]  # non-vaccine explanations for a symptom
    extras: tuple[str, ...]


DEFAULT_PACK = TemplatePack(
    name="ed-triage-v1",
    symptoms=(
        "fever",
        "rash",
        "headache",
        "dizziness",
        "vomiting",
        "nausea",
        "sore arm",
        "arm swelling",
        "chest pain",
        "palpitations",
        "abdominal pain",
        "diarrhoea",
        "fatigue",
        "myalgia",
        "chills",
        "itchy rash",
        "facial swelling",
        "shortness of breath",
        "syncopal episode",
        "generalised urticaria",
        "lethargy",
        "joint pain",
        "injection site redness",
        "numbness in left arm",
        "racing heart",
    ),
    complaints=(
        "fall from ladder",
        "laceration to left hand",
        "low speed mva",
        "constipation",
        "uti symptoms",
        "ankle injury playing netball",
        "asthma flare",
        "migraine with aura",
        "epigastric pain after meals",
        "back pain lifting boxes",
        "foreign body in eye",
        "wound check",
        "suture removal",
        "knee swelling post fall",
        "sore throat and cough",
        "earache",
        "toothache",
        "burn to right forearm",
        "fishhook in thumb",
        "allergic reaction to shellfish",
        "bee sting to face",
        "panic attack",
        "alcohol intoxication",
        "gout flare left toe",
        "renal colic",
        "shoulder dislocation",
        "nosebleed not settling",
        "head strike no loc",
        "hyperglycaemia",
        "dog bite to forearm",
    ),
    vaccines=(
        "flu vaccine",
        "covid vaccine",
        "pfizer booster",
        "moderna booster",
        "astrazeneca vaccine",
        "mmr vaccine",
        "boostrix vaccination",
        "gardasil vaccine",
        "shingrix vaccination",
        "whooping cough vaccine",
        "childhood immunisations",
        "zostavax injection",
    ),
    evasive_vaccines=(
        "flu vacine",
        "covid vacine",
        "tetnus shot",
        "flu jab",
        "meningococcal jab",
        "imunisation",
        "covid jab",
    ),
    linkages=("post", "after", "following", "since"),
    timings=(
        "30 minutes ago",
        "1 hour ago",
        "2 hours ago",
        "this morning",
        "yesterday",
        "1/7 ago",
        "2/7 ago",
        "1/52 ago",
    ),
    durations=(
        "for 2 hours",
        "since this morning",
        "for 1/7",
        "for 2/7",
        "for 3/7",
        "for 1/52",
        "overnight",
        "on and off for a week",
    ),
    status_phrases=(
        "fully vaxed",
        "fully vaccinated",
        "triple vaxed",
        "double vaxxed",
        "covid vaccinated",
        "unvaccinated",
        "vaccinations up to date",
    ),
    keyword_confusers=(
        "due for flu vaccine next week",
        "booked for covid vaccine tomorrow",
        "hx of anaphylaxis to flu vaccine years ago",
        "worried about vaccine side effects, nil symptoms",
        "requesting vaccination certificate",
        "missed scheduled vaccination, here for script",
        "dog bite, dog vaccinated against rabies",
        "self injected with campyvax sheep vaccine",
        "back pain after vaccuming all day",
        "shoulder strain while vaccuming stairs",
        "mother asking about childhood immunisation schedule",
        "declined vaccination at gp today",
        "immunisations utd per mother",
        "needle stick injury, hep b vaccination status unknown",
    ),
    plain_confusers=(
        "had tequila shot last night, headache today",
        "mounjaro injection this week, nausea",
        "insulin injection site bruising",
        "b12 injection at gp, feeling tired",
        "flu like illness, no recent travel",
        "allergy shot for hayfever last month",
    ),
    attributions=(
        "attributes to takeaway food",
        "same symptoms in household contacts",
        "known gastro contact at daycare",
        "longstanding problem, worse today",
        "similar episodes for years",
        "symptoms started before the vaccination",
        "denies any link to vaccination",
        "gp suspects viral illness",
        "came on at work lifting boxes",
        "on new antibiotics since monday",
    ),
    extras=(
        "obs stable",
        "afebrile on arrival",
        "nil allergies",
        "seen by gp today",
        "self presented",
        "pain 6/10",
        "vitals within normal limits",
        "no prior episodes",
    ),
)


@dataclass(frozen=True)
class CorpusSpec:
    n_focused: int
    n_deployment: int
    prevalence_focused: float = 0.15
    prevalence_deployment: float = 0.06
    seed: int = 0
    pack: TemplatePack = DEFAULT_PACK
    # Category mix. Shares are unconditional per pool; the keyword-free
    # negative share is whatever remains.
    keyword_negative_share_focused: float = 0.25
    keyword_negative_share_deployment: float = 0.05
    evasive_positive_share: float = 0.15
    status_share_of_keyword_negatives: float = 0.30
    # Vaccine mentioned with past timing but the visit is about something
    # else. The hardest negatives: only the attribution separates them.
    recent_vax_share_of_keyword_negatives: float = 0.40
    symptomatic_share_of_plain_negatives: float = 0.5

    def __post_init__(self) -> None:
        for name in ("prevalence_focused", "prevalence_deployment"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.n_focused < 1 or self.n_deployment < 1:
            raise ValueError("pool sizes must be positive")
        if self.prevalence_focused + self.keyword_negative_share_focused >= 1.0:
            raise ValueError("focused category shares exceed 1")
        if self.prevalence_deployment + self.keyword_negative_share_deployment >= 1.0:
            raise ValueError("deployment category shares exceed 1")
        if (
            self.status_share_of_keyword_negatives
            + self.recent_vax_share_of_keyword_negatives
            > 1.0
        ):
            raise ValueError("keyword-negative sub-shares exceed 1")

    def to_json(self) -> dict:
        return {
            "n_focused": self.n_focused,
            "n_deployment": self.n_deployment,
            "prevalence_focused": self.prevalence_focused,
            "prevalence_deployment": self.prevalence_deployment,
            "seed": self.seed,
            "template_pack": self.pack.name,
            "keyword_negative_share_focused": self.keyword_negative_share_focused,
            "keyword_negative_share_deployment": self.keyword_negative_share_deployment,
            "evasive_positive_share": self.evasive_positive_share,
            "status_share_of_keyword_negatives": self.status_share_of_keyword_negatives,
            "recent_vax_share_of_keyword_negatives": self.recent_vax_share_of_keyword_negatives,
            "symptomatic_share_of_plain_negatives": self.symptomatic_share_of_plain_negatives,
        }


CATEGORIES = (
    "positive_keyword",
    "positive_evasive",
    "negative_status",
    "negative_recent_vax",
    "negative_keyword",
    "negative_symptomatic",
    "negative_other",
)


@dataclass
class GenerationReport:
    focused: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CATEGORIES})
    deployment: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CATEGORIES})

    def to_json(self) -> dict:
        return {"focused": dict(self.focused), "deployment": dict(self.deployment)}


def _positive_body(rng: random.Random, pack: TemplatePack, evasive: bool) -> tuple[str, str]:
    """Returns (body, flip span). Removing the span breaks the vaccine
    linkage, which is exactly the edit a counterfactual author would make."""
    vaccine = rng.choice(pack.evasive_vaccines if evasive else pack.vaccines)
    symptom = rng.choice(pack.symptoms)
    other = rng.choice(pack.symptoms)
    linkage = rng.choice(pack.linkages)
    timing = rng.choice(pack.timings)
    templates = (
        (f"{symptom} {linkage} {vaccine} {timing}", f"{linkage} {vaccine}"),
        (
            f"{symptom} onset {timing.replace(' ago', '')} {linkage} {vaccine}",
            f"{linkage} {vaccine}",
        ),
        (f"had {vaccine} {timing}, now {symptom}", f"had {vaccine}"),
        (f"{symptom} and {other} since {vaccine} {timing}", f"since {vaccine}"),
        (f"developed {symptom} {linkage} {vaccine} given {timing}", f"{linkage} {vaccine}"),
        (f"{vaccine} {timing}. {symptom} since", vaccine),
    )
    body, span = rng.choice(templates)
    if rng.random() < 0.3:
        body += f". {rng.choice(pack.extras)}"
    return body, span


def _status_body(rng: random.Random, pack: TemplatePack) -> str:
    lead = rng.choice(pack.complaints + pack.symptoms)
    duration = rng.choice(pack.durations)
    status = rng.choice(pack.status_phrases)
    if rng.random() < 0.5:
        return f"{lead} {duration}. {status}"
    return f"{status}. {lead} {duration}"


def _keyword_negative_body(rng: random.Random, pack: TemplatePack) -> str:
    body = rng.choice(pack.keyword_confusers)
    if rng.random() < 0.4:
        body += f". {rng.choice(pack.extras)}"
    return body


def _recent_vax_body(rng: random.Random, pack: TemplatePack) -> str:
    """Vaccinated recently, presenting for something else entirely."""
    vaccine = rng.choice(pack.vaccines)
    timing = rng.choice(pack.timings)
    if rng.random() < 0.5:
        complaint = rng.choice(pack.complaints)
        templates = (
            f"{vaccine} {timing}. here for {complaint}",
            f"had {vaccine} {timing}, presents with {complaint}",
            f"{complaint}. incidentally had {vaccine} {timing}",
        )
    else:
        symptom = rng.choice(pack.symptoms)
        duration = rng.choice(pack.durations)
        attribution = rng.choice(pack.attributions)
        templates = (
            f"{symptom} {duration}, {attribution}. {vaccine} {timing}",
            f"{vaccine} {timing}. {symptom} {duration}, {attribution}",
            f"{symptom} {duration}. {attribution}. had {vaccine} {timing}",
        )
    return rng.choice(templates)


def _plain_negative_body(rng: random.Random, pack: TemplatePack, symptomatic: bool) -> str:
    if symptomatic:
        symptom = rng.choice(pack.symptoms)
        duration = rng.choice(pack.durations)
        if rng.random() < 0.35:
            body = f"{symptom} and {rng.choice(pack.symptoms)} {duration}"
        else:
            body = f"{symptom} {duration}"
    elif rng.random() < 0.12:
        body = rng.choice(pack.plain_confusers)
    else:
        body = f"{rng.choice(pack.complaints)} {rng.choice(pack.durations)}"
    if rng.random() < 0.25:
        body += f". {rng.choice(pack.extras)}"
    return body


def _raw_noise(rng: random.Random, body: str) -> str:
    # Light entry noise; preprocessing is expected to undo all of it.
    if rng.random() < 0.5:
        body = body[0].upper() + body[1:]
    if rng.random() < 0.15:
        body = body.replace(", ", ",  ", 1)
    if rng.random() < 0.2:
        body += "."
    return body


def _draw_category(rng: random.Random, spec: CorpusSpec, pool: Pool) -> str:
    if pool is Pool.FOCUSED:
        prevalence = spec.prevalence_focused
        kw_share = spec.keyword_negative_share_focused
    else:
        prevalence = spec.prevalence_deployment
        kw_share = spec.keyword_negative_share_deployment
    u = rng.random()
    if u < prevalence:
        return (
            "positive_evasive"
            if rng.random() < spec.evasive_positive_share
            else "positive_keyword"
        )
    if u < prevalence + kw_share:
        v = rng.random()
        if v < spec.status_share_of_keyword_negatives:
            return "negative_status"
        if v < spec.status_share_of_keyword_negatives + spec.recent_vax_share_of_keyword_negatives:
            return "negative_recent_vax"
        return "negative_keyword"
    return (
        "negative_symptomatic"
        if rng.random() < spec.symptomatic_share_of_plain_negatives
        else "negative_other"
    )


def _make_record(
    rng: random.Random, spec: CorpusSpec, pool: Pool, index: int, category: str
) -> tuple[TriageRecord, str | None]:
    pack = spec.pack
    span: str | None = None
    if category == "positive_keyword":
        body, span = _positive_body(rng, pack, evasive=False)
    elif category == "positive_evasive":
        body, span = _positive_body(rng, pack, evasive=True)
    elif category == "negative_status":
        body = _status_body(rng, pack)
    elif category == "negative_recent_vax":
        body = _recent_vax_body(rng, pack)
    elif category == "negative_keyword":
        body = _keyword_negative_body(rng, pack)
    else:
        body = _plain_negative_body(rng, pack, symptomatic=category == "negative_symptomatic")
    prefix = "f" if pool is Pool.FOCUSED else "d"
    record = TriageRecord(
        id=f"{prefix}-{index:06d}",
        raw_text=_raw_noise(rng, body),
        age=rng.randint(0, 95),
        sex=rng.choice((Sex.FEMALE, Sex.MALE, Sex.FEMALE, Sex.MALE, Sex.UNKNOWN)),
        site=rng.choice(("ed-a", "ed-b", "ed-c")),
        timestamp=f"2023-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T"
        f"{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:00",
        pool=pool,
    )
    return record, span


@dataclass(frozen=True)
class OracleKey:
    """Sealed ground truth: labels plus, for positives, the span whose
    removal flips the note negative. Consumed only by the simulated oracle."""

    labels: dict[str, Label]
    flip_spans: dict[str, str]

    def to_json(self) -> dict:
        return {
            "labels": {rid: label.value for rid, label in sorted(self.labels.items())},
            "flip_spans": dict(sorted(self.flip_spans.items())),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OracleKey":
        return cls(
            labels={rid: Label(v) for rid, v in obj["labels"].items()},
            flip_spans=dict(obj.get("flip_spans", {})),
        )


def generate(spec: CorpusSpec) -> tuple[list[TriageRecord], OracleKey, GenerationReport]:
    """Build both pools. Returns (records, oracle key, per-category counts);
    the key holds every record's hidden ground-truth label and must only
    ever reach the simulated oracle."""
    rng = random.Random(spec.seed)
    records: list[TriageRecord] = []
    labels: dict[str, Label] = {}
    spans: dict[str, str] = {}
    report = GenerationReport()
    for pool, count, tally in (
        (Pool.FOCUSED, spec.n_focused, report.focused),
        (Pool.DEPLOYMENT, spec.n_deployment, report.deployment),
    ):
        for index in range(count):
            category = _draw_category(rng, spec, pool)
            record, span = _make_record(rng, spec, pool, index, category)
            records.append(record)
            labels[record.id] = (
                Label.POSITIVE if category.startswith("positive") else Label.NEGATIVE
            )
            if span is not None:
                spans[record.id] = span
            tally[category] += 1
    return records, OracleKey(labels=labels, flip_spans=spans), report


def write_corpus(
    spec: CorpusSpec, out_dir: str | Path
) -> tuple[Path, Path, Path, GenerationReport]:
    """Emit focused.jsonl / deployment.jsonl plus the sealed oracle key."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, key, report = generate(spec)
    focused_path = out / "focused.jsonl"
    deployment_path = out / "deployment.jsonl"
    key_path = out / "oracle_key.json"
    write_records(focused_path, (r for r in records if r.pool is Pool.FOCUSED))
    write_records(deployment_path, (r for r in records if r.pool is Pool.DEPLOYMENT))
    key_path.write_text(json.dumps({"seed": spec.seed, **key.to_json()}) + "\n")
    (out / "generation_report.json").write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return focused_path, deployment_path, key_path, report


class UnknownRecord(KeyError):
    pass


class SimulatedOracle:
    """Ground-truth labeler with optional symmetric label noise.

    Noise is decided per record id on first query and remembered, so
    repeated queries stay consistent like a human would be.
    """

    def __init__(self, key: OracleKey, noise: float = 0.0, seed: int = 0) -> None:
        if not 0.0 <= noise < 0.5:
            raise ValueError("noise must lie in [0, 0.5)")
        self._key = key
        self._noise = noise
        self._rng = random.Random(seed)
        self._memo: dict[str, Label] = {}
        self.queries = 0

    @classmethod
    def from_key_file(cls, path: str | Path, noise: float = 0.0, seed: int = 0) -> "SimulatedOracle":
        return cls(OracleKey.from_json(json.loads(Path(path).read_text())), noise=noise, seed=seed)

    def knows(self, record_id: str) -> bool:
        return record_id in self._key.labels

    def label(self, record_id: str) -> Label:
        if record_id not in self._key.labels:
            raise UnknownRecord(record_id)
        self.queries += 1
        if record_id in self._memo:
            return self._memo[record_id]
        truth = self._key.labels[record_id]
        if self._noise > 0.0 and self._rng.random() < self._noise:
            truth = Label.NEGATIVE if truth is Label.POSITIVE else Label.POSITIVE
        self._memo[record_id] = truth
        return truth

    def flip_span(self, record_id: str) -> str | None:
        """The span a human author would remove to flip this positive; None
        for records without a vaccine linkage."""
        return self._key.flip_spans.get(record_id)
