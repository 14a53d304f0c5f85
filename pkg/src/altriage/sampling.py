"""Record-selection strategies for seeding and for per-round querying.

Seed selection spreads a labeling budget over topics (target-heavy quota,
largest-remainder apportionment) and picks records at fixed strides along each
topic's centroid-distance ordering. Per-round querying slices one checkpoint's
probability map into positive predictions, low-confidence negatives, and
keyword-bearing confident negatives (candidate misses).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Sequence

from .records import FilterRuleSet, TriageRecord, pattern_match
from .topics import TopicModel


class Strategy(str, Enum):
    DIVERSITY_SEED = "diversity_seed"
    UNCERTAIN_NEGATIVE = "uncertain_negative"
    POSITIVE_PREDICTION = "positive_prediction"
    FN_MINING = "fn_mining"


class InfeasiblePlan(ValueError):
    pass


class QuotaExceedsCluster(ValueError):
    pass


@dataclass(frozen=True)
class QuotaPlan:
    total: int
    target_share: float = 0.6
    per_nontarget_floor: int = 3
    per_topic_cap: int | None = None
    # The 60/40 split and the 3-per-nontarget-topic floor cannot both bind;
    # this knob picks which wins when they disagree.
    redistribute_residual: bool = True

    def __post_init__(self) -> None:
        if self.total < 1:
            raise ValueError("total must be positive")
        if not (0.0 < self.target_share < 1.0):
            raise ValueError("target_share must be in (0, 1)")
        if self.per_nontarget_floor < 0:
            raise ValueError("per_nontarget_floor must be non-negative")


@dataclass(frozen=True)
class QueryBatch:
    strategy: Strategy
    record_ids: tuple[str, ...]
    round: int
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def __post_init__(self) -> None:
        if len(set(self.record_ids)) != len(self.record_ids):
            raise ValueError("record_ids must be unique within a batch")

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "record_ids": list(self.record_ids),
            "round": self.round,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QueryBatch":
        return cls(
            strategy=Strategy(obj["strategy"]),
            record_ids=tuple(obj["record_ids"]),
            round=int(obj["round"]),
            created_at=obj.get("created_at", ""),
        )


def _apportion(total: int, weights: Mapping[int, int], caps: Mapping[int, int]) -> dict[int, int]:
    """Largest-remainder apportionment of `total` over keyed weights.

    Ties on the fractional remainder go to the lower key. Per-key caps are
    honored by re-apportioning the overflow among unsaturated keys.
    """
    quotas = {key: 0 for key in weights}
    remaining = total
    open_keys = [k for k in sorted(weights) if caps.get(k, 0) > 0 and weights[k] > 0]
    while remaining > 0 and open_keys:
        weight_sum = sum(weights[k] for k in open_keys)
        shares = {k: remaining * weights[k] / weight_sum for k in open_keys}
        floors = {k: int(shares[k]) for k in open_keys}
        leftover = remaining - sum(floors.values())
        by_remainder = sorted(open_keys, key=lambda k: (-(shares[k] - floors[k]), k))
        for k in by_remainder[:leftover]:
            floors[k] += 1
        progressed = False
        for k in open_keys:
            headroom = caps[k] - quotas[k]
            grant = min(floors[k], headroom)
            if grant > 0:
                quotas[k] += grant
                remaining -= grant
                progressed = True
        open_keys = [k for k in open_keys if quotas[k] < caps[k]]
        if not progressed:
            break
    return quotas


def allocate_quota(model: TopicModel, plan: QuotaPlan) -> dict[int, int]:
    """Per-topic labeling quotas: target topics split the target share
    proportionally; the rest get a small fixed floor, topped up from whatever
    budget remains when redistribution is on."""
    counts = model.member_counts()
    pool_size = sum(counts.values())
    if plan.total > pool_size:
        raise InfeasiblePlan(f"total {plan.total} exceeds pool size {pool_size}")
    flagged = set(model.flagged_topics())
    unflagged = [t for t in range(model.k) if t not in flagged]
    if not flagged or not unflagged:
        raise InfeasiblePlan("quota plan needs at least one flagged and one unflagged topic")

    flagged_total = round(plan.total * plan.target_share)
    flagged_caps = {t: counts[t] for t in flagged}
    quotas = _apportion(flagged_total, {t: counts[t] for t in flagged}, flagged_caps)
    flagged_sum = sum(quotas.values())

    budget = plan.total - flagged_sum
    base = {t: min(plan.per_nontarget_floor, counts[t]) for t in unflagged}
    if sum(base.values()) > budget:
        base = _apportion(budget, base, dict(base))
    for t in unflagged:
        quotas[t] = base[t]

    residual = budget - sum(base.values())
    if residual > 0 and plan.redistribute_residual:
        cap = plan.per_topic_cap
        unflagged_caps = {
            t: min(counts[t], cap) - quotas[t] if cap else counts[t] - quotas[t] for t in unflagged
        }
        unflagged_caps = {t: max(0, c) for t, c in unflagged_caps.items()}
        extra = _apportion(residual, {t: counts[t] for t in unflagged}, unflagged_caps)
        for t, amount in extra.items():
            quotas[t] += amount
        residual -= sum(extra.values())
        if residual > 0:
            flagged_headroom = {
                t: (min(counts[t], cap) if cap else counts[t]) - quotas[t] for t in flagged
            }
            flagged_headroom = {t: max(0, c) for t, c in flagged_headroom.items()}
            extra = _apportion(residual, {t: counts[t] for t in flagged}, flagged_headroom)
            for t, amount in extra.items():
                quotas[t] += amount

    assert sum(quotas.values()) <= plan.total
    return {t: quotas.get(t, 0) for t in range(model.k)}


def interval_sample(ordered_ids: Sequence[str], quota: int) -> list[str]:
    """Evenly spaced records along a centroid-distance ordering, anchored at
    the most central record. Index floor(i*n/quota) rather than a fixed
    integer stride, so the selection spans (quota-1)/quota of the rank range
    even when quota does not divide the cluster size."""
    n = len(ordered_ids)
    if quota > n:
        raise QuotaExceedsCluster(f"quota {quota} > cluster size {n}")
    if quota <= 0:
        return []
    return [ordered_ids[i * n // quota] for i in range(quota)]


def diversity_seed(
    model: TopicModel, plan: QuotaPlan, round: int = 0, exclude: frozenset[str] = frozenset()
) -> QueryBatch:
    """Interval-sample each topic's distance ordering under the quota plan."""
    quotas = allocate_quota(model, plan)
    selected: list[str] = []
    for topic in range(model.k):
        members = [rid for rid in model.members(topic) if rid not in exclude]
        members.sort(key=lambda rid: (model.distances[rid], rid))
        quota = min(quotas[topic], len(members))
        selected.extend(interval_sample(members, quota))
    return QueryBatch(strategy=Strategy.DIVERSITY_SEED, record_ids=tuple(selected), round=round)


def positive_predictions(predictions: Mapping[str, float], round: int = 0) -> QueryBatch:
    ids = sorted(
        (rid for rid, p in predictions.items() if p >= 0.5),
        key=lambda rid: (-predictions[rid], rid),
    )
    return QueryBatch(strategy=Strategy.POSITIVE_PREDICTION, record_ids=tuple(ids), round=round)


def uncertain_negatives(
    predictions: Mapping[str, float], threshold: float = 0.90, round: int = 0
) -> QueryBatch:
    """Predicted-negative records whose negative-class confidence is below the
    threshold, most-positive-leaning first."""
    ids = sorted(
        (rid for rid, p in predictions.items() if p < 0.5 and (1.0 - p) < threshold),
        key=lambda rid: (-predictions[rid], rid),
    )
    return QueryBatch(strategy=Strategy.UNCERTAIN_NEGATIVE, record_ids=tuple(ids), round=round)


def mine_false_negatives(
    predictions: Mapping[str, float],
    records: Mapping[str, TriageRecord],
    rules: FilterRuleSet,
    threshold: float = 0.90,
    round: int = 0,
) -> QueryBatch:
    """Keyword-bearing records the model rejects with high confidence."""
    ids = sorted(
        (
            rid
            for rid, p in predictions.items()
            if (1.0 - p) >= threshold and pattern_match(records[rid], rules)
        ),
        key=lambda rid: (-predictions[rid], rid),
    )
    return QueryBatch(strategy=Strategy.FN_MINING, record_ids=tuple(ids), round=round)
