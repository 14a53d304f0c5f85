"""Topic clustering of the embedded focused pool.

Plain k-means with k-means++ seeding stands in for density-based topic
modelling; downstream sampling only consumes centroids, per-record distances,
and per-topic target flags, so any clusterer honoring those outputs can be
slotted in. Records are processed in sorted-id order, which makes the whole
model invariant to input permutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import log
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .embedding import EmbeddingVector

MAX_ITER = 300

# Compact stop-word list for keyword summaries (config can override).
DEFAULT_STOPWORDS = frozenset(
    """a an and are as at be been but by for from had has have he her his i if in is it its
    no not of on or s she so t that the their them then there these they this to was we were
    will with x unk male female""".split()
)


class DegenerateInput(ValueError):
    """All vectors identical with k > 1; clustering still returns k topics."""


class InvalidTarget(ValueError):
    pass


class UnprobedTopic(ValueError):
    pass


@dataclass
class TopicModel:
    k: int
    centroids: np.ndarray  # (k, dim)
    assignment: dict[str, int]
    distances: dict[str, float]
    keywords: dict[int, list[tuple[str, float]]] = field(default_factory=dict)
    target_flag: dict[int, bool] = field(default_factory=dict)
    # Kept so reduce_topics can recompute merged centroids; not persisted.
    vectors: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def members(self, topic: int) -> list[str]:
        return sorted(rid for rid, t in self.assignment.items() if t == topic)

    def member_counts(self) -> dict[int, int]:
        counts = {t: 0 for t in range(self.k)}
        for t in self.assignment.values():
            counts[t] += 1
        return counts

    def flagged_topics(self) -> list[int]:
        return sorted(t for t, f in self.target_flag.items() if f)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "centroids": [[float(x) for x in row] for row in self.centroids],
            "assignment": dict(sorted(self.assignment.items())),
            "distances": {rid: float(d) for rid, d in sorted(self.distances.items())},
            "keywords": {str(t): [[g, float(s)] for g, s in kws] for t, kws in self.keywords.items()},
            "target_flag": {str(t): f for t, f in self.target_flag.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TopicModel":
        return cls(
            k=int(obj["k"]),
            centroids=np.asarray(obj["centroids"], dtype=np.float64),
            assignment={rid: int(t) for rid, t in obj["assignment"].items()},
            distances={rid: float(d) for rid, d in obj["distances"].items()},
            keywords={
                int(t): [(g, float(s)) for g, s in kws] for t, kws in obj.get("keywords", {}).items()
            },
            target_flag={int(t): bool(f) for t, f in obj.get("target_flag", {}).items()},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TopicModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _kmeans_pp_seeds(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    sq_dist = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(sq_dist.sum())
        if total <= 0.0:
            # Degenerate: every remaining point coincides with a centroid.
            choice = int(rng.integers(n))
        else:
            choice = int(rng.choice(n, p=sq_dist / total))
        centroids[j] = points[choice]
        sq_dist = np.minimum(sq_dist, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Ties go to the lower topic index via argmin.
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, np.sqrt(d2[np.arange(len(points)), labels])


def cluster(vectors: Mapping[str, EmbeddingVector], k: int, seed: int) -> TopicModel:
    """Deterministic k-means over unit vectors keyed by record id."""
    if k < 2:
        raise InvalidTarget(f"k must be >= 2, got {k}")
    if len(vectors) < k:
        raise DegenerateInput(f"{len(vectors)} vectors for k={k}")
    ids = sorted(vectors)
    points = np.stack([np.asarray(vectors[rid].values, dtype=np.float64) for rid in ids])

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_seeds(points, k, rng)
    labels, dists = _assign(points, centroids)
    for _ in range(MAX_ITER):
        new_centroids = centroids.copy()
        for t in range(k):
            mask = labels == t
            if mask.any():
                new_centroids[t] = points[mask].mean(axis=0)
        new_labels, dists = _assign(points, new_centroids)
        centroids = new_centroids
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels

    return TopicModel(
        k=k,
        centroids=centroids,
        assignment={rid: int(t) for rid, t in zip(ids, labels)},
        distances={rid: float(d) for rid, d in zip(ids, dists)},
        vectors={rid: points[i] for i, rid in enumerate(ids)},
    )


def reduce_topics(model: TopicModel, target_k: int) -> TopicModel:
    """Merge smallest topics into their nearest neighbor until k == target_k.

    After each merge the absorbed centroid is recomputed as the member mean and
    every record is re-pointed at its nearest surviving centroid, so the
    nearest-centroid invariant holds on the result.
    """
    if target_k < 1 or target_k >= model.k:
        raise InvalidTarget(f"target_k must be in [1, {model.k}), got {target_k}")
    if not model.vectors:
        raise ValueError("model carries no vectors; rebuild or re-embed before reducing")

    ids = sorted(model.assignment)
    points = np.stack([model.vectors[rid] for rid in ids])
    labels = np.array([model.assignment[rid] for rid in ids])
    centroids = model.centroids.copy()
    alive = list(range(model.k))

    while len(alive) > target_k:
        counts = {t: int((labels == t).sum()) for t in alive}
        smallest = min(alive, key=lambda t: (counts[t], t))
        others = [t for t in alive if t != smallest]
        gaps = [(float(np.linalg.norm(centroids[smallest] - centroids[t])), t) for t in others]
        _, target = min(gaps)
        labels[labels == smallest] = target
        merged_mask = labels == target
        if merged_mask.any():
            centroids[target] = points[merged_mask].mean(axis=0)
        alive.remove(smallest)
        # Re-point every record at its nearest surviving centroid.
        sub_labels, _ = _assign(points, centroids[alive])
        labels = np.array([alive[j] for j in sub_labels])

    renumber = {old: new for new, old in enumerate(alive)}
    final_centroids = centroids[alive]
    final_labels = np.array([renumber[t] for t in labels])
    _, dists = _assign(points, final_centroids)

    return TopicModel(
        k=target_k,
        centroids=final_centroids,
        assignment={rid: int(t) for rid, t in zip(ids, final_labels)},
        distances={rid: float(d) for rid, d in zip(ids, dists)},
        vectors=dict(model.vectors),
    )


def _topic_grams(text: str, stopwords: frozenset[str]) -> list[str]:
    tokens = [tok for tok in text.split() if tok not in stopwords]
    grams = list(tokens)
    grams.extend(" ".join(tokens[i : i + 2]) for i in range(len(tokens) - 1))
    return grams


def summarize(
    model: TopicModel,
    texts: Mapping[str, str],
    top_n: int = 10,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> TopicModel:
    """Rank each topic's 1-/2-grams by within-topic rate x inverse topic spread.

    score(g, t) = (count of g in t / token count of t) * log(k / topics containing g).
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    per_topic_counts: dict[int, dict[str, int]] = {t: {} for t in range(model.k)}
    per_topic_tokens: dict[int, int] = {t: 0 for t in range(model.k)}
    for rid, topic in model.assignment.items():
        text = texts.get(rid, "")
        tokens = [tok for tok in text.split() if tok not in stopwords]
        per_topic_tokens[topic] += len(tokens)
        for gram in _topic_grams(text, stopwords):
            counts = per_topic_counts[topic]
            counts[gram] = counts.get(gram, 0) + 1

    gram_topic_spread: dict[str, int] = {}
    for counts in per_topic_counts.values():
        for gram in counts:
            gram_topic_spread[gram] = gram_topic_spread.get(gram, 0) + 1

    keywords: dict[int, list[tuple[str, float]]] = {}
    for topic in range(model.k):
        token_total = per_topic_tokens[topic]
        scored = []
        for gram, count in per_topic_counts[topic].items():
            if token_total == 0:
                continue
            score = (count / token_total) * log(model.k / gram_topic_spread[gram])
            scored.append((gram, score))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        keywords[topic] = scored[:top_n]

    model.keywords = keywords
    return model


def flag_target_topics(
    model: TopicModel,
    probe: Mapping[str, bool] | Callable[[str], bool],
    threshold: float = 0.5,
) -> TopicModel:
    """Flag topics whose probed members are mostly target-class.

    A mapping probe defines which members were probed; a callable probe is
    treated as defined on every member.
    """
    flags: dict[int, bool] = {}
    for topic in range(model.k):
        members = model.members(topic)
        if callable(probe) and not isinstance(probe, Mapping):
            probed = {rid: bool(probe(rid)) for rid in members}
        else:
            probed = {rid: bool(probe[rid]) for rid in members if rid in probe}
        if not probed:
            raise UnprobedTopic(f"topic {topic} has no probed members")
        fraction = sum(probed.values()) / len(probed)
        flags[topic] = fraction >= threshold
    model.target_flag = flags
    return model
