"""Relation-aware region classification.

A region is not matched to each reference feature in isolation. Instead
the most similar reference features act as agents; the region's cosine
scores against these agents define a probability distribution over every
agent ranking (sequential sampling without replacement, proportional to
score). Each candidate reference induces its own ranking distribution
over the same agents, and the region is assigned to the candidate whose
distribution is most cosine-similar to the region's own.

Labels follow the package-wide convention: 0 is background, category
``k`` of a ReferenceSet appears as label ``k + 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    NumericError,
    RankingDistribution,
    ReferenceSet,
    ValidationError,
)

MAX_AGENTS = 6  # N! permutation tables are capped at 720 rows
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class MatchConfig:
    """Knobs of the matcher: agent pool size N, subcategory count used at
    reference build time, subcategory voting on/off, and the positive
    floor applied to calibrated scores."""

    agent_count: int = 4
    subcategory_count: int = 8
    use_subcategories: bool = True
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (1 <= self.agent_count <= MAX_AGENTS):
            raise ValidationError(
                f"agent count must lie in 1..{MAX_AGENTS}, got {self.agent_count}"
            )
        if self.subcategory_count < 1:
            raise ValidationError(
                f"subcategory count must be positive, got {self.subcategory_count}"
            )
        if not (0.0 < self.epsilon < 1.0):
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class AgentSet:
    """The agents recruited for one region: label ids in descending
    region-similarity order plus their features."""

    agent_ids: tuple[int, ...]
    features: np.ndarray

    def __init__(self, agent_ids, features):
        agent_ids = tuple(int(i) for i in agent_ids)
        if len(agent_ids) < 1:
            raise ValidationError("agent set must contain at least one agent")
        if len(set(agent_ids)) != len(agent_ids):
            raise ValidationError(f"agent ids must be unique, got {agent_ids}")
        f = np.asarray(features, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] != len(agent_ids):
            raise ValidationError(
                f"agent features must be [{len(agent_ids)}, D], got shape {f.shape}"
            )
        f.setflags(write=False)
        object.__setattr__(self, "agent_ids", agent_ids)
        object.__setattr__(self, "features", f)

    @property
    def agent_count(self) -> int:
        return len(self.agent_ids)


def cosine_scores(query: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Cosine similarity of one query vector against M reference rows."""
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    r = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    if r.shape[1] != q.shape[0]:
        raise ValidationError(
            f"query dim {q.shape[0]} does not match reference dim {r.shape[1]}"
        )
    qn = np.linalg.norm(q)
    rn = np.linalg.norm(r, axis=1)
    if qn == 0.0 or np.any(rn == 0.0):
        raise NumericError("cosine similarity is undefined for zero-norm vectors")
    return (r @ q) / (rn * qn)


def calibrate_scores(raw: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Map cosine scores in [-1, 1] to positive weights via (s + 1) / 2,
    floored at epsilon. Order-preserving outside the floor region."""
    a = np.asarray(raw, dtype=np.float64)
    return np.maximum((a + 1.0) / 2.0, epsilon)


def select_agents(region_feature: np.ndarray, refs: ReferenceSet, n: int) -> AgentSet:
    """Recruit the ``n`` reference features (background included in the
    pool) most cosine-similar to the region; ties go to the lower label.
    ``n`` is clamped to the pool size."""
    if n < 1:
        raise ValidationError(f"agent count must be positive, got {n}")
    pool = refs.holistic_by_label()
    scores = cosine_scores(region_feature, pool)
    labels = np.arange(pool.shape[0])
    order = np.lexsort((labels, -scores))
    take = min(n, pool.shape[0])
    picked = order[:take]
    return AgentSet(picked.tolist(), pool[picked])


@lru_cache(maxsize=MAX_AGENTS + 1)
def permutation_table(n: int) -> np.ndarray:
    """All permutations of 0..n-1 as an [n!, n] array in lexicographic
    order; cached and shared read-only."""
    if not (1 <= n <= MAX_AGENTS):
        raise ValidationError(f"permutation table supports 1..{MAX_AGENTS} items, got {n}")
    table = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    table.setflags(write=False)
    return table


def _check_positive_scores(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.size < 1:
        raise ValidationError("need at least one score")
    if not np.all(s > 0.0):
        raise NumericError(f"ranking scores must be strictly positive, got {s.tolist()}")
    return s


def permutation_probability(scores: np.ndarray, perm) -> float:
    """Probability of drawing the given rank order by sequential sampling
    without replacement, proportional to the scores."""
    s = _check_positive_scores(scores)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(s.size)):
        raise ValidationError(f"{perm} is not a permutation of 0..{s.size - 1}")
    ordered = s[list(perm)]
    remaining = np.cumsum(ordered[::-1])[::-1]
    return float(np.prod(ordered / remaining))


def ranking_distribution(scores: np.ndarray, agent_ids=None) -> RankingDistribution:
    """Probabilities of all N! rank orders of the agents under sequential
    score-proportional sampling, in lexicographic permutation order."""
    s = _check_positive_scores(scores)
    n = s.size
    if n > MAX_AGENTS:
        raise ValidationError(
            f"ranking distributions are capped at {MAX_AGENTS} agents, got {n}"
        )
    table = permutation_table(n)
    ordered = s[table]
    remaining = np.cumsum(ordered[:, ::-1], axis=1)[:, ::-1]
    probs = np.prod(ordered / remaining, axis=1)
    if agent_ids is None:
        agent_ids = range(n)
    return RankingDistribution(agent_ids, probs)


def distribution_similarity(a: RankingDistribution, b: RankingDistribution) -> float:
    """Cosine similarity between two ranking distributions over the same
    agents in the same order."""
    if a.agent_ids != b.agent_ids:
        raise ValidationError(
            f"agent sets differ: {a.agent_ids} vs {b.agent_ids}"
        )
    pa, pb = a.probs, b.probs
    return float((pa @ pb) / (np.linalg.norm(pa) * np.linalg.norm(pb)))


def _candidate_features(refs: ReferenceSet, label: int, use_subcategories: bool) -> np.ndarray:
    if label == 0 or not use_subcategories:
        holistic = refs.holistic_by_label()
        return holistic[label][None, :]
    return refs.categories[label - 1].subcategories


def classify_region(
    region_feature: np.ndarray, refs: ReferenceSet, cfg: MatchConfig
) -> tuple[int, np.ndarray]:
    """Assign a region to the candidate whose ranking distribution over
    the recruited agents best matches the region's own.

    Candidates are all C categories plus background. With subcategory
    voting enabled, a category's score is the sum of the distribution
    similarities of its subcategory features; background always
    contributes its single holistic feature. Returns the winning label
    and the per-label score vector (ties go to the lower label).
    """
    region_feature = np.asarray(region_feature, dtype=np.float64).reshape(-1)
    if region_feature.shape[0] != refs.feature_dim:
        raise ValidationError(
            f"region feature dim {region_feature.shape[0]} does not match "
            f"reference dim {refs.feature_dim}"
        )
    agents = select_agents(region_feature, refs, cfg.agent_count)
    region_dist = ranking_distribution(
        calibrate_scores(cosine_scores(region_feature, agents.features), cfg.epsilon),
        agents.agent_ids,
    )
    scores = np.zeros(refs.category_count + 1, dtype=np.float64)
    for label in range(refs.category_count + 1):
        total = 0.0
        for feat in _candidate_features(refs, label, cfg.use_subcategories):
            cand_dist = ranking_distribution(
                calibrate_scores(cosine_scores(feat, agents.features), cfg.epsilon),
                agents.agent_ids,
            )
            total += distribution_similarity(region_dist, cand_dist)
        scores[label] = total
    return int(np.argmax(scores)), scores


def classify_naive(region_feature: np.ndarray, refs: ReferenceSet) -> int:
    """Baseline: assign the label of the single most cosine-similar
    holistic reference feature (background included, ties to lower label)."""
    region_feature = np.asarray(region_feature, dtype=np.float64).reshape(-1)
    if region_feature.shape[0] != refs.feature_dim:
        raise ValidationError(
            f"region feature dim {region_feature.shape[0]} does not match "
            f"reference dim {refs.feature_dim}"
        )
    scores = cosine_scores(region_feature, refs.holistic_by_label())
    return int(np.argmax(scores))
