"""Negative-triple generation with uniform and multiplicity-aware ("bern") corruption.

Given a true triple, corrupt exactly one of head/tail: under "bern" the head
is replaced with probability tph/(tph+hpt) (and the tail otherwise), which
lowers the false-negative rate for skewed relations. Candidates that are
themselves known-true triples are rejected and redrawn, bounded at
`max_attempts`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import KnownTripleIndex, RelationStats, Triple
from .errors import DataError

logger = logging.getLogger(__name__)

SAMPLING_MODES = ("uniform", "bern")


@dataclass
class CorruptionPolicy:
    mode: str = "uniform"
    stats: RelationStats | None = None
    filter_known: bool = True
    max_attempts: int = 100
    exhausted_count: int = 0  # times a sample ran out of attempts
    _warned: set = field(default_factory=set, repr=False)

    def __post_init__(self):
        if self.mode not in SAMPLING_MODES:
            raise ValueError(f"mode must be one of {SAMPLING_MODES}, got {self.mode!r}")
        if self.mode == "bern" and self.stats is None:
            raise DataError("bern corruption requires relation statistics")


def corruption_probabilities(policy: CorruptionPolicy, relation: int) -> tuple[float, float]:
    """(p_corrupt_head, p_corrupt_tail) for the relation; they sum to 1."""
    if policy.mode == "uniform":
        return 0.5, 0.5
    stats = policy.stats
    if relation >= stats.n_relations or relation < 0:
        raise DataError(f"relation id {relation} outside statistics table")
    hpt = float(stats.hpt[relation])
    tph = float(stats.tph[relation])
    total = hpt + tph
    if total == 0.0:
        if relation not in policy._warned:
            policy._warned.add(relation)
            logger.warning(
                "relation %d has no multiplicity statistics; falling back to uniform corruption",
                relation,
            )
        return 0.5, 0.5
    return tph / total, hpt / total


def sample_negative(
    policy: CorruptionPolicy,
    triple,
    n_entities: int,
    known_index: KnownTripleIndex | None,
    rng: np.random.Generator,
) -> Triple:
    """Corrupt one slot of the triple with a different, uniformly drawn entity.

    Each attempt re-draws the side (per `corruption_probabilities`) and the
    replacement; attempts whose result is a known-true triple are rejected
    when `filter_known` is set. After `max_attempts` failed attempts the last
    candidate is returned anyway and `policy.exhausted_count` is bumped.
    """
    if n_entities < 2:
        raise DataError("need at least 2 entities to corrupt a triple")
    h, r, t = (int(v) for v in triple)
    p_head, _ = corruption_probabilities(policy, r)
    candidate = (h, r, t)
    for _ in range(policy.max_attempts):
        corrupt_head = rng.random() < p_head
        original = h if corrupt_head else t
        replacement = int(rng.integers(0, n_entities - 1))
        if replacement >= original:
            replacement += 1
        candidate = (replacement, r, t) if corrupt_head else (h, r, replacement)
        if not policy.filter_known or known_index is None or candidate not in known_index:
            return candidate
    policy.exhausted_count += 1
    return candidate
