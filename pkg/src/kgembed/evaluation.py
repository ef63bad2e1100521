"""Link-prediction ranking protocol: raw and filtered MR/MRR/Hits@k plus the
head/tail prediction breakdown by relation category.

For a test triple, one side is replaced by every entity; candidates are
ranked by energy (ascending). The filtered setting removes candidates that
form a different known-true triple before ranking. Ties are averaged by
default; optimistic/pessimistic policies are available for comparing against
published numbers whose tie handling is unknown.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .dataset import CATEGORIES, Dataset, KnownTripleIndex, RelationStats, compute_relation_stats
from .errors import KgeError
from .models import EnergyConfig, ModelParams

TIE_POLICIES = ("mean", "optimistic", "pessimistic")
SIDES = ("head", "tail")
HITS_KS = (1, 3, 10)


def rank_from_energies(
    energies: np.ndarray,
    target: int,
    exclude: np.ndarray | None = None,
    tie_policy: str = "mean",
) -> float:
    """Rank of the target among candidates by ascending energy.

    rank = 1 + #competitors with strictly lower energy, plus the tie share:
    half the equal-energy competitors ("mean"), none ("optimistic"), or all
    of them ("pessimistic"). `exclude` removes competitor indices entirely
    and must never contain the target.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}")
    mask = np.ones(energies.shape[0], dtype=bool)
    if exclude is not None and len(exclude):
        if np.any(np.asarray(exclude) == target):
            raise KgeError("internal error: the ranking target can never be filtered out")
        mask[exclude] = False
    mask[target] = False
    competitors = energies[mask]
    target_energy = energies[target]
    lower = int(np.count_nonzero(competitors < target_energy))
    ties = int(np.count_nonzero(competitors == target_energy))
    if tie_policy == "optimistic":
        return 1.0 + lower
    if tie_policy == "pessimistic":
        return 1.0 + lower + ties
    return 1.0 + lower + ties / 2.0


def _excluded_ids(known_index: KnownTripleIndex, triple, side: str, target: int) -> np.ndarray:
    h, r, t = (int(v) for v in triple)
    known = known_index.true_heads(r, t) if side == "head" else known_index.true_tails(h, r)
    return known[known != target]


def rank_candidates(
    params: ModelParams,
    config: EnergyConfig,
    triple,
    side: str,
    known_index: KnownTripleIndex | None = None,
    filtered: bool = False,
    tie_policy: str = "mean",
) -> float:
    """Rank the true entity of `side` against all candidate substitutions."""
    if filtered and known_index is None:
        raise ValueError("filtered ranking requires a known-triple index")
    energies = models.candidate_energies(params, config, triple, side)
    target = int(triple[0] if side == "head" else triple[2])
    exclude = _excluded_ids(known_index, triple, side, target) if filtered else None
    return rank_from_energies(energies, target, exclude, tie_policy)


@dataclass
class CategoryCell:
    hits10: float
    count: int


@dataclass
class CategoryBreakdown:
    """Hits@10 for head-entity and tail-entity prediction, split by the
    relation category of each test triple."""

    head: dict[str, CategoryCell]
    tail: dict[str, CategoryCell]


@dataclass
class MetricBlock:
    mr: float
    mrr: float
    hits: dict[int, float]
    breakdown: CategoryBreakdown


@dataclass
class EvalReport:
    raw: MetricBlock
    filtered: MetricBlock
    n_test: int
    tie_policy: str


def _aggregate(ranks_by_side: dict[str, np.ndarray], categories: list[str]) -> MetricBlock:
    all_ranks = np.concatenate([ranks_by_side["head"], ranks_by_side["tail"]])
    hits = {k: float(np.mean(all_ranks <= k)) for k in HITS_KS}
    breakdown = {}
    cats = np.array(categories)
    for side in SIDES:
        cells = {}
        for category in CATEGORIES:
            member = cats == category
            ranks = ranks_by_side[side][member]
            cells[category] = CategoryCell(
                hits10=float(np.mean(ranks <= 10)) if ranks.size else 0.0,
                count=int(ranks.size),
            )
        breakdown[side] = cells
    return MetricBlock(
        mr=float(np.mean(all_ranks)),
        mrr=float(np.mean(1.0 / all_ranks)),
        hits=hits,
        breakdown=CategoryBreakdown(head=breakdown["head"], tail=breakdown["tail"]),
    )


def evaluate_link_prediction(
    params: ModelParams,
    config: EnergyConfig,
    dataset: Dataset,
    known_index: KnownTripleIndex,
    stats: RelationStats | None = None,
    tie_policy: str = "mean",
) -> EvalReport:
    """Rank every test triple on both sides, in raw and filtered settings.

    Test triples are processed grouped by relation so the projected entity
    table is built once per (relation, side); the energies are identical to
    per-triple `candidate_energies` calls.
    """
    if dataset.test.size == 0:
        raise KgeError("evaluation requires a non-empty test split")
    if stats is None:
        stats = compute_relation_stats(dataset)

    test = dataset.test
    n_test = test.shape[0]
    raw_ranks = {side: np.empty(n_test, dtype=np.float64) for side in SIDES}
    filt_ranks = {side: np.empty(n_test, dtype=np.float64) for side in SIDES}
    categories = [stats.categories[int(r)] for r in test[:, 1]]

    by_relation: dict[int, list[int]] = {}
    for position, r in enumerate(test[:, 1]):
        by_relation.setdefault(int(r), []).append(position)

    for relation, positions in by_relation.items():
        rel_vec = params.rel[relation]
        for side in SIDES:
            table = models.projected_table(params, config, relation, side)
            fixed_side = "tail" if side == "head" else "head"
            for position in positions:
                h, r, t = (int(v) for v in test[position])
                fixed_entity = t if side == "head" else h
                target = h if side == "head" else t
                fixed = models.projected_entity(params, config, relation, fixed_entity, fixed_side)
                energies = models.energies_from_table(
                    table, rel_vec, fixed, side, config.norm
                )
                raw_ranks[side][position] = rank_from_energies(
                    energies, target, None, tie_policy
                )
                exclude = _excluded_ids(known_index, (h, r, t), side, target)
                filt_ranks[side][position] = rank_from_energies(
                    energies, target, exclude, tie_policy
                )

    return EvalReport(
        raw=_aggregate(raw_ranks, categories),
        filtered=_aggregate(filt_ranks, categories),
        n_test=n_test,
        tie_policy=tie_policy,
    )


def report_to_dict(report: EvalReport) -> dict:
    """JSON-ready structure mirroring the key-value text block."""
    def block(metrics: MetricBlock) -> dict:
        return {
            "mr": metrics.mr,
            "mrr": metrics.mrr,
            "hits": {str(k): v for k, v in metrics.hits.items()},
            "hep": {
                cat: {"hits@10": cell.hits10, "count": cell.count}
                for cat, cell in metrics.breakdown.head.items()
            },
            "tep": {
                cat: {"hits@10": cell.hits10, "count": cell.count}
                for cat, cell in metrics.breakdown.tail.items()
            },
        }

    return {
        "n_test": report.n_test,
        "tie_policy": report.tie_policy,
        "raw": block(report.raw),
        "filtered": block(report.filtered),
    }


def report_to_kv_lines(report: EvalReport) -> list[str]:
    """Flat `key<TAB>value` lines for the text report."""
    lines = [f"n_test\t{report.n_test}", f"tie_policy\t{report.tie_policy}"]
    for setting, metrics in (("raw", report.raw), ("filtered", report.filtered)):
        lines.append(f"{setting}.mr\t{metrics.mr:.6f}")
        lines.append(f"{setting}.mrr\t{metrics.mrr:.6f}")
        for k in HITS_KS:
            lines.append(f"{setting}.hits@{k}\t{metrics.hits[k]:.6f}")
        for side_name, cells in (("hep", metrics.breakdown.head), ("tep", metrics.breakdown.tail)):
            for category in CATEGORIES:
                cell = cells[category]
                lines.append(f"{setting}.{side_name}.{category}.hits@10\t{cell.hits10:.6f}")
                lines.append(f"{setting}.{side_name}.{category}.count\t{cell.count}")
    return lines
