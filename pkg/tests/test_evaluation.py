"""Ranking, tie policies, filtered metrics and the full report oracle."""

import numpy as np
import pytest

from kgembed.dataset import Vocabulary, build_known_index, compute_relation_stats, make_dataset
from kgembed.errors import KgeError
from kgembed.evaluation import (
    TIE_POLICIES,
    evaluate_link_prediction,
    rank_candidates,
    rank_from_energies,
    report_to_dict,
    report_to_kv_lines,
    _aggregate,
)
from kgembed.models import EnergyConfig, TransEParams

from helpers import brute_force_rank, brute_force_report, config_for, random_params


def random_instance(rng, kind=None, n_entities=8, n_relations=2, quantize=False):
    kinds = ("transe", "transh", "transr", "transf")
    kind = kind or kinds[int(rng.integers(len(kinds)))]
    norm = "l1" if rng.random() < 0.5 else "l2"
    normalize = bool(rng.random() < 0.5)
    config = config_for(kind, dim_e=3, dim_r=4 if kind in ("transr", "transf") else 3,
                        norm=norm, normalize=normalize)
    params = random_params(kind, n_entities, n_relations, config, rng)
    if quantize:
        # coarse grid creates plenty of exact energy ties
        for array in vars(params).values():
            array[...] = np.round(array, 1)
    return params, config


class TestRankFromEnergies:
    def test_unique_best_gets_rank_one(self):
        energies = np.array([3.0, 0.0, 5.0, 1.0])
        assert rank_from_energies(energies, 1) == 1.0

    def test_constant_energies_mean_tie(self):
        energies = np.zeros(5)
        assert rank_from_energies(energies, 2, tie_policy="mean") == 3.0
        assert rank_from_energies(energies, 2, tie_policy="optimistic") == 1.0
        assert rank_from_energies(energies, 2, tie_policy="pessimistic") == 5.0

    def test_exclusion_removes_competitors(self):
        energies = np.array([0.0, 1.0, 2.0, 3.0])
        assert rank_from_energies(energies, 3) == 4.0
        assert rank_from_energies(energies, 3, exclude=np.array([0, 1])) == 2.0

    def test_excluding_target_is_an_internal_error(self):
        with pytest.raises(KgeError, match="never"):
            rank_from_energies(np.zeros(4), 1, exclude=np.array([1]))

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            energies = np.round(rng.uniform(0, 3, size=12), 1)
            target = int(rng.integers(12))
            for policy in TIE_POLICIES:
                before = rank_from_energies(energies, target, tie_policy=policy)
                after = rank_from_energies(3.0 * energies + 1.0, target, tie_policy=policy)
                assert before == after


class TestRankCandidates:
    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(1)
        for trial in range(150):
            params, config = random_instance(rng, quantize=trial % 3 == 0)
            triple = (int(rng.integers(8)), int(rng.integers(2)), int(rng.integers(8)))
            side = "head" if rng.random() < 0.5 else "tail"
            known = _random_known_index(rng, triple)
            for policy in TIE_POLICIES:
                for filtered in (False, True):
                    fast = rank_candidates(
                        params, config, triple, side, known, filtered, policy
                    )
                    slow = brute_force_rank(
                        params, config, triple, side, known, filtered, policy
                    )
                    assert fast == slow

    def test_filtered_never_worse_than_raw(self):
        rng = np.random.default_rng(2)
        for _ in range(60):
            params, config = random_instance(rng)
            triple = (int(rng.integers(8)), int(rng.integers(2)), int(rng.integers(8)))
            known = _random_known_index(rng, triple)
            for side in ("head", "tail"):
                raw = rank_candidates(params, config, triple, side, known, False)
                filt = rank_candidates(params, config, triple, side, known, True)
                assert filt <= raw

    def test_perfect_model_rank_one(self):
        params = TransEParams(
            ent=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            rel=np.array([[1.0, 0.0]]),
        )
        config = EnergyConfig(dim_e=2, dim_r=2, normalize_projections=False)
        assert rank_candidates(params, config, (0, 0, 1), "tail") == 1.0
        assert rank_candidates(params, config, (0, 0, 1), "head") == 1.0


def _random_known_index(rng, must_contain):
    n_extra = int(rng.integers(0, 10))
    rows = [must_contain] + [
        (int(rng.integers(8)), int(rng.integers(2)), int(rng.integers(8)))
        for _ in range(n_extra)
    ]
    vocab = Vocabulary.from_names([f"e{i}" for i in range(8)], ["r0", "r1"])
    return build_known_index(make_dataset(vocab, rows))


class TestAggregation:
    def test_reference_arithmetic(self):
        ranks = {"head": np.array([1.0, 2.0, 4.0]), "tail": np.array([1.0, 2.0, 4.0])}
        block = _aggregate(ranks, ["1-1", "1-1", "1-1"])
        assert block.mr == pytest.approx(7 / 3)
        assert block.mrr == pytest.approx((1 + 0.5 + 0.25) / 3)
        assert block.hits[10] == 1.0
        assert block.hits[1] == pytest.approx(1 / 3)
        assert block.breakdown.head["1-1"].count == 3

    def test_hits_monotone_in_k(self):
        rng = np.random.default_rng(3)
        ranks = rng.integers(1, 30, size=40).astype(float)
        block = _aggregate({"head": ranks, "tail": ranks}, ["N-N"] * 40)
        assert block.hits[1] <= block.hits[3] <= block.hits[10]


class TestFullReport:
    def make_kg(self, seed=4, n_entities=10, n_relations=3, n_train=25, n_test=12):
        rng = np.random.default_rng(seed)
        draw = lambda n: [
            (int(rng.integers(n_entities)), int(rng.integers(n_relations)),
             int(rng.integers(n_entities)))
            for _ in range(n)
        ]
        vocab = Vocabulary.from_names(
            [f"e{i}" for i in range(n_entities)], [f"r{i}" for i in range(n_relations)]
        )
        return make_dataset(vocab, draw(n_train), draw(4), draw(n_test)), rng

    def test_matches_brute_force_evaluator(self):
        dataset, rng = self.make_kg()
        known = build_known_index(dataset)
        stats = compute_relation_stats(dataset)
        for kind in ("transe", "transf"):
            config = config_for(kind, dim_e=3, dim_r=4 if kind == "transf" else 3)
            params = random_params(kind, 10, 3, config, rng)
            report = evaluate_link_prediction(params, config, dataset, known, stats)
            oracle = brute_force_report(params, config, dataset, known, stats)
            for setting, metrics in (("raw", report.raw), ("filtered", report.filtered)):
                assert metrics.mr == pytest.approx(oracle[setting]["mr"], abs=1e-12)
                assert metrics.mrr == pytest.approx(oracle[setting]["mrr"], abs=1e-12)
                for k in (1, 3, 10):
                    assert metrics.hits[k] == oracle[setting]["hits"][k]
                for side_name, cells in (("hep", metrics.breakdown.head),
                                         ("tep", metrics.breakdown.tail)):
                    for cat, cell in cells.items():
                        hits10, count = oracle[setting][f"{side_name}.{cat}"]
                        assert cell.hits10 == pytest.approx(hits10, abs=1e-12)
                        assert cell.count == count

    def test_filtered_metrics_dominate_raw(self):
        dataset, rng = self.make_kg(seed=5)
        known = build_known_index(dataset)
        config = config_for("transh", dim_e=3)
        params = random_params("transh", 10, 3, config, rng)
        report = evaluate_link_prediction(params, config, dataset, known)
        assert report.filtered.mr <= report.raw.mr
        for k in (1, 3, 10):
            assert report.filtered.hits[k] >= report.raw.hits[k]

    def test_evaluation_is_pure(self):
        dataset, rng = self.make_kg(seed=6)
        known = build_known_index(dataset)
        config = config_for("transr", dim_e=3, dim_r=4)
        params = random_params("transr", 10, 3, config, rng)
        first = evaluate_link_prediction(params, config, dataset, known)
        second = evaluate_link_prediction(params, config, dataset, known)
        assert first == second

    def test_category_counts_sum_to_test_size(self):
        dataset, rng = self.make_kg(seed=7)
        known = build_known_index(dataset)
        config = config_for("transe", dim_e=3)
        params = random_params("transe", 10, 3, config, rng)
        report = evaluate_link_prediction(params, config, dataset, known)
        for cells in (report.raw.breakdown.head, report.raw.breakdown.tail):
            assert sum(cell.count for cell in cells.values()) == report.n_test

    def test_perfect_model_gets_perfect_metrics(self):
        vocab = Vocabulary.from_names(["a", "b", "c"], ["r"])
        dataset = make_dataset(vocab, [(0, 0, 1)], test=[(0, 0, 1)])
        known = build_known_index(dataset)
        params = TransEParams(
            ent=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            rel=np.array([[1.0, 0.0]]),
        )
        config = EnergyConfig(dim_e=2, dim_r=2, normalize_projections=False)
        report = evaluate_link_prediction(params, config, dataset, known)
        assert report.raw.mr == 1.0 and report.raw.mrr == 1.0
        assert all(v == 1.0 for v in report.raw.hits.values())

    def test_report_serializations(self):
        dataset, rng = self.make_kg(seed=8)
        known = build_known_index(dataset)
        config = config_for("transe", dim_e=3)
        params = random_params("transe", 10, 3, config, rng)
        report = evaluate_link_prediction(params, config, dataset, known)
        blob = report_to_dict(report)
        assert blob["raw"]["mr"] == report.raw.mr
        assert blob["filtered"]["hep"]["1-1"]["count"] == report.filtered.breakdown.head["1-1"].count
        lines = report_to_kv_lines(report)
        keys = {line.split("\t")[0] for line in lines}
        assert "raw.mr" in keys and "filtered.hits@10" in keys
        assert f"filtered.hep.N-1.hits@10" in keys
        for line in lines:
            assert len(line.split("\t")) == 2
