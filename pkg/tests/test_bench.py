"""Benchmark parameter counts (independent of models.param_count) and timings."""

import pytest

from kgembed.bench import bench, closed_form_count, format_report
from kgembed.models import param_count


class TestClosedForms:
    @pytest.mark.parametrize("kind", ("transe", "transh", "transr", "transf"))
    @pytest.mark.parametrize(
        "sizes",
        [
            (14951, 1345, 100, 100, 5),
            (40943, 18, 50, 50, 3),
            (7, 3, 2, 5, 1),
            (1000, 200, 64, 32, 15),
        ],
    )
    def test_matches_library_counts(self, kind, sizes):
        n_e, n_r, d_e, d_r, s = sizes
        if kind in ("transe", "transh"):
            d_r = d_e
        assert closed_form_count(kind, n_e, n_r, d_e, d_r, s) == param_count(
            kind, n_e, n_r, d_e, d_r, n_bases=s
        )

    def test_reference_ordering_at_paper_scale(self):
        transe = closed_form_count("transe", 14951, 1345, 100, 100, 5)
        transf = closed_form_count("transf", 14951, 1345, 100, 100, 5)
        transr = closed_form_count("transr", 14951, 1345, 100, 100, 5)
        assert (transe, transf, transr) == (1_629_600, 1_743_050, 15_079_600)
        assert transe < transf < transr


class TestBenchRun:
    def test_smoke_report(self):
        report = bench(
            ["transe", "transf", "transr"],
            n_entities=60,
            n_relations=6,
            n_triples=400,
            dim_e=8,
            dim_r=8,
            n_bases=2,
            epochs=1,
            warmup=1,
            batch_size=128,
            seed=0,
        )
        assert [row.model for row in report.rows] == ["transe", "transf", "transr"]
        assert all(row.seconds_per_epoch > 0 for row in report.rows)
        by_model = {row.model: row for row in report.rows}
        assert by_model["transf"].n_params < by_model["transr"].n_params
        assert report.transf_vs_transr_params == pytest.approx(
            by_model["transf"].n_params / by_model["transr"].n_params
        )
        assert report.transf_vs_transr_time is not None
        text = format_report(report)
        assert "transf/transr" in text
        assert str(by_model["transe"].n_params) in text

    def test_ratio_absent_without_both_models(self):
        report = bench(
            ["transe"],
            n_entities=40,
            n_relations=4,
            n_triples=200,
            dim_e=6,
            dim_r=6,
            epochs=1,
            warmup=0,
            batch_size=64,
        )
        assert report.transf_vs_transr_params is None
