"""Parameter-count and epoch-time benchmarking across model kinds.

Counts are recomputed here from scratch (not via models.param_count) so the
benchmark independently cross-checks the library's closed forms; a test
asserts the two always agree. Timings run the real training loop on a
synthetic dataset: one warm-up epoch, then the median of the measured epochs.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .errors import DataError
from .models import MODEL_KINDS, EnergyConfig
from .synth import generate_random_kg
from .training import TrainConfig, train


def closed_form_count(kind: str, n_entities: int, n_relations: int, dim_e: int, dim_r: int, n_bases: int) -> int:
    """Independent restatement of each model's parameter total."""
    entity_block = n_entities * dim_e
    if kind == "transe":
        return entity_block + n_relations * dim_e
    if kind == "transh":
        return entity_block + n_relations * dim_e + n_relations * dim_e
    if kind == "transr":
        return entity_block + n_relations * dim_r + n_relations * dim_r * dim_e
    if kind == "transf":
        return (
            entity_block
            + n_relations * dim_r
            + 2 * n_relations * n_bases
            + 2 * n_bases * dim_r * dim_e
        )
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class BenchRow:
    model: str
    n_params: int
    seconds_per_epoch: float


@dataclass
class BenchReport:
    n_entities: int
    n_relations: int
    n_triples: int
    dim_e: int
    dim_r: int
    n_bases: int
    rows: list[BenchRow]
    transf_vs_transr_params: float | None
    transf_vs_transr_time: float | None


def bench(
    model_kinds,
    n_entities: int,
    n_relations: int,
    n_triples: int,
    dim_e: int,
    dim_r: int,
    n_bases: int = 5,
    epochs: int = 3,
    warmup: int = 1,
    batch_size: int = 4096,
    norm: str = "l2",
    seed: int = 0,
    dataset=None,
) -> BenchReport:
    """Measure parameter totals and seconds per training epoch per model."""
    for kind in model_kinds:
        if kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {kind!r}")
    if dataset is None:
        dataset = generate_random_kg(n_entities, n_relations, n_triples, seed=seed)
    else:
        n_entities = dataset.n_entities
        n_relations = dataset.n_relations
        n_triples = dataset.train.shape[0]

    rows = []
    for kind in model_kinds:
        d_r = dim_e if kind in ("transe", "transh") else dim_r
        config = EnergyConfig(dim_e=dim_e, dim_r=d_r, norm=norm, n_bases=n_bases if kind == "transf" else 0)
        train_config = TrainConfig(
            epochs=warmup + epochs,
            batch_size=batch_size,
            seed=seed,
            sampling="uniform",
        )
        _, logs = train(dataset, kind, config, train_config)
        timed = [log.seconds for log in logs[warmup:]]
        rows.append(
            BenchRow(
                model=kind,
                n_params=closed_form_count(kind, n_entities, n_relations, dim_e, d_r, n_bases),
                seconds_per_epoch=statistics.median(timed),
            )
        )

    by_model = {row.model: row for row in rows}
    ratio_params = ratio_time = None
    if "transf" in by_model and "transr" in by_model:
        ratio_params = by_model["transf"].n_params / by_model["transr"].n_params
        ratio_time = by_model["transf"].seconds_per_epoch / by_model["transr"].seconds_per_epoch
    return BenchReport(
        n_entities=n_entities,
        n_relations=n_relations,
        n_triples=n_triples,
        dim_e=dim_e,
        dim_r=dim_r,
        n_bases=n_bases,
        rows=rows,
        transf_vs_transr_params=ratio_params,
        transf_vs_transr_time=ratio_time,
    )


def format_report(report: BenchReport) -> str:
    lines = [
        f"entities={report.n_entities} relations={report.n_relations} "
        f"triples={report.n_triples} dim_e={report.dim_e} dim_r={report.dim_r} "
        f"bases={report.n_bases}",
        "model\tparams\tseconds_per_epoch",
    ]
    for row in report.rows:
        lines.append(f"{row.model}\t{row.n_params}\t{row.seconds_per_epoch:.3f}")
    if report.transf_vs_transr_params is not None:
        lines.append(
            f"transf/transr\tparams_ratio={report.transf_vs_transr_params:.4f}"
            f"\ttime_ratio={report.transf_vs_transr_time:.4f}"
        )
    return "\n".join(lines)
