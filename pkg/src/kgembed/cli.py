"""Command-line interface: prepare, train, eval, export-relations, bench, params.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from collections import Counter

import numpy as np

from . import bench as bench_mod
from . import models
from .checkpoint import CheckpointMetadata, load_checkpoint, save_checkpoint
from .dataset import build_known_index, compute_relation_stats, load_dataset
from .errors import DataError, NumericError, VocabularyMismatchError
from .evaluation import (
    TIE_POLICIES,
    evaluate_link_prediction,
    report_to_dict,
    report_to_kv_lines,
)
from .export import export_relations
from .models import EnergyConfig
from .training import TrainConfig, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _add_dataset_args(parser, required=True):
    parser.add_argument("--train", required=required, help="train split TSV")
    parser.add_argument("--valid", required=required, help="valid split TSV")
    parser.add_argument("--test", required=required, help="test split TSV")


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> _Parser:
    parser = _Parser(prog="kgembed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_prepare = sub.add_parser("prepare", help="validate a dataset and print statistics")
    _add_dataset_args(p_prepare)
    p_prepare.add_argument("--category-threshold", type=float, default=1.5)

    p_train = sub.add_parser("train", help="train a model and save a checkpoint")
    _add_dataset_args(p_train)
    p_train.add_argument("--model", required=True, choices=models.MODEL_KINDS)
    p_train.add_argument("--out", required=True, help="checkpoint output path")
    p_train.add_argument("--log", help="per-epoch training log path")
    p_train.add_argument("--dim-e", type=int, default=100)
    p_train.add_argument("--dim-r", type=int, default=None, help="defaults to --dim-e")
    p_train.add_argument("--bases", type=int, default=5, help="number of shared bases (transf)")
    p_train.add_argument("--margin", type=float, default=1.0)
    p_train.add_argument("--norm", choices=("l1", "l2"), default="l2")
    p_train.add_argument("--sampling", choices=("unif", "bern"), default="bern")
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--pretrain-epochs", type=int, default=0)
    p_train.add_argument("--lr", type=float, default=0.001)
    p_train.add_argument("--batch-size", type=int, default=4096)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--negatives", type=int, default=1, help="negatives per positive")
    p_train.add_argument("--filter-negatives", type=_onoff, default=True, metavar="{on,off}")
    p_train.add_argument("--normalize-projections", type=_onoff, default=True, metavar="{on,off}")
    p_train.add_argument("--early-stop", action="store_true")
    p_train.add_argument(
        "--init-from",
        metavar="CKPT",
        help="warm-start a transf run from a transe checkpoint instead of pretraining",
    )

    p_eval = sub.add_parser("eval", help="link-prediction evaluation of a checkpoint")
    _add_dataset_args(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--tie-policy", choices=TIE_POLICIES, default="mean")
    p_eval.add_argument("--report-out", help="write the structured (JSON) report here")
    p_eval.add_argument("--no-vocab-check", action="store_true")

    p_export = sub.add_parser("export-relations", help="dump relation vectors as TSV")
    _add_dataset_args(p_export)
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--translation-only", action="store_true")
    p_export.add_argument("--no-vocab-check", action="store_true")

    p_bench = sub.add_parser("bench", help="parameter/time benchmark across models")
    p_bench.add_argument("--models", default=",".join(models.MODEL_KINDS))
    p_bench.add_argument("--n-entities", type=int, default=2000)
    p_bench.add_argument("--n-relations", type=int, default=50)
    p_bench.add_argument("--n-triples", type=int, default=20000)
    p_bench.add_argument("--dim-e", type=int, default=100)
    p_bench.add_argument("--dim-r", type=int, default=100)
    p_bench.add_argument("--bases", type=int, default=5)
    p_bench.add_argument("--epochs", type=int, default=3)
    p_bench.add_argument("--warmup", type=int, default=1)
    p_bench.add_argument("--batch-size", type=int, default=4096)
    p_bench.add_argument("--seed", type=int, default=0)

    p_params = sub.add_parser("params", help="closed-form parameter count")
    p_params.add_argument("--model", required=True, choices=models.MODEL_KINDS)
    p_params.add_argument("--n-entities", type=int, required=True)
    p_params.add_argument("--n-relations", type=int, required=True)
    p_params.add_argument("--dim-e", type=int, required=True)
    p_params.add_argument("--dim-r", type=int, default=None)
    p_params.add_argument("--bases", type=int, default=5)
    return parser


def _cmd_prepare(args) -> int:
    dataset = load_dataset(args.train, args.valid, args.test)
    stats = compute_relation_stats(dataset, threshold=args.category_threshold)
    for warning in stats.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    histogram = Counter(stats.categories)
    print(f"entities\t{dataset.n_entities}")
    print(f"relations\t{dataset.n_relations}")
    for name, split in dataset.splits().items():
        print(f"{name}_triples\t{split.shape[0]}")
    for category in ("1-1", "1-N", "N-1", "N-N"):
        print(f"category.{category}\t{histogram.get(category, 0)}")
    return 0


def _energy_config(args, model: str) -> EnergyConfig:
    dim_r = args.dim_r if args.dim_r is not None else args.dim_e
    if model in ("transe", "transh"):
        dim_r = args.dim_e
    return EnergyConfig(
        dim_e=args.dim_e,
        dim_r=dim_r,
        norm=args.norm,
        n_bases=args.bases if model == "transf" else 0,
        normalize_projections=args.normalize_projections,
    )


def _cmd_train(args) -> int:
    dataset = load_dataset(args.train, args.valid, args.test)
    energy_config = _energy_config(args, args.model)
    train_config = TrainConfig(
        margin=args.margin,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        pretrain_epochs=args.pretrain_epochs,
        sampling="uniform" if args.sampling == "unif" else "bern",
        filter_negatives=args.filter_negatives,
        negatives_per_positive=args.negatives,
        seed=args.seed,
        early_stop=args.early_stop,
    )
    initial = None
    if args.init_from:
        source, source_meta = load_checkpoint(args.init_from)
        if args.model != "transf" or source_meta.model != "transe":
            raise DataError("--init-from expects --model transf and a transe checkpoint")
        if source_meta.vocab_hash != dataset.vocabulary.hash():
            raise VocabularyMismatchError("--init-from checkpoint vocabulary differs from dataset")
        initial = models.init_transf_from_transe(
            source, energy_config, np.random.default_rng(args.seed)
        )
    log_stream = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        params, logs = train(
            dataset, args.model, energy_config, train_config, log_stream, initial_params=initial
        )
    finally:
        if log_stream is not None:
            log_stream.close()
    metadata = CheckpointMetadata(
        model=args.model,
        n_entities=dataset.n_entities,
        n_relations=dataset.n_relations,
        dim_e=energy_config.dim_e,
        dim_r=energy_config.dim_r,
        n_bases=energy_config.n_bases,
        norm=energy_config.norm,
        normalize_projections=energy_config.normalize_projections,
        vocab_hash=dataset.vocabulary.hash(),
        train_config=train_config.to_dict(),
        epoch=logs[-1].epoch if logs else 0,
    )
    save_checkpoint(params, metadata, args.out)
    if logs:
        print(f"trained {args.model}: final mean loss {logs[-1].mean_loss:.6f} -> {args.out}")
    return 0


def _load_for_dataset(args):
    dataset = load_dataset(args.train, args.valid, args.test)
    params, metadata = load_checkpoint(args.checkpoint)
    if not args.no_vocab_check and metadata.vocab_hash != dataset.vocabulary.hash():
        raise VocabularyMismatchError(
            "checkpoint was trained on a different vocabulary "
            "(pass --no-vocab-check to override)"
        )
    return dataset, params, metadata


def _cmd_eval(args) -> int:
    dataset, params, metadata = _load_for_dataset(args)
    known_index = build_known_index(dataset)
    report = evaluate_link_prediction(
        params,
        metadata.energy_config(),
        dataset,
        known_index,
        tie_policy=args.tie_policy,
    )
    for line in report_to_kv_lines(report):
        print(line)
    if args.report_out:
        _write_atomic(args.report_out, json.dumps(report_to_dict(report), indent=2) + "\n")
    return 0


def _cmd_export(args) -> int:
    dataset, params, _ = _load_for_dataset(args)
    export_relations(params, dataset.vocabulary, args.out, translation_only=args.translation_only)
    print(f"wrote {dataset.n_relations} relation vectors -> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    report = bench_mod.bench(
        kinds,
        n_entities=args.n_entities,
        n_relations=args.n_relations,
        n_triples=args.n_triples,
        dim_e=args.dim_e,
        dim_r=args.dim_r,
        n_bases=args.bases,
        epochs=args.epochs,
        warmup=args.warmup,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    print(bench_mod.format_report(report))
    return 0


def _cmd_params(args) -> int:
    dim_r = args.dim_r if args.dim_r is not None else args.dim_e
    count = models.param_count(
        args.model, args.n_entities, args.n_relations, args.dim_e, dim_r,
        n_bases=args.bases if args.model == "transf" else 0,
    )
    print(count)
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "export-relations": _cmd_export,
    "bench": _cmd_bench,
    "params": _cmd_params,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
