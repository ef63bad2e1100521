"""Relation-vector export for downstream visualization tools.

Each relation becomes one TSV row: its name, the translation vector, and for
transf the head/tail coefficient vectors appended (total width dim_r + 2s).
Floats are printed with up to 9 significant digits, enough to round-trip the
stored float32 values.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .dataset import Vocabulary
from .errors import DataError
from .models import ModelParams, TransFParams


def _fmt(value) -> str:
    return f"{float(value):.9g}"


def export_relations(
    params: ModelParams,
    vocabulary: Vocabulary,
    path,
    translation_only: bool = False,
) -> None:
    """Write one row per relation, in vocabulary order, atomically."""
    n_rel, dim_r = params.rel.shape
    if vocabulary.n_relations != n_rel:
        raise DataError(
            f"vocabulary has {vocabulary.n_relations} relations, params have {n_rel}"
        )
    with_coefs = isinstance(params, TransFParams) and not translation_only
    header = ["relation"] + [f"r_{i}" for i in range(dim_r)]
    if with_coefs:
        s = params.head_coef.shape[1]
        header += [f"alpha_{i}" for i in range(s)] + [f"beta_{i}" for i in range(s)]

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\t".join(header) + "\n")
            for r in range(n_rel):
                vector = params.rel[r]
                if with_coefs:
                    vector = np.concatenate([vector, params.head_coef[r], params.tail_coef[r]])
                fields = [vocabulary.relation_names[r]] + [_fmt(v) for v in vector]
                handle.write("\t".join(fields) + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
