"""Synthetic knowledge graphs for tests, demos and benchmarking.

`generate_clustered_kg` builds a graph with planted structure: entities carry
hidden attribute labels, N-to-1 relations point every entity at the anchor of
its label, 1-to-N relations invert them, plus 1-to-1 matchings and N-to-N
same-label relations. A single embedding space cannot satisfy all attribute
constraints at once, while per-relation projections can, which is exactly the
regime where factorized projections should beat plain translations.

`generate_random_kg` draws uniform triples; useful only for timing.
"""

from __future__ import annotations

import os

import numpy as np

from .dataset import Dataset, Vocabulary, make_dataset


def write_split_files(dataset: Dataset, directory) -> dict[str, str]:
    """Serialize the dataset as train.txt/valid.txt/test.txt name triples."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, split in dataset.splits().items():
        path = os.path.join(directory, f"{name}.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            for head, rel, tail in dataset.decode(split):
                handle.write(f"{head}\t{rel}\t{tail}\n")
        paths[name] = path
    return paths


def _split(rows: list, rng: np.random.Generator, test_frac: float, valid_frac: float):
    rows = list(rows)
    rng.shuffle(rows)
    n = len(rows)
    n_test = max(1, int(round(n * test_frac)))
    n_valid = max(1, int(round(n * valid_frac)))
    return rows[n_test + n_valid :], rows[n_test : n_test + n_valid], rows[:n_test]


def generate_clustered_kg(
    n_entities: int = 200,
    n_values: int = 5,
    n_shares: int = 525,
    seed: int = 0,
    test_frac: float = 0.10,
    valid_frac: float = 0.05,
) -> Dataset:
    """Attribute-structured KG with 12 relations covering all four categories.

    Entities get three independent attribute labels with `n_values` values
    each; the first 3 * n_values entities double as the per-label anchors.
    """
    n_attrs = 3
    if n_entities < n_attrs * n_values + 2:
        raise ValueError("need more entities than anchors")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_values, size=(n_entities, n_attrs))

    def anchor(attr: int, value: int) -> int:
        return attr * n_values + value

    relation_names: list[str] = []
    triples_by_relation: list[list[tuple[int, int, int]]] = []

    def add_relation(name: str, rows: list[tuple[int, int, int]]):
        relation_names.append(name)
        triples_by_relation.append(rows)

    # N-to-1: every entity points at the anchor of its label
    for attr in range(n_attrs):
        rows = [
            (e, len(relation_names), anchor(attr, int(labels[e, attr])))
            for e in range(n_entities)
            if e != anchor(attr, int(labels[e, attr]))
        ]
        add_relation(f"attr{attr}_of", [(h, attr, t) for h, _, t in rows])
    # 1-to-N: the inverses
    for attr in range(n_attrs):
        rows = [
            (anchor(attr, int(labels[e, attr])), 0, e)
            for e in range(n_entities)
            if e != anchor(attr, int(labels[e, attr]))
        ]
        add_relation(f"has_attr{attr}", rows)
    # 1-to-1: random matchings
    for m in range(2):
        order = rng.permutation(n_entities)
        rows = [(int(order[2 * i]), 0, int(order[2 * i + 1])) for i in range(n_entities // 2)]
        add_relation(f"match{m}", rows)
    # N-to-N: same-label pairs (one per attribute, plus one joint)
    for attr in range(n_attrs):
        pool = [
            (a, 0, b)
            for a in range(n_entities)
            for b in range(n_entities)
            if a != b and labels[a, attr] == labels[b, attr]
        ]
        picks = rng.choice(len(pool), size=min(n_shares, len(pool)), replace=False)
        add_relation(f"shares_attr{attr}", [pool[i] for i in picks])
    pool = [
        (a, 0, b)
        for a in range(n_entities)
        for b in range(n_entities)
        if a != b
        and labels[a, 0] == labels[b, 0]
        and labels[a, 1] == labels[b, 1]
    ]
    picks = rng.choice(len(pool), size=min(n_shares, len(pool)), replace=False)
    add_relation("shares_attr01", [pool[i] for i in picks])

    train, valid, test = [], [], []
    for rel_id, rows in enumerate(triples_by_relation):
        rows = [(h, rel_id, t) for h, _, t in rows]
        tr, va, te = _split(rows, rng, test_frac, valid_frac)
        train += tr
        valid += va
        test += te

    vocab = Vocabulary.from_names(
        [f"e{i:03d}" for i in range(n_entities)], relation_names
    )
    return make_dataset(vocab, train, valid, test)


def generate_random_kg(
    n_entities: int,
    n_relations: int,
    n_triples: int,
    seed: int = 0,
) -> Dataset:
    """Uniform random triples, all in the train split."""
    rng = np.random.default_rng(seed)
    train = np.stack(
        [
            rng.integers(0, n_entities, n_triples),
            rng.integers(0, n_relations, n_triples),
            rng.integers(0, n_entities, n_triples),
        ],
        axis=1,
    )
    vocab = Vocabulary.from_names(
        [f"e{i}" for i in range(n_entities)], [f"r{i}" for i in range(n_relations)]
    )
    return make_dataset(vocab, train)
