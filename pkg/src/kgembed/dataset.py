"""Triple dataset loading, vocabularies, known-triple index and relation statistics.

File format: UTF-8 text, one `head<TAB>relation<TAB>tail` triple per line,
no header. `\r\n` endings are tolerated; blank lines are skipped.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

Triple = tuple[int, int, int]

CATEGORY_1_1 = "1-1"
CATEGORY_1_N = "1-N"
CATEGORY_N_1 = "N-1"
CATEGORY_N_N = "N-N"
CATEGORIES = (CATEGORY_1_1, CATEGORY_1_N, CATEGORY_N_1, CATEGORY_N_N)


@dataclass(frozen=True)
class Vocabulary:
    """Dense integer ids for entity and relation names, in first-appearance order."""

    entity_names: tuple[str, ...]
    relation_names: tuple[str, ...]
    entity_ids: dict[str, int] = field(repr=False, compare=False, default_factory=dict)
    relation_ids: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_names(cls, entity_names, relation_names) -> "Vocabulary":
        entity_names = tuple(entity_names)
        relation_names = tuple(relation_names)
        ent_ids = {name: i for i, name in enumerate(entity_names)}
        rel_ids = {name: i for i, name in enumerate(relation_names)}
        if len(ent_ids) != len(entity_names):
            raise DataError("duplicate entity names in vocabulary")
        if len(rel_ids) != len(relation_names):
            raise DataError("duplicate relation names in vocabulary")
        return cls(entity_names, relation_names, ent_ids, rel_ids)

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def hash(self) -> str:
        """SHA-256 over the ordered names; identifies the id assignment."""
        digest = hashlib.sha256()
        for name in self.entity_names:
            digest.update(name.encode("utf-8"))
            digest.update(b"\x00")
        digest.update(b"\x01")
        for name in self.relation_names:
            digest.update(name.encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()


@dataclass(frozen=True)
class Dataset:
    """Id-encoded train/valid/test splits over a shared vocabulary.

    Splits are int64 arrays of shape (n, 3) with columns (head, relation, tail).
    """

    vocabulary: Vocabulary
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray

    @property
    def n_entities(self) -> int:
        return self.vocabulary.n_entities

    @property
    def n_relations(self) -> int:
        return self.vocabulary.n_relations

    def splits(self) -> dict[str, np.ndarray]:
        return {"train": self.train, "valid": self.valid, "test": self.test}

    def decode(self, triples: np.ndarray) -> list[tuple[str, str, str]]:
        """Map id triples back to (head, relation, tail) name tuples."""
        ents = self.vocabulary.entity_names
        rels = self.vocabulary.relation_names
        return [(ents[h], rels[r], ents[t]) for h, r, t in np.asarray(triples)]


def _as_triple_array(triples) -> np.ndarray:
    arr = np.asarray(triples, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataError(f"triple array must have shape (n, 3), got {arr.shape}")
    arr.setflags(write=False)
    return arr


def make_dataset(vocabulary: Vocabulary, train, valid=(), test=()) -> Dataset:
    """Build a Dataset from id triples, validating ids against the vocabulary."""
    splits = {}
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        arr = _as_triple_array(rows)
        if arr.size:
            if arr.min() < 0:
                raise DataError(f"{name} split contains negative ids")
            if arr[:, [0, 2]].max() >= vocabulary.n_entities:
                raise DataError(f"{name} split contains entity ids out of range")
            if arr[:, 1].max() >= vocabulary.n_relations:
                raise DataError(f"{name} split contains relation ids out of range")
        splits[name] = arr
    return Dataset(vocabulary, splits["train"], splits["valid"], splits["test"])


def _parse_file(path) -> list[tuple[str, str, str]]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            rows.append((fields[0], fields[1], fields[2]))
    return rows


def load_dataset(train_path, valid_path, test_path) -> Dataset:
    """Load the three split files and id-encode them against a shared vocabulary.

    The vocabulary covers the union of all splits so test-only entities stay
    encodable; ids are assigned in first-appearance order (train, valid, test;
    within a line: head then tail).
    """
    raw = {
        "train": _parse_file(train_path),
        "valid": _parse_file(valid_path),
        "test": _parse_file(test_path),
    }
    if not raw["train"]:
        raise DataError(f"train split {train_path} is empty")

    ent_ids: dict[str, int] = {}
    rel_ids: dict[str, int] = {}
    for split in ("train", "valid", "test"):
        for head, rel, tail in raw[split]:
            if head not in ent_ids:
                ent_ids[head] = len(ent_ids)
            if rel not in rel_ids:
                rel_ids[rel] = len(rel_ids)
            if tail not in ent_ids:
                ent_ids[tail] = len(ent_ids)

    vocab = Vocabulary.from_names(ent_ids.keys(), rel_ids.keys())
    encoded = {
        split: [(ent_ids[h], rel_ids[r], ent_ids[t]) for h, r, t in rows]
        for split, rows in raw.items()
    }
    return make_dataset(vocab, encoded["train"], encoded["valid"], encoded["test"])


class KnownTripleIndex:
    """Membership set over train ∪ valid ∪ test, with per-slot lookups for
    filtered ranking (all true heads of (r, t), all true tails of (h, r))."""

    def __init__(self, dataset: Dataset):
        triples: set[Triple] = set()
        heads_by_rt: dict[tuple[int, int], set[int]] = {}
        tails_by_hr: dict[tuple[int, int], set[int]] = {}
        for split in dataset.splits().values():
            for h, r, t in split:
                h, r, t = int(h), int(r), int(t)
                triples.add((h, r, t))
                heads_by_rt.setdefault((r, t), set()).add(h)
                tails_by_hr.setdefault((h, r), set()).add(t)
        self._triples = triples
        self._heads_by_rt = {k: np.fromiter(v, dtype=np.int64) for k, v in heads_by_rt.items()}
        self._tails_by_hr = {k: np.fromiter(v, dtype=np.int64) for k, v in tails_by_hr.items()}

    def __contains__(self, triple) -> bool:
        h, r, t = triple
        return (int(h), int(r), int(t)) in self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def true_heads(self, relation: int, tail: int) -> np.ndarray:
        """Entity ids h such that (h, relation, tail) is a known triple."""
        return self._heads_by_rt.get((relation, tail), _EMPTY_IDS)

    def true_tails(self, head: int, relation: int) -> np.ndarray:
        """Entity ids t such that (head, relation, t) is a known triple."""
        return self._tails_by_hr.get((head, relation), _EMPTY_IDS)


_EMPTY_IDS = np.empty(0, dtype=np.int64)


def build_known_index(dataset: Dataset) -> KnownTripleIndex:
    """Index every triple of every split for filtered evaluation and sampling."""
    return KnownTripleIndex(dataset)


@dataclass(frozen=True)
class RelationStats:
    """Per-relation head/tail multiplicity averages and the derived category.

    hpt[r] = (#train triples with r) / (#distinct tails of r); tph analogous
    with distinct heads. Relations absent from train get hpt = tph = 0 and
    category 1-1 by convention, and are listed in `warnings`.
    """

    hpt: np.ndarray
    tph: np.ndarray
    categories: tuple[str, ...]
    threshold: float
    warnings: tuple[str, ...]

    @property
    def n_relations(self) -> int:
        return len(self.categories)


def categorize(hpt: float, tph: float, threshold: float = 1.5) -> str:
    """Relation category from multiplicity averages.

    tph above the threshold means a head links many tails (1-N side);
    hpt above it means a tail links many heads (N-1 side).
    """
    many_tails = tph > threshold
    many_heads = hpt > threshold
    if many_tails and many_heads:
        return CATEGORY_N_N
    if many_tails:
        return CATEGORY_1_N
    if many_heads:
        return CATEGORY_N_1
    return CATEGORY_1_1


def compute_relation_stats(dataset: Dataset, threshold: float = 1.5) -> RelationStats:
    """Compute hpt/tph and categories from the train split only."""
    if dataset.train.size == 0:
        raise DataError("relation statistics require a non-empty train split")
    n_rel = dataset.n_relations
    counts = np.zeros(n_rel, dtype=np.int64)
    heads: list[set[int]] = [set() for _ in range(n_rel)]
    tails: list[set[int]] = [set() for _ in range(n_rel)]
    for h, r, t in dataset.train:
        r = int(r)
        counts[r] += 1
        heads[r].add(int(h))
        tails[r].add(int(t))

    hpt = np.zeros(n_rel, dtype=np.float64)
    tph = np.zeros(n_rel, dtype=np.float64)
    categories = []
    warnings = []
    for r in range(n_rel):
        if counts[r] == 0:
            name = dataset.vocabulary.relation_names[r]
            warnings.append(f"relation {name!r} (id {r}) absent from train; stats default to 0")
            categories.append(CATEGORY_1_1)
            continue
        hpt[r] = counts[r] / len(tails[r])
        tph[r] = counts[r] / len(heads[r])
        categories.append(categorize(hpt[r], tph[r], threshold))
    for message in warnings:
        logger.warning(message)

    hpt.setflags(write=False)
    tph.setflags(write=False)
    return RelationStats(hpt, tph, tuple(categories), threshold, tuple(warnings))
