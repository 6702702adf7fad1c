"""Per-cycle similar/dissimilar pair sets from nearest neighbors.

At every training cycle each sample contributes a pair with its nearest
same-class neighbor and a pair with its nearest other-class neighbor, both
measured under the metric learned in the previous cycle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import SingleClassDataset
from .metric import pairwise_distances

log = logging.getLogger(__name__)


class Relation(enum.IntEnum):
    SIMILAR = 0
    DISSIMILAR = 1

    @property
    def sign(self) -> int:
        """+1 for similar pairs, -1 for dissimilar ones."""
        return 1 if self is Relation.SIMILAR else -1


@dataclass(frozen=True)
class Pair:
    i: int
    j: int
    relation: Relation

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"degenerate pair ({self.i}, {self.j})")

    @property
    def key(self):
        return (min(self.i, self.j), max(self.i, self.j))


@dataclass(frozen=True)
class PairSet:
    similar: tuple
    dissimilar: tuple
    cycle: int = 0

    def __len__(self):
        return len(self.similar) + len(self.dissimilar)

    def __iter__(self):
        yield from self.similar
        yield from self.dissimilar

    def to_text(self) -> str:
        lines = [f"# cycle {self.cycle}: |S|={len(self.similar)} |D|={len(self.dissimilar)}"]
        lines += [f"S {p.i} {p.j}" for p in self.similar]
        lines += [f"D {p.i} {p.j}" for p in self.dissimilar]
        return "\n".join(lines) + "\n"


def _neighbors_from_row(row, labels, i):
    same = labels == labels[i]
    same[i] = False
    other = labels != labels[i]
    sim = int(np.argmin(np.where(same, row, np.inf))) if same.any() else None
    dis = int(np.argmin(np.where(other, row, np.inf))) if other.any() else None
    return sim, dis


def nearest_neighbors(ds: Dataset, M, i: int):
    """Indices of the nearest similar and dissimilar neighbors of sample ``i``.

    Either entry is ``None`` when no candidate exists. Ties go to the smallest
    index.
    """
    row = pairwise_distances(ds.X[i], M, ds.X)[0]
    return _neighbors_from_row(row, ds.labels, i)


def build_pairset(ds: Dataset, M, cycle: int = 0) -> PairSet:
    """Assemble the cycle's pair sets under metric ``M``.

    Pairs are produced in sample order as ``(i, neighbor)``; when the
    unordered pair was already produced by an earlier sample it is dropped.
    """
    if len(ds.class_table) < 2:
        raise SingleClassDataset(f"need at least 2 classes, found {len(ds.class_table)}")
    D = pairwise_distances(ds.X, M)
    similar, dissimilar = [], []
    seen_s, seen_d = set(), set()
    lonely = []
    for i in range(ds.n):
        sim, dis = _neighbors_from_row(D[i], ds.labels, i)
        if sim is None:
            lonely.append(i)
        else:
            p = Pair(i, sim, Relation.SIMILAR)
            if p.key not in seen_s:
                seen_s.add(p.key)
                similar.append(p)
        p = Pair(i, dis, Relation.DISSIMILAR)
        if p.key not in seen_d:
            seen_d.add(p.key)
            dissimilar.append(p)
    if lonely:
        log.warning("%d sample(s) have no same-class peer; only dissimilar pairs used for them", len(lonely))
    return PairSet(tuple(similar), tuple(dissimilar), cycle)
