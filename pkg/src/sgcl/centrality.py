"""Brandes betweenness on the interaction graph and importance stratification."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from sgcl import kernels
from sgcl.graph import InteractionGraph, block_csr, ceil_frac


class Level(enum.IntEnum):
    HIGHEST = 0
    HIGH = 1
    MIDDLE = 2
    LOW = 3

    @classmethod
    def parse(cls, name) -> "Level":
        if isinstance(name, Level):
            return name
        return cls[str(name).upper()]


# cumulative upper rank fractions for Highest / High / Middle; the rest is Low
LEVEL_CUTS = (0.01, 0.04, 0.10)


@dataclass(frozen=True)
class CentralityScores:
    """Unnormalized betweenness; each unordered node pair contributes once.

    For ``kind == "node"`` element ``k`` is block-graph node ``k`` (users
    first, then items); for ``kind == "edge"`` it is row ``k`` of ``g.edges``.
    """

    kind: str
    scores: np.ndarray

    def __len__(self):
        return len(self.scores)


@dataclass(frozen=True)
class ImportanceStrata:
    levels: np.ndarray  # Level value per element
    cuts: tuple  # rank cut positions for Highest, High, Middle

    def members(self, level) -> np.ndarray:
        return np.flatnonzero(self.levels == Level.parse(level))

    def sizes(self) -> dict:
        return {lv.name.lower(): int(np.sum(self.levels == lv)) for lv in Level}


def betweenness(g: InteractionGraph) -> tuple[CentralityScores, CentralityScores]:
    """Node and edge betweenness from a single Brandes pass."""
    indptr, indices, eids = block_csr(g)
    node, edge = kernels.brandes(indptr, indices, eids, g.num_edges)
    return CentralityScores("node", np.asarray(node)), CentralityScores("edge", np.asarray(edge))


def brandes_node_betweenness(g: InteractionGraph) -> CentralityScores:
    return betweenness(g)[0]


def brandes_edge_betweenness(g: InteractionGraph) -> CentralityScores:
    return betweenness(g)[1]


def stratify(scores: CentralityScores | np.ndarray) -> ImportanceStrata:
    """Rank-based four-level split: top 1% Highest, next 3% High, next 6% Middle.

    Ties are broken by element index so the result is deterministic.
    """
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    n = len(values)
    order = np.lexsort((np.arange(n), -values))
    cuts = tuple(ceil_frac(f, n) for f in LEVEL_CUTS)
    levels = np.full(n, Level.LOW, dtype=np.int8)
    start = 0
    for lv, stop in zip((Level.HIGHEST, Level.HIGH, Level.MIDDLE), cuts):
        levels[order[start:stop]] = lv
        start = max(start, stop)
    return ImportanceStrata(levels, cuts)
