"""Experiment drivers shared by the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from sgcl.analysis import inject_fake_edges, sparsify, view_similarity
from sgcl.augment import edge_dropout, node_dropout, stratified_edge_dropout, stratified_node_dropout
from sgcl.centrality import Level, betweenness, stratify
from sgcl.encoder import propagate
from sgcl.evaluation import EvalReport, evaluate_all
from sgcl.graph import InteractionGraph, build_normalized_adjacency
from sgcl.trainer import TrainConfig, fit


def storage_round(theta: np.ndarray) -> np.ndarray:
    """Parameters as a checkpoint stores them (float32), widened back to float64."""
    return np.asarray(theta, dtype=np.float32).astype(np.float64)


def final_embeddings(theta: np.ndarray, train: InteractionGraph, layers: int) -> np.ndarray:
    return propagate(build_normalized_adjacency(train), theta, layers)


def train_and_evaluate(train: InteractionGraph, test: InteractionGraph, cfg: TrainConfig,
                       ks=(10, 20)):
    """Fit, then evaluate at checkpoint precision. Returns ``(theta, history, report)``."""
    theta, history = fit(train, cfg, test=test)
    e = final_embeddings(storage_round(theta), train, cfg.encoder.layers)
    return theta, history, evaluate_all(e, train, test, ks)


@dataclass
class RobustnessRow:
    mode: str
    ratio: float
    objective: str
    seed: int
    recall20: float
    ndcg20: float
    clean_recall20: float

    @property
    def relative_drop(self) -> float:
        return (self.clean_recall20 - self.recall20) / self.clean_recall20


def corrupt(train: InteractionGraph, mode: str, ratio: float, seed: int) -> InteractionGraph:
    if mode == "fake":
        return inject_fake_edges(train, ratio, seed)
    if mode == "sparse":
        return sparsify(train, ratio, seed)
    raise ValueError(f"unknown robustness mode {mode!r}")


def robustness(train, test, cfg: TrainConfig, mode: str, ratios, objectives=("scl", "infonce")):
    """Train each objective on clean and corrupted training sets; test set stays clean."""
    rows = []
    for obj in objectives:
        ocfg = replace(cfg, loss=replace(cfg.loss, objective=obj))
        _, _, clean = train_and_evaluate(train, test, ocfg)
        base = clean.values["recall"][20]
        for ratio in ratios:
            bad = corrupt(train, mode, ratio, cfg.seed)
            _, _, rep = train_and_evaluate(bad, test, ocfg)
            rows.append(RobustnessRow(mode, ratio, obj, cfg.seed, rep.values["recall"][20],
                                      rep.values["ndcg"][20], base))
    return rows


@dataclass
class MotivationRow:
    level: str
    seed: int
    flagged: int
    mean_cosine: float
    removed: int


def motivation(g: InteractionGraph, theta: np.ndarray, layers: int, ratio: float = 0.1,
               seeds=range(10), element: str = "edge"):
    """Noisy-view counts when dropout is confined to each importance level.

    The ``base`` rows drop uniformly at random over the whole graph.  View
    and original embeddings both come from propagating ``theta``.
    """
    node_scores, edge_scores = betweenness(g)
    strata = stratify(edge_scores if element == "edge" else node_scores)
    e_orig = propagate(build_normalized_adjacency(g), theta, layers)
    rows = []
    for level in ["base"] + [lv.name.lower() for lv in Level]:
        for seed in seeds:
            if level == "base":
                view = (edge_dropout if element == "edge" else node_dropout)(g, ratio, seed)
            elif element == "edge":
                view = stratified_edge_dropout(g, strata, level, ratio, seed)
            else:
                view = stratified_node_dropout(g, strata, level, ratio, seed)
            rep = view_similarity(e_orig, propagate(view.adjacency, theta, layers))
            rows.append(MotivationRow(level, seed, rep.num_flagged, float(rep.cosines.mean()),
                                      g.num_edges - view.graph.num_edges))
    return rows


def mean_flagged(rows, level: str) -> float:
    return float(np.mean([r.flagged for r in rows if r.level == level]))


def report_row(report: EvalReport) -> dict:
    return report.flat()
