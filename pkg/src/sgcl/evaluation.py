"""Full-ranking top-K evaluation and simple baseline scorers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from sgcl.graph import InteractionGraph

METRICS = ("precision", "recall", "ndcg")


def topk(scores: np.ndarray, k: int, exclude=()) -> np.ndarray:
    """Indices of the ``k`` best non-excluded scores, ties broken by lower index.

    Returns fewer than ``k`` items when there are not enough candidates.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = np.asarray(scores, dtype=np.float64)
    cand = np.ones(len(scores), dtype=bool)
    cand[np.asarray(list(exclude), dtype=np.int64)] = False
    items = np.flatnonzero(cand)
    order = np.lexsort((items, -scores[items]))
    return items[order[:k]]


def recall_at_k(ranked, test, k: int) -> float:
    test = set(test)
    if not test:
        raise ValueError("empty test set")
    return len(set(ranked[:k]) & test) / len(test)


def precision_at_k(ranked, test, k: int) -> float:
    return len(set(ranked[:k]) & set(test)) / k


def ndcg_at_k(ranked, test, k: int) -> float:
    test = set(test)
    if not test:
        raise ValueError("empty test set")
    dcg = sum(1.0 / np.log2(r + 2) for r, item in enumerate(ranked[:k]) if item in test)
    idcg = sum(1.0 / np.log2(r + 2) for r in range(min(k, len(test))))
    return dcg / idcg


@dataclass
class EvalReport:
    values: dict  # metric -> {k: mean}
    num_users: int
    per_user: dict = field(default_factory=dict)  # user -> {(metric, k): value}

    def flat(self) -> dict:
        return {f"{m}@{k}": v for m, by_k in self.values.items() for k, v in by_k.items()}


Scorer = Callable[[int], np.ndarray]


def embedding_scorer(e: np.ndarray, num_users: int) -> Scorer:
    items = e[num_users:]
    return lambda u: items @ e[u]


def evaluate_all(scorer, train: InteractionGraph, test: InteractionGraph, ks=(10, 20),
                 per_user: bool = False) -> EvalReport:
    """Average Precision/Recall/NDCG@K over users with a nonempty test set.

    ``scorer`` is an embedding table of shape ``(m + n, d)`` or a callable
    mapping a user index to a length-``n`` score vector.
    """
    if isinstance(scorer, np.ndarray):
        scorer = embedding_scorer(scorer, train.num_users)
    ks = tuple(sorted(ks))
    kmax = ks[-1]
    sums = {m: dict.fromkeys(ks, 0.0) for m in METRICS}
    breakdown = {}
    count = 0
    for u, truth in enumerate(test.user_adj):
        if len(truth) == 0:
            continue
        ranked = topk(scorer(u), kmax, exclude=train.user_adj[u]).tolist()
        row = {}
        for k in ks:
            row["precision", k] = precision_at_k(ranked, truth, k)
            row["recall", k] = recall_at_k(ranked, truth, k)
            row["ndcg", k] = ndcg_at_k(ranked, truth, k)
            for m in METRICS:
                sums[m][k] += row[m, k]
        if per_user:
            breakdown[u] = row
        count += 1
    if count == 0:
        raise ValueError("no evaluable users")
    values = {m: {k: v / count for k, v in by_k.items()} for m, by_k in sums.items()}
    return EvalReport(values, count, breakdown)


def improvement_percent(new: float, base: float) -> float:
    if base <= 0:
        raise ValueError("baseline must be positive")
    return 100.0 * (new - base) / base


def baseline_scores(kind: str, train: InteractionGraph, seed: int = 0) -> Scorer:
    """``random``: seeded uniform scores per (user, item); ``popularity``: item train degree.

    The random stream is keyed on ``(seed, 1)`` so it never coincides with a
    dataset generator that was seeded with the same integer.
    """
    if kind == "random":
        table = np.random.default_rng([seed, 1]).random((train.num_users, train.num_items))
        return lambda u: table[u]
    if kind == "popularity":
        pop = train.item_degrees().astype(np.float64)
        return lambda u: pop
    raise ValueError(f"unknown baseline {kind!r}")


def random_recall_expectation(train: InteractionGraph, test: InteractionGraph, k: int):
    """Mean and variance of Recall@k for uniformly random rankings.

    Hits for user ``u`` are hypergeometric: ``k`` draws from ``C_u`` candidates
    of which ``t_u`` are test items.
    """
    means, variances = [], []
    n = train.num_items
    for u, truth in enumerate(test.user_adj):
        t = len(truth)
        if t == 0:
            continue
        c = n - len(train.user_adj[u])
        draws = min(k, c)
        mean_hits = draws * t / c
        var_hits = draws * (t / c) * (1 - t / c) * (c - draws) / (c - 1) if c > 1 else 0.0
        means.append(mean_hits / t)
        variances.append(var_hits / t**2)
    users = len(means)
    return float(np.mean(means)), float(np.sum(variances) / users**2)


def write_report_csv(rows, path) -> None:
    """``rows`` of ``(epoch, split, EvalReport)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "split", "metric", "k", "value"])
        for epoch, split, report in rows:
            for metric, by_k in report.values.items():
                for k, v in by_k.items():
                    w.writerow([epoch, split, metric, k, repr(v)])
