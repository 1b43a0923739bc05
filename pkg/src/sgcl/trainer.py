"""Mini-batch training loop, Adam, and the binary checkpoint format."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from sgcl.augment import AugmentationConfig, derive_seed, make_view
from sgcl.encoder import EncoderConfig, init_embeddings, propagate
from sgcl.graph import InteractionGraph, build_normalized_adjacency
from sgcl.losses import LossConfig, combined_objective

log = logging.getLogger(__name__)

MAX_NEG_TRIES = 1000


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 4096
    epochs: int = 100
    seed: int = 0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    augment: AugmentationConfig = field(default_factory=AugmentationConfig)
    eval_every: int = 0
    patience: int = 0

    def __post_init__(self):
        if not self.lr >= 0:
            raise ValueError("lr must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, theta: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(theta), np.zeros_like(theta))


def adam_step(theta: np.ndarray, grad: np.ndarray, state: AdamState, lr: float):
    """Bias-corrected Adam update; returns new ``(theta, state)`` without mutating inputs."""
    if grad.shape != theta.shape:
        raise ValueError("gradient shape does not match parameters")
    if not np.all(np.isfinite(grad)):
        raise TrainingError(f"non-finite gradient at Adam step {state.step + 1}")
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_theta, AdamState(m, v, t, state.beta1, state.beta2, state.eps)


def sample_bpr_batch(train: InteractionGraph, batch: int, rng: np.random.Generator):
    """``(users, pos_items, neg_items)``: edges uniform with replacement, negatives by rejection."""
    if train.num_edges == 0:
        raise ValueError("training graph has no edges")
    picks = rng.integers(0, train.num_edges, size=batch)
    users = train.edges[picks, 0].copy()
    pos = train.edges[picks, 1].copy()
    neg = rng.integers(0, train.num_items, size=batch)
    bad = np.flatnonzero(train.has_edges(users, neg))
    tries = 0
    while len(bad):
        tries += 1
        if tries > MAX_NEG_TRIES:
            raise TrainingError(f"could not sample a negative item for user {users[bad[0]]}")
        neg[bad] = rng.integers(0, train.num_items, size=len(bad))
        bad = bad[train.has_edges(users[bad], neg[bad])]
    return users, pos, neg


@dataclass
class EpochStats:
    epoch: int
    loss_total: float
    loss_bpr: float
    loss_scl_user: float
    loss_scl_item: float
    metrics: dict = field(default_factory=dict)


class Trainer:
    """Holds parameters, optimizer state and RNG across epochs."""

    def __init__(self, train: InteractionGraph, cfg: TrainConfig, theta: np.ndarray | None = None):
        self.train = train
        self.cfg = cfg
        if theta is None:
            theta = init_embeddings(train.num_users, train.num_items, cfg.encoder.dim, cfg.seed)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.adam = AdamState.zeros_like(self.theta)
        self.adj = build_normalized_adjacency(train)
        self.rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
        self.epoch = 0

    def views(self, epoch: int):
        cfg = self.cfg
        layers = cfg.encoder.layers
        base = cfg.augment.seed + cfg.seed
        v1 = make_view(self.train, cfg.augment, layers, derive_seed(base, epoch, 0))
        v2 = make_view(self.train, cfg.augment, layers, derive_seed(base, epoch, 1))
        return v1, v2

    def train_epoch(self) -> EpochStats:
        cfg = self.cfg
        need_views = cfg.loss.beta > 0 and cfg.loss.objective != "none"
        if need_views:
            v1, v2 = self.views(self.epoch)
            a1, a2 = v1.adjacency, v2.adjacency
        else:
            a1 = a2 = self.adj
        n_batches = max(1, math.ceil(self.train.num_edges / cfg.batch_size))
        sums = np.zeros(4)
        for b in range(n_batches):
            triples = sample_bpr_batch(self.train, cfg.batch_size, self.rng)
            terms, grad = combined_objective(
                self.theta, self.train.num_users, self.adj, a1, a2,
                cfg.encoder.layers, triples, cfg.loss,
            )
            if not math.isfinite(terms.total):
                raise TrainingError(f"non-finite loss at epoch {self.epoch}, batch {b}")
            self.theta, self.adam = adam_step(self.theta, grad, self.adam, cfg.lr)
            sums += (terms.total, terms.bpr, terms.cl_user, terms.cl_item)
        sums /= n_batches
        stats = EpochStats(self.epoch, *map(float, sums))
        self.epoch += 1
        return stats

    def embeddings(self) -> np.ndarray:
        return propagate(self.adj, self.theta, self.cfg.encoder.layers)


def train_epoch(trainer: Trainer) -> EpochStats:
    return trainer.train_epoch()


def fit(train: InteractionGraph, cfg: TrainConfig, test: InteractionGraph | None = None,
        callback=None):
    """Run ``cfg.epochs`` epochs; returns ``(theta, history)``.

    With ``test`` and ``eval_every > 0`` the model is evaluated periodically
    (metrics land in ``EpochStats.metrics``); with ``patience > 0`` training
    stops after that many evaluations without a Recall@20 gain and the best
    parameters are returned.
    """
    from sgcl.evaluation import evaluate_all

    trainer = Trainer(train, cfg)
    history = []
    best = (-np.inf, trainer.theta.copy())
    stale = 0
    for _ in range(cfg.epochs):
        stats = trainer.train_epoch()
        if test is not None and cfg.eval_every and (stats.epoch + 1) % cfg.eval_every == 0:
            report = evaluate_all(trainer.embeddings(), train, test, ks=(10, 20))
            stats.metrics = report.flat()
            recall = report.values["recall"][20]
            if recall > best[0]:
                best, stale = (recall, trainer.theta.copy()), 0
            else:
                stale += 1
        history.append(stats)
        log.debug("epoch %d loss %.6f", stats.epoch, stats.loss_total)
        if callback is not None:
            callback(stats, trainer)
        if cfg.patience and stale >= cfg.patience:
            break
    theta = best[1] if cfg.patience and np.isfinite(best[0]) else trainer.theta
    return theta, history


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss_total", "loss_bpr", "loss_scl_user", "loss_scl_item"])
        for s in history:
            w.writerow([s.epoch, repr(s.loss_total), repr(s.loss_bpr),
                        repr(s.loss_scl_user), repr(s.loss_scl_item)])


# -- checkpoints -------------------------------------------------------------

MAGIC = b"SGCLCKPT"
VERSION = 1
_HEADER = struct.Struct("<8sIQQI")  # magic, version, m, n, d -> 32 bytes


class CheckpointError(ValueError):
    pass


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def save_checkpoint(theta: np.ndarray, num_users: int, path) -> None:
    theta = np.asarray(theta)
    num_items = theta.shape[0] - num_users
    if num_items < 0:
        raise ValueError("num_users exceeds table rows")
    payload = np.ascontiguousarray(theta, dtype="<f4").tobytes()
    header = _HEADER.pack(MAGIC, VERSION, num_users, num_items, theta.shape[1])
    Path(path).write_bytes(header + payload + _checksum(payload))


def load_checkpoint(path):
    """Returns ``(theta, num_users)``; theta is float32 exactly as stored."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 8:
        raise CheckpointError("file too short")
    magic, version, m, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("bad magic")
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    payload = raw[_HEADER.size:-8]
    if len(payload) != (m + n) * d * 4:
        raise CheckpointError(f"payload holds {len(payload)} bytes, header implies {(m + n) * d * 4}")
    if _checksum(payload) != raw[-8:]:
        raise CheckpointError("checksum mismatch")
    theta = np.frombuffer(payload, dtype="<f4").reshape(m + n, d).astype(np.float32)
    return theta, int(m)
