"""Training objectives with closed-form gradients.

Every loss is averaged over its batch, and every gradient returned is the
gradient of that mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from sgcl.encoder import backward_propagate, propagate

OBJECTIVES = ("scl", "infonce", "none")
SCL_EPS = 1e-12


class ZeroVectorWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LossConfig:
    tau: float = 0.2
    lam: float = 0.01
    p: float = 0.01
    beta: float = 0.01
    alpha: float = 1e-4
    objective: str = "scl"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not 0 < self.lam <= 1:
            raise ValueError("lam must lie in (0, 1]")
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")
        if self.beta < 0 or self.alpha < 0:
            raise ValueError("beta and alpha must be >= 0")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")


@dataclass(frozen=True)
class PairScores:
    """Positive score per anchor and its ``K`` negative scores, already divided by tau."""

    s_plus: np.ndarray  # (B,)
    s_minus: np.ndarray  # (B, K)

    @property
    def batch(self) -> int:
        return len(self.s_plus)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        warnings.warn("cosine of a zero vector taken as 0", ZeroVectorWarning, stacklevel=2)
        return 0.0
    return float(a @ b / (na * nb))


def row_cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine; rows where either side is zero give 0."""
    num = np.einsum("ij,ij->i", a, b)
    den = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def bpr_loss_and_grad(e, num_users, users, pos, neg, alpha=0.0, theta=None):
    """Mean of ``-log sigmoid(y_ui - y_uj)`` plus ``alpha * ||theta||^2``.

    Returns ``(loss, grad_e, grad_theta)``; ``grad_e`` is w.r.t. the scoring
    table ``e`` and ``grad_theta`` carries only the L2 term (zeros when
    ``theta`` is None).
    """
    users = np.asarray(users)
    pi = num_users + np.asarray(pos)
    ni = num_users + np.asarray(neg)
    eu, ep, en = e[users], e[pi], e[ni]
    diff = np.einsum("ij,ij->i", eu, ep - en)
    b = len(users)
    loss = float(np.mean(_softplus(-diff)))
    coef = (-_sigmoid(-diff) / b)[:, None]
    grad_e = np.zeros_like(e, dtype=np.float64)
    np.add.at(grad_e, users, coef * (ep - en))
    np.add.at(grad_e, pi, coef * eu)
    np.add.at(grad_e, ni, -coef * eu)
    if theta is None:
        return loss, grad_e, np.zeros_like(e, dtype=np.float64)
    loss += alpha * float(np.sum(theta * theta))
    return loss, grad_e, 2.0 * alpha * theta


def infonce_loss(scores: PairScores):
    """``-log(e^{s+} / (e^{s+} + sum_j e^{s-_j}))`` averaged over anchors.

    Returns ``(loss, grad_s_plus, grad_s_minus)``.
    """
    allx = np.concatenate([scores.s_plus[:, None], scores.s_minus], axis=1)
    top = allx.max(axis=1, keepdims=True)
    w = np.exp(allx - top)
    z = w.sum(axis=1, keepdims=True)
    lse = (top + np.log(z))[:, 0]
    b = scores.batch
    loss = float(np.mean(lse - scores.s_plus))
    soft = w / z
    return loss, (soft[:, 0] - 1.0) / b, soft[:, 1:] / b


def scl_loss(scores: PairScores, lam: float, p: float, eps: float = SCL_EPS):
    """Symmetric contrastive loss ``-e^{p s+}/p + lam * (-e^{s+} + sum e^{s-})^p / p``.

    For ``p < 1`` the inner base is clamped at ``eps`` (the fractional power
    is undefined for a negative base) and the clamped term contributes no
    gradient.  At ``p == 1`` the expression is linear in the base and is
    evaluated without clamping.
    """
    sp, sm = scores.s_plus, scores.s_minus
    ep = np.exp(sp)
    em = np.exp(sm)
    base = -ep + em.sum(axis=1)
    b = scores.batch
    if p == 1.0:
        per = -ep + lam * base
        g_plus = -(1.0 + lam) * ep
        g_minus = lam * em
    else:
        active = base > eps
        cb = np.where(active, base, eps)
        per = -np.exp(p * sp) / p + lam * cb**p / p
        w = np.where(active, lam * cb ** (p - 1.0), 0.0)
        g_plus = -np.exp(p * sp) - w * ep
        g_minus = w[:, None] * em
    return float(np.mean(per)), g_plus / b, g_minus / b


def scl_p1_closed_form(scores: PairScores, lam: float) -> float:
    """``-(1 + lam) e^{s+} + lam * sum e^{s-}``, the p = 1 reduction, batch mean."""
    return float(np.mean(-(1.0 + lam) * np.exp(scores.s_plus)
                         + lam * np.exp(scores.s_minus).sum(axis=1)))


def pairwise_exponential_loss(s, y):
    """``y * e^s`` with ``y`` in {-1, +1}."""
    return y * np.exp(s)


def _normalize_rows(x):
    norm = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norm > 0, norm, 1.0)
    return x / safe, safe


def _offdiag(mat):
    b = mat.shape[0]
    return mat[~np.eye(b, dtype=bool)].reshape(b, b - 1)


def scl_pair_scores(z_prime, z_dprime, anchors, tau) -> PairScores:
    """In-batch pair scores: positives match the same node across views,
    negatives are the other anchors' second-view rows (``K = B - 1``)."""
    anchors = np.asarray(anchors)
    if len(anchors) < 2:
        raise ValueError("contrastive batch needs at least two anchors")
    a, _ = _normalize_rows(z_prime[anchors])
    b, _ = _normalize_rows(z_dprime[anchors])
    sim = a @ b.T / tau
    return PairScores(np.diag(sim).copy(), _offdiag(sim))


def contrastive_loss_and_grad(z1, z2, anchors, cfg: LossConfig):
    """Loss of ``cfg.objective`` on one anchor class plus gradients w.r.t. the full view tables."""
    g1 = np.zeros_like(z1)
    g2 = np.zeros_like(z2)
    anchors = np.asarray(anchors)
    if cfg.objective == "none" or len(anchors) < 2:
        return 0.0, g1, g2
    a, na = _normalize_rows(z1[anchors])
    b, nb = _normalize_rows(z2[anchors])
    sim = a @ b.T / cfg.tau
    scores = PairScores(np.diag(sim).copy(), _offdiag(sim))
    if cfg.objective == "scl":
        loss, gp, gm = scl_loss(scores, cfg.lam, cfg.p)
    else:
        loss, gp, gm = infonce_loss(scores)
    bsz = len(anchors)
    gsim = np.zeros((bsz, bsz))
    gsim[~np.eye(bsz, dtype=bool)] = gm.ravel()
    gsim[np.diag_indices(bsz)] = gp
    gsim /= cfg.tau
    ga = gsim @ b
    gb = gsim.T @ a
    # back through x / ||x||
    ga = (ga - a * np.einsum("ij,ij->i", a, ga)[:, None]) / na
    gb = (gb - b * np.einsum("ij,ij->i", b, gb)[:, None]) / nb
    g1[anchors] = ga
    g2[anchors] = gb
    return loss, g1, g2


@dataclass
class ObjectiveTerms:
    total: float
    bpr: float
    cl_user: float
    cl_item: float


def combined_objective(theta, num_users, adj, view1, view2, layers, triples, cfg: LossConfig):
    """BPR on the original graph plus ``beta`` times user and item contrastive terms.

    ``adj``/``view1``/``view2`` are adjacencies (or per-layer lists) for the
    original graph and the two perturbed views; all three branches share
    ``theta``.  Contrastive anchors are the distinct users and positive items
    of the BPR batch.  Returns ``(ObjectiveTerms, grad_theta)``.
    """
    users, pos, neg = (np.asarray(t) for t in triples)
    e = propagate(adj, theta, layers)
    bpr, grad_e, grad_theta = bpr_loss_and_grad(e, num_users, users, pos, neg, cfg.alpha, theta)
    grad = grad_theta + backward_propagate(adj, grad_e, layers)
    cl_user = cl_item = 0.0
    if cfg.beta > 0 and cfg.objective != "none":
        z1 = propagate(view1, theta, layers)
        z2 = propagate(view2, theta, layers)
        cl_user, gu1, gu2 = contrastive_loss_and_grad(z1, z2, np.unique(users), cfg)
        cl_item, gi1, gi2 = contrastive_loss_and_grad(z1, z2, num_users + np.unique(pos), cfg)
        grad += cfg.beta * (backward_propagate(view1, gu1 + gi1, layers)
                            + backward_propagate(view2, gu2 + gi2, layers))
    total = bpr + cfg.beta * (cl_user + cl_item)
    return ObjectiveTerms(total, bpr, cl_user, cl_item), grad
