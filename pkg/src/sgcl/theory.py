"""Executable checks of the symmetric-loss noise-tolerance results.

Noisy risks are computed as exact expectations over the label-flip
distribution, so every identity here is checked without sampling error.
Binary labels are encoded as -1 / +1.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from sgcl.losses import PairScores, infonce_loss, pairwise_exponential_loss


class ExponentialLoss:
    """``y * e^s``: label sum is identically 0."""

    labels = (1, -1)
    name = "exponential"

    def __call__(self, outputs, labels):
        return pairwise_exponential_loss(np.asarray(outputs, dtype=np.float64), np.asarray(labels))

    def neutral_output(self):
        return 0.0


class MAELoss:
    """``||p - onehot(y)||_1`` on probability vectors; label sum is ``2(k - 1)``."""

    name = "mae"

    def __init__(self, k: int):
        self.k = k
        self.labels = tuple(range(k))

    def __call__(self, outputs, labels):
        p = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        y = np.atleast_1d(labels)
        rows = np.arange(len(p))
        py = p[rows, y]
        return np.abs(p).sum(axis=1) - np.abs(py) + np.abs(1.0 - py)

    def neutral_output(self):
        return np.full((1, self.k), 1.0 / self.k)


class CrossEntropyLoss:
    """``-log p_y``; not symmetric, used as the negative control."""

    name = "cross_entropy"

    def __init__(self, k: int = 2):
        self.k = k
        self.labels = tuple(range(k))

    def __call__(self, outputs, labels):
        p = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
        y = np.atleast_1d(labels)
        return -np.log(p[np.arange(len(p)), y])

    def neutral_output(self):
        return np.full((1, self.k), 1.0 / self.k)


def _label_matrix(loss, outputs) -> np.ndarray:
    """``(N, k)`` matrix: loss of each output under each label in ``loss.labels``."""
    outputs = np.asarray(outputs, dtype=np.float64)
    n = len(outputs)
    return np.stack([loss(outputs, np.full(n, y)) for y in loss.labels], axis=1)


@dataclass(frozen=True)
class SymmetryCheck:
    deviation: float  # max - min of the label sums over probes
    constant: float  # label sum at the first probe


def symmetry_sum_check(loss, probes) -> SymmetryCheck:
    sums = _label_matrix(loss, probes).sum(axis=1)
    return SymmetryCheck(float(sums.max() - sums.min()), float(sums[0]))


def label_sum_constant(loss) -> float:
    return float(_label_matrix(loss, np.atleast_1d(loss.neutral_output())).sum())


@dataclass(frozen=True)
class NoiseModel:
    k: int
    eta: float

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two classes")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")

    @property
    def per_class(self) -> float:
        return self.eta / (self.k - 1)

    @property
    def alpha(self) -> float:
        return 1.0 - self.eta * self.k / (self.k - 1)

    @property
    def tolerable(self) -> bool:
        return self.eta < (self.k - 1) / self.k


@dataclass(frozen=True)
class RiskReport:
    clean: float
    noisy: float
    predicted: float
    constant: float  # C = c * eta / (k - 1)
    alpha: float
    delta: float  # clean risk of the best candidate

    @property
    def gap(self) -> float:
        return abs(self.noisy - self.predicted)


def _label_index(loss, labels) -> np.ndarray:
    lookup = {y: j for j, y in enumerate(loss.labels)}
    return np.array([lookup[int(y)] for y in labels])


def exact_noisy_risk(loss, candidate_outputs, labels, noise: NoiseModel) -> list[RiskReport]:
    """Clean and noisy risk of every candidate, plus the symmetric-loss prediction
    ``c * eta / (k - 1) + (1 - eta * k / (k - 1)) * R``."""
    if len(loss.labels) != noise.k:
        raise ValueError("noise model class count differs from the loss")
    idx = _label_index(loss, labels)
    rows = np.arange(len(idx))
    c = label_sum_constant(loss)
    big_c = c * noise.per_class
    cleans, noisies = [], []
    for outputs in candidate_outputs:
        mat = _label_matrix(loss, outputs)
        true = mat[rows, idx]
        others = mat.sum(axis=1) - true
        cleans.append(float(np.mean(true)))
        noisies.append(float(np.mean((1.0 - noise.eta) * true + noise.per_class * others)))
    delta = min(cleans)
    return [
        RiskReport(r, rn, big_c + noise.alpha * r, big_c, noise.alpha, delta)
        for r, rn in zip(cleans, noisies)
    ]


def monte_carlo_noisy_risk(loss, outputs, labels, noise: NoiseModel, samples: int, seed: int) -> float:
    """Sampled cross-check of :func:`exact_noisy_risk` for a single candidate."""
    rng = np.random.default_rng(seed)
    idx = _label_index(loss, labels)
    mat = _label_matrix(loss, outputs)
    n, k = mat.shape
    total = 0.0
    for _ in range(samples):
        flip = rng.random(n) < noise.eta
        shift = rng.integers(1, k, size=n)
        noisy = np.where(flip, (idx + shift) % k, idx)
        total += mat[np.arange(n), noisy].mean()
    return total / samples


@dataclass(frozen=True)
class InvarianceVerdict:
    eta: float
    clean_argmin: int
    noisy_argmin: int

    @property
    def holds(self) -> bool:
        return self.clean_argmin == self.noisy_argmin


def minimizer_invariance(loss, candidate_outputs, labels, etas) -> list[InvarianceVerdict]:
    verdicts = []
    for eta in etas:
        reports = exact_noisy_risk(loss, candidate_outputs, labels, NoiseModel(len(loss.labels), eta))
        clean = np.array([r.clean for r in reports])
        noisy = np.array([r.noisy for r in reports])
        verdicts.append(InvarianceVerdict(eta, int(np.argmin(clean)), int(np.argmin(noisy))))
    return verdicts


# -- gradient symmetry ---------------------------------------------------------


def random_probes(count: int, negatives: int, tau: float = 0.2, seed: int = 0):
    """``(scores, contexts)``: a score in ``[-1/tau, 1/tau]`` and ``negatives`` context scores each."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / tau
    return rng.uniform(-bound, bound, count), rng.uniform(-bound, bound, (count, negatives))


def infonce_label_gradients(scores, contexts):
    """Derivative of InfoNCE w.r.t. one pair score ``s`` under each label.

    As the positive pair, ``s`` competes with ``contexts``; as a negative pair,
    ``s`` joins ``contexts[1:]`` against the positive ``contexts[0]``.  Returns
    ``(grad_as_positive, grad_as_negative)``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    contexts = np.asarray(contexts, dtype=np.float64)
    b = len(scores)
    _, g_pos, _ = infonce_loss(PairScores(scores, contexts))
    swapped = np.concatenate([scores[:, None], contexts[:, 1:]], axis=1)
    _, _, g_neg = infonce_loss(PairScores(contexts[:, 0].copy(), swapped))
    return g_pos * b, g_neg[:, 0] * b


def infonce_gradient_asymmetry(scores, contexts) -> float:
    """Range over probes of the label-summed InfoNCE gradient; 0 would mean symmetric."""
    gp, gn = infonce_label_gradients(scores, contexts)
    total = gp + gn
    return float(total.max() - total.min())


def exponential_gradient_asymmetry(scores) -> float:
    """Same measure for ``y * e^s``: d/ds e^s + d/ds (-e^s)."""
    s = np.asarray(scores, dtype=np.float64)
    total = np.exp(s) + (-np.exp(s))
    return float(total.max() - total.min())


def infonce_total_gradient_sum(scores: PairScores) -> np.ndarray:
    """Per-anchor ``dL/ds+ + sum_j dL/ds-_j``; softmax gradients make this identically 0."""
    _, gp, gm = infonce_loss(scores)
    return (gp + gm.sum(axis=1)) * scores.batch


# -- synthetic instances -------------------------------------------------------


def binary_instance(points: int = 50, candidates: int = 20, dim: int = 3, seed: int = 0):
    """Random ±1-labelled points and the outputs of random linear scorers on them.

    Returns ``(candidate_outputs, labels)`` with outputs of shape ``(candidates, points)``.
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(points, dim))
    labels = np.where(rng.random(points) < 0.5, -1, 1)
    w = rng.normal(size=(candidates, dim))
    b = rng.normal(size=(candidates, 1))
    return w @ x.T + b, labels


def multiclass_instance(points: int = 50, candidates: int = 20, k: int = 3, dim: int = 3, seed: int = 0):
    """Softmax outputs of random linear scorers; outputs shape ``(candidates, points, k)``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(points, dim))
    labels = rng.integers(0, k, points)
    w = rng.normal(size=(candidates, dim, k))
    logits = np.einsum("pd,cdk->cpk", x, w)
    logits -= logits.max(axis=2, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=2, keepdims=True)
    return probs, labels


def binary_probabilities(outputs) -> np.ndarray:
    """Map real scores to ``(p(+1), p(-1))`` columns, matching ExponentialLoss label order."""
    p = 1.0 / (1.0 + np.exp(-np.asarray(outputs)))
    return np.stack([p, 1.0 - p], axis=-1)


# -- report --------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


def run_theory_checks(seed: int = 0) -> list[CheckResult]:
    results = []
    rng = np.random.default_rng(seed)

    s = rng.uniform(-5, 5, 10_000)
    worst = float(np.max(np.abs(pairwise_exponential_loss(s, 1) + pairwise_exponential_loss(s, -1))))
    results.append(CheckResult("exponential_label_sum_zero", worst < 1e-12, worst, 1e-12))

    for k in (3, 5):
        probes = multiclass_instance(candidates=1, k=k, points=200, seed=seed + k)[0][0]
        chk = symmetry_sum_check(MAELoss(k), probes)
        ok = chk.deviation < 1e-12 and abs(chk.constant - 2 * (k - 1)) < 1e-12
        results.append(CheckResult(f"mae_label_sum_k{k}", ok, chk.deviation, 1e-12,
                                   f"constant={chk.constant!r}"))

    ce = symmetry_sum_check(CrossEntropyLoss(2), binary_probabilities(rng.normal(size=100) * 3))
    results.append(CheckResult("cross_entropy_not_symmetric", ce.deviation > 0.1, ce.deviation, 0.1))

    outputs, labels = binary_instance(seed=seed)
    etas = (0.1, 0.2, 0.3, 0.4)
    worst = 0.0
    for eta in etas:
        for r in exact_noisy_risk(ExponentialLoss(), outputs, labels, NoiseModel(2, eta)):
            worst = max(worst, abs(r.noisy - (1 - 2 * eta) * r.clean))
    results.append(CheckResult("binary_noisy_risk_identity", worst < 1e-12, worst, 1e-12))
    verdicts = minimizer_invariance(ExponentialLoss(), outputs, labels, etas)
    results.append(CheckResult("binary_minimizer_invariance", all(v.holds for v in verdicts),
                               float(sum(not v.holds for v in verdicts)), 0.0))

    for k in (3, 5):
        probs, ylab = multiclass_instance(k=k, seed=seed + 10 + k)
        gap = max(r.gap for eta in (0.1, 0.3, 0.5)
                  for r in exact_noisy_risk(MAELoss(k), probs, ylab, NoiseModel(k, eta)))
        results.append(CheckResult(f"mae_noisy_risk_identity_k{k}", gap < 1e-12, gap, 1e-12))

    probs = binary_probabilities(outputs)
    ce_loss = CrossEntropyLoss(2)
    # ExponentialLoss labels (+1, -1) map to probability columns 0 / 1
    ce_labels = np.where(labels == 1, 0, 1)
    gap = max(r.gap for r in exact_noisy_risk(ce_loss, probs, ce_labels, NoiseModel(2, 0.3)))
    results.append(CheckResult("cross_entropy_prediction_gap", gap > 1e-3, gap, 1e-3))

    scores, contexts = random_probes(100, 8, seed=seed)
    asym = infonce_gradient_asymmetry(scores, contexts)
    results.append(CheckResult("infonce_gradient_asymmetric", asym > 1e-3, asym, 1e-3))
    sym = exponential_gradient_asymmetry(scores)
    results.append(CheckResult("exponential_gradient_symmetric", sym < 1e-12, sym, 1e-12))
    return results


def report_json(results) -> str:
    return json.dumps({"passed": all(r.passed for r in results),
                       "checks": [asdict(r) for r in results]}, indent=2)
