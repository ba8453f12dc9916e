"""Prompt quality: character entropy, the Simple/Complex classifier and
the quality gate, plus the entropy-weighted generation loss.

The gate passes a text iff the classifier labels it high quality AND its
character-level entropy reaches the threshold. The weighted loss divides
token cross-entropy (natural log) by the prompt's character entropy (bits).
"""

import json
import math
import re
import zlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse
from scipy.special import expit

from promptmine.errors import (
    ConfigError,
    DegenerateCorpusError,
    EmptyTextError,
    GateRejectedError,
    ShapeError,
)
from promptmine.kernels import counts_entropy

DEFAULT_TAU = 3.5
FEATURE_DIM = 1 << 15
L2_INVERSE_STRENGTH = 1.0
MAX_ITERATIONS = 100
GRADIENT_TOL = 1e-6

_TOKEN_RE = re.compile(r"[a-z]+|[0-9]+")


@dataclass(frozen=True)
class EntropyReport:
    entropy_bits: float
    char_distribution: dict
    char_count: int


@dataclass(frozen=True)
class QualityVerdict:
    classifier_score: float
    classifier_label: int
    entropy_bits: float
    threshold: float
    passed: int

    def to_json_dict(self):
        return {
            "classifier_score": self.classifier_score,
            "classifier_label": self.classifier_label,
            "entropy_bits": self.entropy_bits,
            "threshold": self.threshold,
            "passed": self.passed,
        }


@dataclass
class ClassifierModel:
    weights: np.ndarray
    bias: float
    feature_dim: int
    hyperparams: dict = field(
        default_factory=lambda: {
            "l2_inverse_strength": L2_INVERSE_STRENGTH,
            "max_iterations": MAX_ITERATIONS,
        }
    )
    iterations: int = 0


@dataclass(frozen=True)
class LossReport:
    cross_entropy: float
    entropy_bits: float
    weighted_loss: float


def char_entropy(text):
    """Character-level Shannon entropy (bits) over the exact text."""
    if not text:
        raise EmptyTextError("cannot compute entropy of an empty string")
    counts = Counter(text)
    total = len(text)
    h = counts_entropy(list(counts.values()))
    distribution = {ch: c / total for ch, c in counts.items()}
    return EntropyReport(entropy_bits=h, char_distribution=distribution, char_count=total)


def hashed_features(text, dim=FEATURE_DIM):
    """Hashed binary-presence indices of token unigrams and bigrams.

    Digit runs collapse to a "#" token: the classifier judges template
    shape, and the raw numbers are label-independent noise that otherwise
    drowns out sparse wording cues.
    """
    tokens = ["#" if t.isdigit() else t for t in _TOKEN_RE.findall(text.lower())]
    idxs = set()
    for tok in tokens:
        idxs.add(zlib.crc32(tok.encode("utf-8")) % dim)
    for a, b in zip(tokens, tokens[1:]):
        idxs.add(zlib.crc32(f"{a} {b}".encode("utf-8")) % dim)
    return idxs


def _feature_matrix(texts, dim):
    indptr = [0]
    indices = []
    for text in texts:
        cols = sorted(hashed_features(text, dim))
        indices.extend(cols)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.float64)
    return scipy.sparse.csr_matrix(
        (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), dim),
    )


def train_classifier(corpus, seed=0, feature_dim=FEATURE_DIM):
    """L2-regularized logistic regression on hashed presence features.

    Full-batch quasi-Newton fit (L-BFGS-B, zero init) capped at 100
    iterations with a 1e-6 gradient tolerance; deterministic for a fixed
    corpus regardless of seed.
    """
    del seed  # the fit is deterministic; kept for interface stability
    texts = [t for t, _ in corpus]
    labels = np.asarray([int(l) for _, l in corpus], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        raise DegenerateCorpusError("corpus must contain both labels")
    x = _feature_matrix(texts, feature_dim)
    lam = 1.0 / L2_INVERSE_STRENGTH

    def objective(theta):
        w, b = theta[:-1], theta[-1]
        z = x @ w + b
        # log(1 + exp(-y*z)) with y in {-1, +1}
        signed = np.where(labels > 0.5, -z, z)
        loss = np.logaddexp(0.0, signed).sum() + 0.5 * lam * (w @ w)
        resid = expit(z) - labels
        grad_w = x.T @ resid + lam * w
        grad_b = resid.sum()
        return loss, np.concatenate([grad_w, [grad_b]])

    theta0 = np.zeros(feature_dim + 1, dtype=np.float64)
    result = scipy.optimize.minimize(
        objective,
        theta0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": MAX_ITERATIONS, "gtol": GRADIENT_TOL, "ftol": 0.0},
    )
    return ClassifierModel(
        weights=result.x[:-1].copy(),
        bias=float(result.x[-1]),
        feature_dim=feature_dim,
        iterations=int(result.nit),
    )


def classify(model, text):
    """(score, label) for one text; label = 1 iff score >= 0.5."""
    z = model.bias
    for idx in hashed_features(text, model.feature_dim):
        z += model.weights[idx]
    if z >= 0:
        score = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        score = ez / (1.0 + ez)
    return score, int(score >= 0.5)


def gate(model, text, threshold=DEFAULT_TAU):
    """Quality gate: classifier verdict AND entropy-at-least-threshold."""
    if threshold <= 0:
        raise ConfigError("entropy threshold must be positive")
    score, label = classify(model, text)
    entropy = char_entropy(text).entropy_bits
    passed = label * (1 if entropy >= threshold else 0)
    return QualityVerdict(
        classifier_score=score,
        classifier_label=label,
        entropy_bits=entropy,
        threshold=threshold,
        passed=passed,
    )


def entropy_weighted_loss(label_tokens, predicted_probs, generated_text, tau=DEFAULT_TAU):
    """Token cross-entropy (natural log) divided by prompt entropy (bits).

    Raises GateRejectedError when the generated text's entropy falls below
    tau, mirroring the quality gate applied upstream of training.
    """
    if len(label_tokens) != len(predicted_probs):
        raise ShapeError(
            f"{len(label_tokens)} label tokens vs {len(predicted_probs)} probability rows"
        )
    if len(label_tokens) == 0:
        raise ShapeError("need at least one label token")
    entropy = char_entropy(generated_text).entropy_bits
    if entropy < tau:
        raise GateRejectedError(
            f"entropy {entropy:.4f} below threshold {tau}"
        )
    cross_entropy = 0.0
    for j, (label, row) in enumerate(zip(label_tokens, predicted_probs)):
        total = math.fsum(row)
        if abs(total - 1.0) > 1e-6:
            raise ShapeError(f"probability row {j} sums to {total}, not 1")
        if not 0 <= label < len(row):
            raise ShapeError(f"label token {label} out of range at position {j}")
        cross_entropy -= math.log(row[label])
    return LossReport(
        cross_entropy=cross_entropy,
        entropy_bits=entropy,
        weighted_loss=cross_entropy / entropy,
    )


def save_model(model, path):
    payload = {
        "format_version": 1,
        "feature_dim": model.feature_dim,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "hyperparams": model.hyperparams,
        "iterations": model.iterations,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != 1:
        raise ConfigError(f"unsupported model format in {path}")
    return ClassifierModel(
        weights=np.asarray(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        feature_dim=int(payload["feature_dim"]),
        hyperparams=payload["hyperparams"],
        iterations=int(payload.get("iterations", 0)),
    )
