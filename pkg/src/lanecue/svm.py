"""Soft-margin C-SVM trained by sequential minimal optimization.

The trainer solves the standard C-SVC dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

by repeatedly optimizing the maximal KKT-violating pair analytically until
the violation gap drops below tol. A staged tree of three binary models
turns the four behavior classes into a cascade of binary decisions:
Unknown/Known, then Keep/Change, then Left/Right.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import BehaviorLabel, FeatureVector

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
FULL_CACHE_LIMIT = 4096
_MAX_PASSES_FACTOR = 10000


@dataclass(frozen=True)
class Kernel:
    """Linear or Gaussian RBF kernel."""

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if self.gamma is not None:
                raise ValueError("linear kernel takes no gamma")
        elif self.kind == "rbf":
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("rbf kernel requires gamma > 0")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def linear(cls) -> "Kernel":
        return cls("linear")

    @classmethod
    def rbf(cls, gamma: float) -> "Kernel":
        return cls("rbf", float(gamma))

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise kernel values between rows of a and rows of b."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if self.kind == "linear":
            return a @ b.T
        sq = (
            (a * a).sum(axis=1)[:, None]
            + (b * b).sum(axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))


class _KernelCache:
    """Row cache for the training kernel matrix.

    Small problems precompute the full matrix; larger ones keep an LRU of
    recently used rows.
    """

    def __init__(self, kernel: Kernel, x: np.ndarray, limit: int = FULL_CACHE_LIMIT):
        self.kernel = kernel
        self.x = x
        n = x.shape[0]
        if n <= limit:
            self.full = kernel.matrix(x, x)
            self.rows = None
        else:
            self.full = None
            self.rows: OrderedDict[int, np.ndarray] = OrderedDict()
            self.capacity = max(2, (limit * limit) // n)

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        cached = self.rows.get(i)
        if cached is not None:
            self.rows.move_to_end(i)
            return cached
        row = self.kernel.matrix(self.x[i : i + 1], self.x)[0]
        self.rows[i] = row
        if len(self.rows) > self.capacity:
            self.rows.popitem(last=False)
        return row


@dataclass
class SvmModel:
    """A trained binary classifier: decision > 0 means class_pair[0]."""

    kernel: Kernel
    support_vectors: np.ndarray  # (n_sv, d)
    alphas: np.ndarray  # signed coefficients y_i * a_i
    bias: float
    class_pair: tuple[str, str]  # (positive, negative)
    c: float

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]


def train(
    x,
    y,
    kernel: Kernel,
    c: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    class_pair: tuple[str, str] = ("+1", "-1"),
) -> SvmModel:
    """Train a binary C-SVM on samples x with labels y in {+1, -1}."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be 2-D (samples x features)")
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) != len(x):
        raise ValueError("x and y length mismatch")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("labels must be +1 or -1")
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("training data must contain both classes")
    if c <= 0:
        raise ValueError(f"C must be positive, got {c}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    n = len(y)
    cache = _KernelCache(kernel, x)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - sum(a)

    max_passes = _MAX_PASSES_FACTOR * max(n, 100)
    for _ in range(max_passes):
        crit = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
        crit_up = np.where(up, crit, -np.inf)
        crit_low = np.where(low, crit, np.inf)
        i = int(np.argmax(crit_up))
        j = int(np.argmin(crit_low))
        if crit_up[i] - crit_low[j] <= tol:
            break

        ki = cache.row(i)
        kj = cache.row(j)
        eta = ki[i] + kj[j] - 2.0 * ki[j]
        s = y[i] * y[j]
        if s < 0:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(c, c + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - c)
            hi = min(c, alpha[i] + alpha[j])

        e_i = y[i] * grad[i]  # g_i - y_i
        e_j = y[j] * grad[j]
        if eta > 1e-15:
            aj_new = alpha[j] + y[j] * (e_i - e_j) / eta
            aj_new = min(max(aj_new, lo), hi)
        else:
            # flat or concave along the pair: test both endpoints
            aj_new = _best_endpoint(alpha, y, grad, ki, kj, i, j, s, lo, hi)
        if aj_new == alpha[j]:
            break  # step below float resolution; treat as converged
        delta_j = aj_new - alpha[j]
        delta_i = -s * delta_j
        alpha[i] += delta_i
        alpha[j] = aj_new
        # snap round-off drift onto the box so pairs never become
        # numerically immovable while still violating
        snap = 1e-12 * max(1.0, c)
        for t in (i, j):
            if alpha[t] < snap:
                alpha[t] = 0.0
            elif alpha[t] > c - snap:
                alpha[t] = c
        grad += (y * y[i] * delta_i) * ki + (y * y[j] * delta_j) * kj
    else:
        raise RuntimeError("SMO did not converge within the iteration budget")

    sv = alpha > 0.0
    g_wo_bias = y * (grad + 1.0)  # g_t = sum_s a_s y_s K(x_s, x_t)
    free = sv & (alpha < c)
    if free.any():
        bias = float((y[free] - g_wo_bias[free]).mean())
    else:
        crit = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < c)) | ((y > 0) & (alpha > 0))
        hi = crit[up].max() if up.any() else 0.0
        lo = crit[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)

    return SvmModel(
        kernel=kernel,
        support_vectors=x[sv].copy(),
        alphas=(alpha * y)[sv].copy(),
        bias=bias,
        class_pair=class_pair,
        c=float(c),
    )


def _best_endpoint(alpha, y, grad, ki, kj, i, j, s, lo, hi) -> float:
    """Pick the feasible endpoint with the larger dual objective gain."""
    best_val = -np.inf
    best = lo
    for cand in (lo, hi):
        dj = cand - alpha[j]
        di = -s * dj
        # first-order terms use dW/da_t = 1 - y_t g_t = -y_t grad_t * y_t^2
        gain = (
            -grad[i] * di
            - grad[j] * dj
            - 0.5 * (ki[i] * di * di + kj[j] * dj * dj + 2.0 * ki[j] * di * dj * y[i] * y[j])
        )
        if gain > best_val:
            best_val = gain
            best = cand
    return best


def decision(model: SvmModel, x) -> float | np.ndarray:
    """Decision value f(x) = sum_i (y_i a_i) K(sv_i, x) + b."""
    q = np.asarray(x, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    if q.shape[1] != model.dim:
        raise ValueError(f"input has {q.shape[1]} features, model expects {model.dim}")
    values = model.kernel.matrix(q, model.support_vectors) @ model.alphas + model.bias
    return float(values[0]) if single else values


def predict(model: SvmModel, x):
    """Class tag(s) by decision sign; ties go to the negative class."""
    values = decision(model, x)
    pos, neg = model.class_pair
    if np.isscalar(values):
        return pos if values > 0 else neg
    return np.where(values > 0, pos, neg)


def dual_objective(model_alpha, y, kmat) -> float:
    """Value of the C-SVC dual objective for raw multipliers."""
    ay = model_alpha * y
    return float(model_alpha.sum() - 0.5 * ay @ kmat @ ay)


@dataclass
class CascadeModel:
    """Fig-tree of three binary stages realizing the four-class decision."""

    stage0: SvmModel  # Known (+) vs Unknown (-)
    stage1: SvmModel  # Change (+) vs Keep (-)
    stage2: SvmModel  # ChangeRight (+) vs ChangeLeft (-)
    feature_kind: str | None = None
    pca_ref: str | None = None

    @property
    def dim(self) -> int:
        return self.stage0.dim


STAGE_PAIRS = {
    "stage0": ("Known", "Unknown"),
    "stage1": ("Change", "Keep"),
    "stage2": ("ChangeRight", "ChangeLeft"),
}


def train_cascade(
    dataset: list[FeatureVector],
    kernel: Kernel,
    c: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    feature_kind: str | None = None,
    pca_ref: str | None = None,
) -> CascadeModel:
    """Train the three stage models on consistent labeled feature vectors."""
    if not dataset:
        raise ValueError("dataset is empty")
    labels = []
    for fv in dataset:
        if fv.label is None:
            raise ValueError("every training vector needs a behavior label")
        labels.append(fv.label)
    x = np.stack([fv.values for fv in dataset])
    labels = np.array([l.code for l in labels])

    def stage(name, mask, positive) -> SvmModel:
        y = np.where(positive[labels[mask]], 1.0, -1.0)
        if not ((y > 0).any() and (y < 0).any()):
            pos, neg = STAGE_PAIRS[name]
            raise ValueError(f"{name} needs both {pos} and {neg} samples")
        return train(x[mask], y, kernel, c, tol, class_pair=STAGE_PAIRS[name])

    known = np.ones(4, dtype=bool)
    known[BehaviorLabel.UNKNOWN.code] = False
    change = np.zeros(4, dtype=bool)
    change[BehaviorLabel.CHANGE_LEFT.code] = True
    change[BehaviorLabel.CHANGE_RIGHT.code] = True
    right = np.zeros(4, dtype=bool)
    right[BehaviorLabel.CHANGE_RIGHT.code] = True

    all_mask = np.ones(len(labels), dtype=bool)
    known_mask = known[labels]
    change_mask = change[labels]
    stage0 = stage("stage0", all_mask, known)
    stage1 = stage("stage1", known_mask, change)
    stage2 = stage("stage2", change_mask, right)
    return CascadeModel(stage0, stage1, stage2, feature_kind, pca_ref)


def classify_cascade(model: CascadeModel, x) -> BehaviorLabel:
    """Walk the decision tree; ties resolve to each stage's negative class."""
    if decision(model.stage0, x) <= 0:
        return BehaviorLabel.UNKNOWN
    if decision(model.stage1, x) <= 0:
        return BehaviorLabel.KEEP
    if decision(model.stage2, x) <= 0:
        return BehaviorLabel.CHANGE_LEFT
    return BehaviorLabel.CHANGE_RIGHT


def classify_cascade_batch(model: CascadeModel, x) -> list[BehaviorLabel]:
    """Vectorized cascade classification for a samples-by-features matrix."""
    q = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = np.full(len(q), BehaviorLabel.UNKNOWN.code)
    known = np.asarray(decision(model.stage0, q)) > 0
    if known.any():
        keep_or_change = np.asarray(decision(model.stage1, q[known]))
        known_idx = np.nonzero(known)[0]
        out[known_idx[keep_or_change <= 0]] = BehaviorLabel.KEEP.code
        change_idx = known_idx[keep_or_change > 0]
        if change_idx.size:
            direction = np.asarray(decision(model.stage2, q[change_idx]))
            out[change_idx[direction <= 0]] = BehaviorLabel.CHANGE_LEFT.code
            out[change_idx[direction > 0]] = BehaviorLabel.CHANGE_RIGHT.code
    return [BehaviorLabel.from_code(int(code)) for code in out]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_model(model: SvmModel, path) -> None:
    """Text header then one line per support vector in sparse index:value form."""
    lines = [
        f"kernel {model.kernel.kind}",
        f"gamma {_fmt(model.kernel.gamma) if model.kernel.gamma is not None else 'none'}",
        f"C {_fmt(model.c)}",
        f"bias {_fmt(model.bias)}",
        f"class_pair {model.class_pair[0]} {model.class_pair[1]}",
        f"n_sv {model.n_support}",
        f"dim {model.dim}",
    ]
    for coef, vec in zip(model.alphas, model.support_vectors):
        entries = " ".join(
            f"{idx + 1}:{_fmt(val)}" for idx, val in enumerate(vec) if val != 0.0
        )
        lines.append(f"{_fmt(coef)} {entries}".rstrip())
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path) -> SvmModel:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if len(lines) < 7:
        raise ValueError(f"truncated SVM model file {path}")
    header = {}
    for line in lines[:7]:
        key, _, rest = line.partition(" ")
        header[key] = rest
    kind = header["kernel"]
    gamma = None if header["gamma"] == "none" else float(header["gamma"])
    kernel = Kernel(kind, gamma)
    n_sv = int(header["n_sv"])
    dim = int(header["dim"])
    pair = tuple(header["class_pair"].split())
    if len(pair) != 2:
        raise ValueError(f"malformed class_pair line in {path}")
    alphas = np.zeros(n_sv)
    vectors = np.zeros((n_sv, dim))
    for row, line in enumerate(lines[7 : 7 + n_sv]):
        tokens = line.split()
        alphas[row] = float(tokens[0])
        for tok in tokens[1:]:
            idx_s, _, val_s = tok.partition(":")
            idx = int(idx_s)
            if idx < 1 or idx > dim:
                raise ValueError(f"support vector index {idx} outside 1..{dim} in {path}")
            vectors[row, idx - 1] = float(val_s)
    return SvmModel(
        kernel=kernel,
        support_vectors=vectors,
        alphas=alphas,
        bias=float(header["bias"]),
        class_pair=(pair[0], pair[1]),
        c=float(header["C"]),
    )
