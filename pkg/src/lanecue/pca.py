"""PCA dimension reduction with the Gram-matrix shortcut for wide data.

When the feature dimension d exceeds the sample count N, the eigenvectors
of the d x d covariance are recovered from the N x N Gram matrix of the
centered samples: each Gram eigenvector v' maps back through the data as
v = X v' (normalized to unit length). Eigenvalues follow the covariance
convention Sigma = (1/N) X X^T. The number of retained components M is the
smallest prefix of the descending eigenvalue sequence whose sum reaches the
requested fraction r of the total energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_ENERGY_RATIO = 0.98

# eigenvalues below this fraction of the largest one are treated as zero;
# their Gram eigenvectors are numerically meaningless after the map-back
_RELATIVE_FLOOR = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Training mean, eigenvalue spectrum and orthonormal projection matrix."""

    mean: np.ndarray  # (d,)
    eigenvalues: np.ndarray  # (d',) descending, d' = min(d, N)
    projection: np.ndarray  # (d, M), orthonormal columns
    energy_ratio: float
    total_energy: float

    @property
    def input_dim(self) -> int:
        return self.mean.shape[0]

    @property
    def output_dim(self) -> int:
        return self.projection.shape[1]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def select_components(eigenvalues, energy_ratio: float) -> int:
    """Smallest M whose eigenvalue prefix sum reaches energy_ratio * total."""
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.ndim != 1 or ev.size == 0:
        raise ValueError("eigenvalues must be a non-empty 1-D sequence")
    if np.any(ev < 0):
        raise ValueError("eigenvalues must be non-negative")
    if np.any(np.diff(ev) > 0):
        raise ValueError("eigenvalues must be sorted in descending order")
    if not 0.0 < energy_ratio <= 1.0:
        raise ValueError(f"energy ratio must lie in (0, 1], got {energy_ratio}")
    prefix = np.cumsum(ev)
    total = prefix[-1]
    if total <= 0.0:
        raise ValueError("eigenvalues are all zero")
    return int(np.searchsorted(prefix, energy_ratio * total, side="left")) + 1


def fit(data, energy_ratio: float = DEFAULT_ENERGY_RATIO, method: str = "auto") -> PcaModel:
    """Fit a PCA model on rows of `data` (N samples x d features).

    method: "auto" picks the Gram route when d > N, "gram" and "direct"
    force one route; both produce identical eigenpairs up to round-off.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D array of samples x features")
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not 0.0 < energy_ratio <= 1.0:
        raise ValueError(f"energy ratio must lie in (0, 1], got {energy_ratio}")
    if method not in ("auto", "gram", "direct"):
        raise ValueError(f"unknown method {method!r}")

    mean = x.mean(axis=0)
    xc = x - mean
    use_gram = method == "gram" or (method == "auto" and d > n)

    if use_gram:
        gram = xc @ xc.T  # N x N
        raw, gram_vecs = np.linalg.eigh(gram)
        order = np.argsort(raw)[::-1]
        raw = raw[order]
        gram_vecs = gram_vecs[:, order]
        floor = max(raw[0], 0.0) * _RELATIVE_FLOOR
        raw = np.where(raw > floor, raw, 0.0)
        eigenvalues = raw / n
        nonzero = int(np.count_nonzero(raw))
        # map back: v = Xc^T v' has squared norm v'^T Xc Xc^T v' = raw
        mapped = xc.T @ gram_vecs[:, :nonzero]
        mapped = mapped / np.sqrt(raw[:nonzero])
        vectors = mapped
    else:
        cov = (xc.T @ xc) / n  # d x d
        raw, vecs = np.linalg.eigh(cov)
        order = np.argsort(raw)[::-1]
        raw = raw[order]
        vecs = vecs[:, order]
        floor = max(raw[0], 0.0) * _RELATIVE_FLOOR
        eigenvalues = np.where(raw > floor, raw, 0.0)
        keep = min(d, n)
        eigenvalues = eigenvalues[:keep]
        nonzero = int(np.count_nonzero(eigenvalues))
        vectors = vecs[:, :nonzero]

    if not np.any(eigenvalues > 0.0):
        raise ValueError("data has zero variance; no principal directions exist")

    total = float(np.cumsum(eigenvalues)[-1])
    m = select_components(eigenvalues, energy_ratio)
    # trailing zeros never extend the prefix, so m <= nonzero always holds
    projection = _fix_signs(vectors[:, :m])
    return PcaModel(
        mean=mean,
        eigenvalues=eigenvalues,
        projection=projection,
        energy_ratio=float(energy_ratio),
        total_energy=total,
    )


def project(model: PcaModel, data) -> np.ndarray:
    """Center with the training mean and project: Y' = P^T (Y - mu)."""
    y = np.asarray(data, dtype=np.float64)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != model.input_dim:
        raise ValueError(
            f"data has {y.shape[1]} features but the model expects {model.input_dim}"
        )
    out = (y - model.mean) @ model.projection
    return out[0] if single else out


def reconstruct(model: PcaModel, projected) -> np.ndarray:
    """Back-project reduced coordinates: Y = P Y' + mu."""
    z = np.asarray(projected, dtype=np.float64)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != model.output_dim:
        raise ValueError(
            f"projected data has {z.shape[1]} components but the model keeps {model.output_dim}"
        )
    out = z @ model.projection.T + model.mean
    return out[0] if single else out


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_model(model: PcaModel, path) -> None:
    """Persist as text: header (d, M, r, total), mean, eigenvalues, columns."""
    lines = [
        f"{model.input_dim} {model.output_dim} {_fmt(model.energy_ratio)} {_fmt(model.total_energy)}",
        " ".join(_fmt(v) for v in model.mean),
        " ".join(_fmt(v) for v in model.eigenvalues),
    ]
    for j in range(model.output_dim):
        lines.append(" ".join(_fmt(v) for v in model.projection[:, j]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path) -> PcaModel:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if len(text) < 3:
        raise ValueError(f"truncated PCA model file {path}")
    head = text[0].split()
    if len(head) != 4:
        raise ValueError(f"malformed PCA model header {text[0]!r}")
    d, m = int(head[0]), int(head[1])
    ratio, total = float(head[2]), float(head[3])
    mean = np.array([float(v) for v in text[1].split()])
    eigenvalues = np.array([float(v) for v in text[2].split()])
    if mean.size != d:
        raise ValueError(f"PCA mean length {mean.size} != header dim {d}")
    if len(text) < 3 + m:
        raise ValueError(f"PCA model file lists {len(text) - 3} columns, header says {m}")
    cols = [np.array([float(v) for v in text[3 + j].split()]) for j in range(m)]
    projection = np.stack(cols, axis=1) if m else np.zeros((d, 0))
    if projection.shape[0] != d:
        raise ValueError("PCA projection rows do not match header dim")
    return PcaModel(
        mean=mean,
        eigenvalues=eigenvalues,
        projection=projection,
        energy_ratio=ratio,
        total_energy=total,
    )
