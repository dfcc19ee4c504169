"""Scoring: confusion matrices, accuracy, and adjusted accuracy.

Adjusted accuracy recounts ground-truth Unknown frames that were predicted
as Keep as correct; at intersections the vehicle is in fact holding its
direction, so those cells are arguably true positives.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import LABEL_ORDER, BehaviorLabel

CANONICAL_LABELS = tuple(label.tag for label in LABEL_ORDER)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are ground truth, columns are predictions."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        k = len(self.labels)
        if c.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k}, got {c.shape}")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} not present in matrix") from None


def _as_tag(label) -> str:
    return label.tag if isinstance(label, BehaviorLabel) else str(label)


def confusion(truth, predicted, labels=None) -> ConfusionMatrix:
    """Count truth/prediction pairs into a square grid."""
    truth = [_as_tag(t) for t in truth]
    predicted = [_as_tag(p) for p in predicted]
    if len(truth) != len(predicted):
        raise ValueError(
            f"truth and prediction lengths differ: {len(truth)} vs {len(predicted)}"
        )
    if labels is None:
        seen = set(truth) | set(predicted)
        if seen.issubset(set(CANONICAL_LABELS)):
            labels = CANONICAL_LABELS
        else:
            ordered = []
            for tag in truth + predicted:
                if tag not in ordered:
                    ordered.append(tag)
            labels = tuple(ordered)
    else:
        labels = tuple(_as_tag(l) for l in labels)
    index = {tag: i for i, tag in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels, counts)


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of diagonal hits."""
    total = cm.total
    if total == 0:
        raise ValueError("cannot score an empty confusion matrix")
    return float(np.trace(cm.counts)) / total


def adjusted_accuracy(cm: ConfusionMatrix) -> float:
    """Accuracy counting Unknown frames predicted as Keep as correct."""
    unknown = cm.index_of(BehaviorLabel.UNKNOWN.tag)
    keep = cm.index_of(BehaviorLabel.KEEP.tag)
    total = cm.total
    if total == 0:
        raise ValueError("cannot score an empty confusion matrix")
    return float(np.trace(cm.counts) + cm.counts[unknown, keep]) / total


def report(cm: ConfusionMatrix) -> str:
    """Aligned text table plus the accuracy lines; deterministic bytes."""
    header = ["GT \\ Pred"] + list(cm.labels)
    rows = [
        [tag] + [str(int(v)) for v in cm.counts[i]] for i, tag in enumerate(cm.labels)
    ]
    widths = [
        max(len(r[col]) for r in [header] + rows) for col in range(len(header))
    ]
    lines = []
    lines.append("  ".join(h.ljust(widths[0]) if i == 0 else h.rjust(widths[i])
                           for i, h in enumerate(header)))
    for r in rows:
        lines.append(
            "  ".join(
                cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i])
                for i, cell in enumerate(r)
            )
        )
    lines.append(f"samples: {cm.total}")
    lines.append(f"accuracy: {100.0 * accuracy(cm):.2f}%")
    try:
        lines.append(f"adjusted accuracy: {100.0 * adjusted_accuracy(cm):.2f}%")
    except ValueError:
        pass  # labels outside the behavior set: no adjusted metric
    return "\n".join(lines) + "\n"


def to_csv(cm: ConfusionMatrix) -> str:
    """Machine-readable variant: label,counts... with a header row."""
    lines = ["label," + ",".join(cm.labels)]
    for i, tag in enumerate(cm.labels):
        lines.append(tag + "," + ",".join(str(int(v)) for v in cm.counts[i]))
    return "\n".join(lines) + "\n"


def save_figure(cm: ConfusionMatrix, path) -> None:
    """Render the matrix as a heatmap PNG with stable bytes across runs."""
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    k = len(cm.labels)
    fig = Figure(figsize=(1.4 + 0.9 * k, 1.2 + 0.9 * k), dpi=110)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    im = ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(range(k), cm.labels, rotation=30, ha="right")
    ax.set_yticks(range(k), cm.labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("ground truth")
    threshold = cm.counts.max() / 2 if cm.counts.max() > 0 else 0.5
    for i in range(k):
        for j in range(k):
            color = "white" if cm.counts[i, j] > threshold else "black"
            ax.text(j, i, str(int(cm.counts[i, j])), ha="center", va="center", color=color)
    ax.set_title(f"accuracy {100.0 * accuracy(cm):.1f}%")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(Path(path), format="png", metadata={"Software": "lanecue"})
