"""Dataset persistence: LibSVM ASCII files, the label store, and PNG frames.

The LibSVM grammar is line oriented: a decimal class label followed by
space-separated index:value pairs with strictly increasing 1-based indices.
Zero values are never stored. Writing is canonical (17 significant digit
floats, one trailing space before the newline, matching the historical
LibSVM dump layout) so that write -> read -> write is byte stable.
"""

from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .features import BehaviorLabel, FeatureKind, FeatureVector
from .imaging import RgbImage

_TOKEN = re.compile(r"\S+")


class LibsvmParseError(ValueError):
    """Malformed LibSVM text; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class SparseSample:
    """One labeled sparse feature row."""

    label: int
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        prev = 0
        for idx, val in self.entries:
            if idx < 1:
                raise ValueError(f"sparse index {idx} must be >= 1")
            if idx <= prev:
                raise ValueError(f"sparse indices must increase, got {idx} after {prev}")
            if val == 0.0:
                raise ValueError("zero values must not be stored")
            prev = idx

    @property
    def max_index(self) -> int:
        return self.entries[-1][0] if self.entries else 0


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _format_label(label: int) -> str:
    return "+1" if label == 1 else str(label)


def format_libsvm_line(sample: SparseSample) -> str:
    tokens = [_format_label(sample.label)]
    tokens.extend(f"{idx}:{_fmt(val)}" for idx, val in sample.entries)
    return " ".join(tokens) + " "


def write_libsvm(samples, destination) -> None:
    """Write samples as canonical LibSVM lines (LF endings)."""
    text = "".join(format_libsvm_line(s) + "\n" for s in samples)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="ascii", newline="\n")


def read_libsvm(source) -> list[SparseSample]:
    """Parse LibSVM text from a path, file object, or string."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="ascii")
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = list(_TOKEN.finditer(line))
        label_tok = tokens[0]
        try:
            label = int(label_tok.group(), 10)
        except ValueError:
            raise LibsvmParseError(
                f"bad label {label_tok.group()!r} at line {lineno}, col {label_tok.start() + 1}",
                lineno,
            ) from None
        entries = []
        prev = 0
        for tok in tokens[1:]:
            col = tok.start() + 1
            idx_s, sep, val_s = tok.group().partition(":")
            if not sep or not idx_s or not val_s:
                raise LibsvmParseError(
                    f"malformed pair {tok.group()!r} at line {lineno}, col {col}", lineno
                )
            try:
                idx = int(idx_s, 10)
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(
                    f"malformed pair {tok.group()!r} at line {lineno}, col {col}", lineno
                ) from None
            if idx == 0:
                raise LibsvmParseError(f"index 0 at line {lineno}, col {col}", lineno)
            if idx <= prev:
                raise LibsvmParseError(
                    f"non-increasing index at line {lineno}, col {col}", lineno
                )
            prev = idx
            if val != 0.0:
                entries.append((idx, val))
        samples.append(SparseSample(label, tuple(entries)))
    return samples


def sparsify(values, label: int) -> SparseSample:
    """Dense vector to sparse entries (1-based, zeros dropped)."""
    vec = np.asarray(values, dtype=np.float64).ravel()
    entries = tuple((i + 1, float(v)) for i, v in enumerate(vec) if v != 0.0)
    return SparseSample(int(label), entries)


def densify(sample: SparseSample, dim: int, kind: FeatureKind | None = None) -> FeatureVector:
    """Sparse sample to a dense FeatureVector of the given dimension.

    Label codes 0..3 map onto behavior labels; other codes leave the label
    unset.
    """
    if sample.max_index > dim:
        raise ValueError(f"sample index {sample.max_index} exceeds dimension {dim}")
    values = np.zeros(dim, dtype=np.float64)
    for idx, val in sample.entries:
        values[idx - 1] = val
    try:
        label = BehaviorLabel.from_code(sample.label)
    except ValueError:
        label = None
    return FeatureVector(values, kind, label)


class LabelStore:
    """Append-only frame label log: `frame_id,label,timestamp` per line.

    Rewrites of the same frame_id append a new record; replay keeps the
    last one. Appends flush and fsync before returning so an accepted
    label survives a process kill.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def assign(self, frame_id: str, label: BehaviorLabel, timestamp: float) -> None:
        if "," in frame_id or "\n" in frame_id or not frame_id:
            raise ValueError(f"invalid frame id {frame_id!r}")
        line = f"{frame_id},{label.tag},{timestamp:.3f}\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def snapshot(self) -> dict[str, tuple[BehaviorLabel, float]]:
        """Replay the file; last write per frame_id wins."""
        out: dict[str, tuple[BehaviorLabel, float]] = {}
        if not self.path.exists():
            return out
        with self._lock:
            text = self.path.read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"malformed label record at line {lineno}: {line!r}")
            frame_id, tag, ts = parts
            out[frame_id] = (BehaviorLabel.from_tag(tag), float(ts))
        return out

    def labels(self) -> dict[str, BehaviorLabel]:
        return {fid: rec[0] for fid, rec in self.snapshot().items()}


FRAME_PATTERN = "frame_{:06d}.png"


def frame_id_for(index: int) -> str:
    return FRAME_PATTERN.format(index).removesuffix(".png")


def list_frames(frames_dir) -> list[str]:
    """Frame ids (file stems) in lexicographic = temporal order."""
    d = Path(frames_dir)
    if not d.is_dir():
        raise NotADirectoryError(f"frames directory {d} does not exist")
    return sorted(p.stem for p in d.glob("*.png"))


def read_frame(path) -> RgbImage:
    """Load a PNG frame; grayscale files are replicated into RGB."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return RgbImage(np.asarray(rgb, dtype=np.uint8))


def write_frame(img: RgbImage, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
