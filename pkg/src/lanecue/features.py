"""Feature extraction from a region of interest ahead of the vehicle.

Two descriptors are produced from the same ROI rectangle: a binary stack of
Canny edge maps sampled from four thin distance layers, and a histogram of
oriented gradients over 16x16 cells with 8 unsigned orientation bins and no
block normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .imaging import CannyParams, GrayImage, RgbImage, canny, sobel_gradients, to_gray


class BehaviorLabel(Enum):
    """Driving behavior over a frame window."""

    KEEP = 0
    CHANGE_LEFT = 1
    CHANGE_RIGHT = 2
    UNKNOWN = 3

    @property
    def code(self) -> int:
        return self.value

    @property
    def tag(self) -> str:
        return _LABEL_TAGS[self]

    @classmethod
    def from_code(cls, code: int) -> "BehaviorLabel":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown behavior label code {code}") from None

    @classmethod
    def from_tag(cls, tag: str) -> "BehaviorLabel":
        try:
            return _TAGS_TO_LABEL[tag]
        except KeyError:
            raise ValueError(f"unknown label {tag!r}") from None


_LABEL_TAGS = {
    BehaviorLabel.KEEP: "Keep",
    BehaviorLabel.CHANGE_LEFT: "ChangeLeft",
    BehaviorLabel.CHANGE_RIGHT: "ChangeRight",
    BehaviorLabel.UNKNOWN: "Unknown",
}
_TAGS_TO_LABEL = {tag: label for label, tag in _LABEL_TAGS.items()}

LABEL_ORDER = (
    BehaviorLabel.KEEP,
    BehaviorLabel.CHANGE_LEFT,
    BehaviorLabel.CHANGE_RIGHT,
    BehaviorLabel.UNKNOWN,
)


class FeatureKind(Enum):
    CANNY_STACK = "canny"
    HOG = "hog"


@dataclass(frozen=True)
class RoiSpec:
    """Sampling geometry: a fixed rectangle holding four thin distance layers.

    layer_rows are offsets from the rectangle top, ordered top to bottom, so
    the first layer is the most distant one (nominal 30 m) and the last sits
    closest to the vehicle (nominal 1 m).
    """

    rect: tuple[int, int, int, int]  # x, y, width, height
    layer_rows: tuple[int, int, int, int]
    layer_height: int

    def __post_init__(self):
        x, y, w, h = self.rect
        if w < 1 or h < 1:
            raise ValueError("ROI rectangle must have positive size")
        if x < 0 or y < 0:
            raise ValueError("ROI rectangle origin must be non-negative")
        if len(self.layer_rows) != 4:
            raise ValueError(f"exactly 4 layers required, got {len(self.layer_rows)}")
        if self.layer_height < 1:
            raise ValueError("layer height must be >= 1")
        rows = tuple(self.layer_rows)
        if any(b <= a for a, b in zip(rows, rows[1:])):
            raise ValueError(f"layer rows must be strictly increasing, got {rows}")
        for r in rows:
            if r < 0 or r + self.layer_height > h:
                raise ValueError(
                    f"layer at row {r} (height {self.layer_height}) exceeds ROI height {h}"
                )
        object.__setattr__(self, "rect", (int(x), int(y), int(w), int(h)))
        object.__setattr__(self, "layer_rows", tuple(int(r) for r in rows))

    def validate_for(self, frame_width: int, frame_height: int) -> None:
        x, y, w, h = self.rect
        if x + w > frame_width or y + h > frame_height:
            raise ValueError(
                f"ROI {self.rect} does not fit inside a {frame_width}x{frame_height} frame"
            )

    def crop(self, frame: RgbImage) -> RgbImage:
        self.validate_for(frame.width, frame.height)
        x, y, w, h = self.rect
        return RgbImage(frame.pixels[y : y + h, x : x + w])

    @property
    def canny_stack_length(self) -> int:
        return 4 * self.layer_height * self.rect[2]

    def hog_length(self, cell: int, bins: int) -> int:
        _, _, w, h = self.rect
        return (w // cell) * (h // cell) * bins


# ROI for the 1920x1080 forward camera: a 400x110 rectangle centered
# horizontally in the lower part of the frame. 4 layers x 10 rows x 400
# columns stack to 16,000 binary features; the 400x96 cell-aligned window
# yields 25 x 6 cells x 8 bins = 1,200 HoG features.
DEFAULT_ROI = RoiSpec(rect=(760, 800, 400, 110), layer_rows=(0, 30, 60, 100), layer_height=10)

DEFAULT_HOG_CELL = 16
DEFAULT_HOG_BINS = 8


@dataclass
class FeatureVector:
    """A flat numeric feature vector with an optional behavior label."""

    values: np.ndarray
    kind: FeatureKind | None = None
    label: BehaviorLabel | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()

    def __len__(self) -> int:
        return self.values.size


def extract_canny_stack(
    frame: RgbImage,
    roi: RoiSpec,
    params: CannyParams = CannyParams(),
    label: BehaviorLabel | None = None,
) -> FeatureVector:
    """Stack the Canny edge rows of the four ROI layers into one binary vector.

    The whole ROI is converted to gray, blurred and edge-filtered once; the
    four layer bands are then concatenated row by row, top layer first.
    """
    sub = roi.crop(frame)
    edges = canny(to_gray(sub), params)
    bands = [
        edges.data[r : r + roi.layer_height, :].ravel() for r in roi.layer_rows
    ]
    values = np.concatenate(bands).astype(np.float64)
    return FeatureVector(values, FeatureKind.CANNY_STACK, label)


def extract_hog(
    frame: RgbImage,
    roi: RoiSpec,
    cell: int = DEFAULT_HOG_CELL,
    bins: int = DEFAULT_HOG_BINS,
    label: BehaviorLabel | None = None,
) -> FeatureVector:
    """Cell histograms of gradient magnitude over unsigned orientation bins.

    The ROI is cropped to the largest cell multiple (anchored top-left), each
    pixel votes its full Sobel magnitude into the nearest of `bins` centers
    over [0, pi), and cells are concatenated row-major. No block
    normalization is applied.
    """
    if cell < 1 or bins < 1:
        raise ValueError("cell size and bin count must be positive")
    sub = roi.crop(frame)
    gray = to_gray(sub)
    win_h = (gray.height // cell) * cell
    win_w = (gray.width // cell) * cell
    if win_h == 0 or win_w == 0:
        raise ValueError(
            f"cell size {cell} exceeds the {gray.width}x{gray.height} ROI window"
        )
    window = GrayImage(gray.pixels[:win_h, :win_w])
    grad = sobel_gradients(window)
    bin_idx = np.floor(grad.orientation * bins / np.pi + 0.5).astype(np.int64) % bins
    cells_y, cells_x = win_h // cell, win_w // cell
    rows = np.arange(win_h) // cell
    cols = np.arange(win_w) // cell
    cell_idx = rows[:, None] * cells_x + cols[None, :]
    flat_idx = (cell_idx * bins + bin_idx).ravel()
    hist = np.bincount(flat_idx, weights=grad.magnitude.ravel(), minlength=cells_y * cells_x * bins)
    return FeatureVector(hist, FeatureKind.HOG, label)


def label_of_transition(prev_lane_offset: float, next_lane_offset: float) -> BehaviorLabel:
    """Classify a lateral move measured in lane widths across a window."""
    delta = next_lane_offset - prev_lane_offset
    if delta <= -0.5:
        return BehaviorLabel.CHANGE_LEFT
    if delta >= 0.5:
        return BehaviorLabel.CHANGE_RIGHT
    return BehaviorLabel.KEEP
