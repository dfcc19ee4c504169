"""Deterministic synthetic road scenes for desk-scale verification.

Renders a straight three-lane road in flat-ground perspective: dashed
ego-lane separators at +-0.5 lane widths, wider solid edge lines at +-1.5,
grass beyond the pavement and a constant sky. `lateral_offset` is the
road's lateral displacement in the image, in lane widths, rightward
positive: at the bottom row every marker shifts by offset * lane_width
pixels. Sequences sweep the offset to stage keep / change-left /
change-right / intersection clips and derive per-frame ground truth from
the offset profile.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .features import BehaviorLabel, label_of_transition
from .imaging import RgbImage

SKY_COLOR = (118, 146, 190)
GRASS_COLOR = (64, 96, 56)
ASPHALT_COLOR = (60, 60, 63)
MARKER_COLOR = (225, 225, 228)

# lane-width fractions at the bottom row
DASH_MARKER_HALF_WIDTH = 0.030
SOLID_MARKER_HALF_WIDTH = 0.075
ROAD_HALF_WIDTH = 1.95  # lane widths from road center to the grass
DASH_DUTY = 0.55
DASH_SPEED = 17.0  # bottom-row pixels of marker travel per frame


@dataclass(frozen=True)
class SceneParams:
    """Geometry, photometering and seeding of the synthetic renderer."""

    width: int = 640
    height: int = 360
    lane_width: float = 120.0  # pixels at the bottom row
    vanishing_point: tuple[float, float] | None = None  # defaults to center/horizon
    marker_period: float = 90.0  # dash cycle in bottom-row pixels
    lateral_offset: float = 0.0  # lane widths, rightward positive
    noise_sigma: float = 0.0
    seed: int = 0
    markers: bool = True

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError("frame must be at least 8x8")
        if self.lane_width <= 0:
            raise ValueError("lane width must be positive")
        if self.marker_period <= 0:
            raise ValueError("marker period must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def vp(self) -> tuple[float, float]:
        if self.vanishing_point is not None:
            return self.vanishing_point
        return ((self.width - 1) / 2.0, round(0.39 * self.height))


def render_scene(params: SceneParams, t: int = 0) -> RgbImage:
    """Render one frame; identical (params, t) yields identical bytes."""
    w, h = params.width, params.height
    vx, vy = params.vp
    shift = params.lateral_offset * params.lane_width

    canvas = np.empty((h, w, 3), dtype=np.float64)
    canvas[:] = SKY_COLOR

    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    denom = (h - 1) - vy
    s = (rows - vy) / denom  # depth scale: 1 at the bottom row, 0 at the horizon
    ground = s > 0.0
    s_col = np.where(ground, s, 1.0)[:, None]

    # road-frame lateral pixel offset of every pixel
    rel = (cols[None, :] - vx) - shift * s_col

    grass = ground[:, None] & (np.abs(rel) > ROAD_HALF_WIDTH * params.lane_width * s_col)
    road = ground[:, None] & ~grass
    canvas[grass] = GRASS_COLOR
    canvas[road] = ASPHALT_COLOR

    if params.markers:
        # dash phase depends on ground distance only; scrolls with t
        dist = np.where(ground, denom / np.where(ground, s, 1.0), 0.0)
        phase = (dist + t * DASH_SPEED) / params.marker_period
        dash_on = (phase - np.floor(phase)) < DASH_DUTY
        for u, half_frac, dashed in (
            (-1.5, SOLID_MARKER_HALF_WIDTH, False),
            (1.5, SOLID_MARKER_HALF_WIDTH, False),
            (-0.5, DASH_MARKER_HALF_WIDTH, True),
            (0.5, DASH_MARKER_HALF_WIDTH, True),
        ):
            center = u * params.lane_width * s_col
            half = half_frac * params.lane_width * s_col
            mask = ground[:, None] & (np.abs(rel - center) <= half)
            if dashed:
                mask &= dash_on[:, None]
            canvas[mask] = MARKER_COLOR

    if params.noise_sigma > 0.0:
        rng = np.random.default_rng([params.seed, t])
        canvas = canvas + rng.normal(0.0, params.noise_sigma, size=canvas.shape)

    return RgbImage(np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8))


class Trajectory(Enum):
    KEEP = "Keep"
    LEFT_CHANGE = "LeftChange"
    RIGHT_CHANGE = "RightChange"
    INTERSECTION = "Intersection"

    @classmethod
    def from_name(cls, name: str) -> "Trajectory":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown trajectory {name!r}")


KEEP_JITTER_SIGMA = 0.035


def offset_profile(trajectory: Trajectory, n_frames: int, seed: int) -> np.ndarray:
    """Per-frame lateral offsets for one clip."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if trajectory is Trajectory.KEEP or trajectory is Trajectory.INTERSECTION:
        rng = np.random.default_rng([seed, 10 + list(Trajectory).index(trajectory)])
        return rng.normal(0.0, KEEP_JITTER_SIGMA, size=n_frames)
    target = -1.0 if trajectory is Trajectory.LEFT_CHANGE else 1.0
    if n_frames == 1:
        return np.zeros(1)
    tau = np.arange(n_frames, dtype=np.float64) / (n_frames - 1)
    return target * (1.0 - np.cos(np.pi * tau)) / 2.0


def labels_for_offsets(offsets: np.ndarray, window: int) -> list[BehaviorLabel]:
    """Ground truth via the lateral transition rule over a sliding window."""
    n = len(offsets)
    out = []
    for i in range(n):
        prev = offsets[max(0, i - window)]
        nxt = offsets[min(n - 1, i + window)]
        out.append(label_of_transition(float(prev), float(nxt)))
    return out


def generate_sequence(
    params: SceneParams,
    trajectory: Trajectory,
    n_frames: int,
    label_window: int | None = None,
    t0: int = 0,
):
    """Render one clip and its ground-truth labels.

    Returns (frames, labels, offsets). Intersection clips render a
    markerless road and are labeled Unknown throughout. t0 offsets the
    frame index fed to the renderer so multi-clip plans keep scrolling
    dashes and fresh noise.
    """
    offsets = offset_profile(trajectory, n_frames, params.seed)
    if trajectory is Trajectory.INTERSECTION:
        labels = [BehaviorLabel.UNKNOWN] * n_frames
    else:
        window = label_window if label_window is not None else max(1, n_frames // 5)
        labels = labels_for_offsets(offsets, window)
    markers = trajectory is not Trajectory.INTERSECTION
    frames = []
    for i, off in enumerate(offsets):
        frame_params = replace(
            params, lateral_offset=float(off), markers=markers
        )
        frames.append(render_scene(frame_params, t0 + i))
    return frames, labels, offsets
