"""Key-value text configuration shared by the CLI commands.

The format is one `key = value` pair per line, `#` comments, blank lines
ignored. The same config file read twice must drive bit-identical feature
extraction, so every numeric field round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .features import DEFAULT_HOG_BINS, DEFAULT_HOG_CELL, DEFAULT_ROI, RoiSpec
from .imaging import CannyParams

VALID_FEATURES = ("hog", "canny")
VALID_KERNELS = ("linear", "rbf")
VALID_PCA_MODES = ("auto", "on", "off")


@dataclass(frozen=True)
class PipelineConfig:
    roi: RoiSpec = DEFAULT_ROI
    feature: str = "hog"
    canny: CannyParams = CannyParams()
    cell: int = DEFAULT_HOG_CELL
    bins: int = DEFAULT_HOG_BINS
    pca_mode: str = "auto"  # auto: on for canny, off for hog
    pca_ratio: float = 0.98
    kernel: str = "rbf"
    c: float = 1.0
    gamma: float | None = None  # None: 1 / feature-dimension
    tol: float = 1e-3
    frames_dir: str | None = None
    labels_file: str | None = None
    model_dir: str | None = None

    def __post_init__(self):
        if self.feature not in VALID_FEATURES:
            raise ValueError(f"feature must be one of {VALID_FEATURES}, got {self.feature!r}")
        if self.kernel not in VALID_KERNELS:
            raise ValueError(f"kernel must be one of {VALID_KERNELS}, got {self.kernel!r}")
        if self.pca_mode not in VALID_PCA_MODES:
            raise ValueError(f"pca must be one of {VALID_PCA_MODES}, got {self.pca_mode!r}")
        if not 0.0 < self.pca_ratio <= 1.0:
            raise ValueError(f"pca_ratio must lie in (0, 1], got {self.pca_ratio}")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.cell < 1 or self.bins < 1:
            raise ValueError("cell and bins must be positive")

    @property
    def pca_enabled(self) -> bool:
        if self.pca_mode == "auto":
            return self.feature == "canny"
        return self.pca_mode == "on"

    @property
    def feature_dim(self) -> int:
        if self.feature == "canny":
            return self.roi.canny_stack_length
        return self.roi.hog_length(self.cell, self.bins)


def parse_key_values(path) -> dict[str, str]:
    """Raw `key = value` pairs from a config file."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        out[key.strip().lower()] = value.strip()
    return out


def _parse_ints(value: str, n: int | None, key: str) -> tuple[int, ...]:
    parts = [p for p in value.replace(",", " ").split() if p]
    try:
        nums = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"{key} must be a comma-separated integer list, got {value!r}") from None
    if n is not None and len(nums) != n:
        raise ValueError(f"{key} needs {n} integers, got {len(nums)}")
    return nums


def config_from_pairs(pairs: dict[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    cfg = base or PipelineConfig()
    roi_kw = {}
    if "rect" in pairs:
        roi_kw["rect"] = _parse_ints(pairs["rect"], 4, "rect")
    if "layer_rows" in pairs:
        roi_kw["layer_rows"] = _parse_ints(pairs["layer_rows"], 4, "layer_rows")
    if "layer_height" in pairs:
        roi_kw["layer_height"] = int(pairs["layer_height"])
    roi = cfg.roi
    if roi_kw:
        roi = RoiSpec(
            rect=roi_kw.get("rect", cfg.roi.rect),
            layer_rows=roi_kw.get("layer_rows", cfg.roi.layer_rows),
            layer_height=roi_kw.get("layer_height", cfg.roi.layer_height),
        )
    canny_kw = {}
    if "canny_low" in pairs:
        canny_kw["low"] = float(pairs["canny_low"])
    if "canny_high" in pairs:
        canny_kw["high"] = float(pairs["canny_high"])
    if "blur_kernel" in pairs:
        canny_kw["blur_kernel"] = int(pairs["blur_kernel"])
    if "blur_sigma" in pairs:
        canny_kw["blur_sigma"] = float(pairs["blur_sigma"])
    canny = replace(cfg.canny, **canny_kw) if canny_kw else cfg.canny

    gamma_raw = pairs.get("gamma")
    gamma = cfg.gamma
    if gamma_raw is not None:
        gamma = None if gamma_raw.lower() == "auto" else float(gamma_raw)

    return PipelineConfig(
        roi=roi,
        feature=pairs.get("feature", cfg.feature),
        canny=canny,
        cell=int(pairs.get("cell", cfg.cell)),
        bins=int(pairs.get("bins", cfg.bins)),
        pca_mode=pairs.get("pca", cfg.pca_mode),
        pca_ratio=float(pairs.get("pca_ratio", cfg.pca_ratio)),
        kernel=pairs.get("kernel", cfg.kernel),
        c=float(pairs.get("c", cfg.c)),
        gamma=gamma,
        tol=float(pairs.get("tol", cfg.tol)),
        frames_dir=pairs.get("frames_dir", cfg.frames_dir),
        labels_file=pairs.get("labels_file", cfg.labels_file),
        model_dir=pairs.get("model_dir", cfg.model_dir),
    )


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    return config_from_pairs(parse_key_values(path), base)


def write_config(cfg: PipelineConfig, path) -> None:
    """Persist a config so a later run reproduces identical features."""
    x, y, w, h = cfg.roi.rect
    lines = [
        "# lanecue pipeline configuration",
        f"rect = {x},{y},{w},{h}",
        "layer_rows = " + ",".join(str(r) for r in cfg.roi.layer_rows),
        f"layer_height = {cfg.roi.layer_height}",
        f"cell = {cfg.cell}",
        f"bins = {cfg.bins}",
        f"feature = {cfg.feature}",
        f"canny_low = {cfg.canny.low:.17g}",
        f"canny_high = {cfg.canny.high:.17g}",
        f"blur_kernel = {cfg.canny.blur_kernel}",
        f"blur_sigma = {cfg.canny.blur_sigma:.17g}",
        f"pca = {cfg.pca_mode}",
        f"pca_ratio = {cfg.pca_ratio:.17g}",
        f"kernel = {cfg.kernel}",
        f"c = {cfg.c:.17g}",
        "gamma = " + ("auto" if cfg.gamma is None else f"{cfg.gamma:.17g}"),
        f"tol = {cfg.tol:.17g}",
    ]
    for key, value in (
        ("frames_dir", cfg.frames_dir),
        ("labels_file", cfg.labels_file),
        ("model_dir", cfg.model_dir),
    ):
        if value is not None:
            lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
