"""
Light field container, disparity hypotheses and the cross-view pixel projection.

A light field is stored as an S x T grid of RGB views, indexed views[s, t] with
s the horizontal and t the vertical angular coordinate. Pixel coordinates are
(u, v) = (column, row).
"""

import configparser
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

logger = logging.getLogger(__name__)

OUT_OF_BOUNDS = None

BENCHMARK_VIEW = re.compile(r"^input_Cam(\d+)\.png$", re.IGNORECASE)
NUMBERED_VIEW = re.compile(r"(\d+)\.png$", re.IGNORECASE)
SCENE_CONFIG_NAMES = ("parameters.cfg", "config.cfg", "config.txt")

# Accepted spellings of the scene config keys, first match wins.
SCENE_KEYS = {
    "d_min": ("disp_min", "d_min", "dmin"),
    "d_max": ("disp_max", "d_max", "dmax"),
    "num_s": ("num_cams_x", "angular_s", "views_x"),
    "num_t": ("num_cams_y", "angular_t", "views_y"),
    "ref_s": ("ref_s",),
    "ref_t": ("ref_t",),
}


class LightFieldError(ValueError):
    """Raised for unusable light field input: missing views, bad sizes, bad config."""


@dataclass(frozen=True)
class HypothesisGrid:
    """N_d uniformly spaced disparity hypotheses covering [d_min, d_max]."""

    d_min: float
    d_max: float
    count: int = 64

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"need at least 2 hypotheses, got {self.count}")
        if not self.d_min < self.d_max:
            raise ValueError(f"d_min ({self.d_min}) must be below d_max ({self.d_max})")

    @property
    def step(self):
        """Spacing between neighbouring hypotheses."""
        return (self.d_max - self.d_min) / (self.count - 1)

    def hypothesis(self, k):
        """Disparity of hypothesis index k."""
        if not 0 <= k < self.count:
            raise IndexError(f"hypothesis index {k} outside [0, {self.count})")
        return float(self.disparities()[k])

    def disparities(self):
        """All N_d hypotheses as a float64 array."""
        # linspace pins both endpoints exactly
        return np.linspace(self.d_min, self.d_max, self.count)

    def to_index(self, disparity):
        """Fractional hypothesis index of a disparity."""
        return (np.asarray(disparity, dtype=np.float64) - self.d_min) / self.step

    def index_of(self, disparity):
        """Nearest hypothesis index, clamped into [0, N_d - 1]."""
        index = np.floor(self.to_index(disparity) + 0.5)
        return np.clip(index, 0, self.count - 1).astype(np.intp)


@dataclass
class DisparityMap:
    """
    Fractional disparities of the reference view.

    Invalid pixels hold NaN, which never compares equal to any disparity.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"disparity map must be 2D, got shape {self.values.shape}")

    @classmethod
    def invalid(cls, shape):
        """A map with every pixel invalid."""
        return cls(np.full(shape, np.nan))

    @classmethod
    def from_values(cls, values, valid):
        """Values where `valid`, NaN elsewhere."""
        return cls(np.where(valid, values, np.nan))

    @property
    def valid(self):
        """Mask of pixels holding a disparity."""
        return ~np.isnan(self.values)

    @property
    def shape(self):
        """(H, W)."""
        return self.values.shape

    def copy(self):
        """Independent copy of the values."""
        return DisparityMap(self.values.copy())


@dataclass(frozen=True)
class LightField:
    """
    Light field L(u, v, s, t).

    Args:
        views: uint8 array of shape (S, T, H, W, 3)
        d_min, d_max: disparity range in pixels per angular step
        ref_s, ref_t: reference view, defaults to the grid center
    """

    views: np.ndarray
    d_min: float
    d_max: float
    ref_s: int = None
    ref_t: int = None

    def __post_init__(self):
        views = np.asarray(self.views)
        if views.ndim != 5 or views.shape[-1] != 3:
            raise LightFieldError(f"views must have shape (S, T, H, W, 3), got {views.shape}")
        if not self.d_min < self.d_max:
            raise LightFieldError(f"d_min ({self.d_min}) must be below d_max ({self.d_max})")
        object.__setattr__(self, "views", views)
        if self.ref_s is None:
            object.__setattr__(self, "ref_s", (self.S - 1) // 2)
        if self.ref_t is None:
            object.__setattr__(self, "ref_t", (self.T - 1) // 2)
        if not (0 <= self.ref_s < self.S and 0 <= self.ref_t < self.T):
            raise LightFieldError(
                f"reference view ({self.ref_s}, {self.ref_t}) outside {self.S}x{self.T} grid"
            )

    @property
    def S(self):
        """Number of views along s."""
        return self.views.shape[0]

    @property
    def T(self):
        """Number of views along t."""
        return self.views.shape[1]

    @property
    def height(self):
        """View height in pixels."""
        return self.views.shape[2]

    @property
    def width(self):
        """View width in pixels."""
        return self.views.shape[3]

    @property
    def reference(self):
        """Angular coordinates (s, t) of the reference view."""
        return (self.ref_s, self.ref_t)

    def view(self, s, t):
        """The (H, W, 3) image of view (s, t)."""
        return self.views[s, t]

    def reference_view(self):
        """The (H, W, 3) image of the reference view."""
        return self.views[self.ref_s, self.ref_t]

    def cross_views(self):
        """
        Cross-lying views at the ends of the reference row and column.

        Ordered (s_ref, 0), (s_ref, t_max), (0, t_ref), (s_max, t_ref); entries that
        coincide with the reference view (T=1 or S=1) are dropped.
        """
        candidates = [
            (self.ref_s, 0),
            (self.ref_s, self.T - 1),
            (0, self.ref_t),
            (self.S - 1, self.ref_t),
        ]
        views = []
        for candidate in candidates:
            if candidate != self.reference and candidate not in views:
                views.append(candidate)
        return views

    def grid(self, count):
        """`count` hypotheses over this light field's disparity range."""
        return HypothesisGrid(self.d_min, self.d_max, count)


def project(u, v, s, t, d, ref):
    """
    Position of reference pixel (u, v) in view (s, t) under disparity d.

    Works elementwise on arrays; no clamping, callers check bounds.
    """
    ref_s, ref_t = ref
    return u + (ref_s - s) * d, v + (ref_t - t) * d


def sample_points(view, u, v, mode="bilinear"):
    """
    Sample a view at fractional positions.

    Returns (values, inside). In bilinear mode a position is inside when
    0 <= u <= W-1 and 0 <= v <= H-1. In nearest mode it is inside when the
    rounded pixel floor(u + 0.5), floor(v + 0.5) lies in the image, so
    u = -0.4 reads column 0. Values at outside positions are clamped samples
    and must be ignored. Bilinear results are float64, nearest keeps the view dtype.
    """
    height, width = view.shape[:2]
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)

    if mode == "nearest":
        x = np.floor(u + 0.5)
        y = np.floor(v + 0.5)
        inside = (x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)
        x = np.clip(x, 0, width - 1).astype(np.intp)
        y = np.clip(y, 0, height - 1).astype(np.intp)
        return view[y, x], inside
    if mode != "bilinear":
        raise ValueError(f"unknown sampling mode: {mode}")

    inside = (u >= 0) & (u <= width - 1) & (v >= 0) & (v <= height - 1)
    u = np.clip(u, 0, width - 1)
    v = np.clip(v, 0, height - 1)
    x0 = np.floor(u).astype(np.intp)
    y0 = np.floor(v).astype(np.intp)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    fx = u - x0
    fy = v - y0
    if view.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]

    top_left = view[y0, x0].astype(np.float64)
    top_right = view[y0, x1].astype(np.float64)
    bottom_left = view[y1, x0].astype(np.float64)
    bottom_right = view[y1, x1].astype(np.float64)
    top = top_left + (top_right - top_left) * fx
    bottom = bottom_left + (bottom_right - bottom_left) * fx
    return top + (bottom - top) * fy, inside


def sample_view(view, u, v, mode="bilinear"):
    """Sample one position; returns the RGB value or OUT_OF_BOUNDS."""
    values, inside = sample_points(view, np.array([u]), np.array([v]), mode)
    if not inside[0]:
        return OUT_OF_BOUNDS
    return values[0]


def read_scene_config(path):
    """
    Parse a scene config into a flat dict.

    Accepts the 4D benchmark's sectioned parameters.cfg as well as bare
    key=value files; section names are ignored.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
        parser.read_string("[scene]\n" + text)
    except (OSError, configparser.Error) as e:
        raise LightFieldError(f"unreadable scene config {path}: {e}") from e

    entries = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            entries[key.strip().lower()] = value.strip()
    return entries


def _lookup(entries, name, cast, path):
    for key in SCENE_KEYS[name]:
        if key in entries:
            try:
                return cast(entries[key])
            except ValueError as e:
                raise LightFieldError(f"bad value for {key} in {path}: {entries[key]!r}") from e
    return None


def _find_scene_config(directory):
    for name in SCENE_CONFIG_NAMES:
        candidate = directory / name
        if candidate.is_file():
            return candidate
    candidates = sorted(directory.glob("*.cfg"))
    if candidates:
        return candidates[0]
    raise LightFieldError(f"no scene config found in {directory}")


def _numbered_views(directory):
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    benchmark = {int(m.group(1)): p for p in files if (m := BENCHMARK_VIEW.match(p.name))}
    if benchmark:
        return benchmark
    numbered = {}
    for path in files:
        match = NUMBERED_VIEW.search(path.name)
        if match and not path.name.lower().startswith(("gt_", "disp")):
            numbered[int(match.group(1))] = path
    return numbered


def read_rgb(path):
    """Read an image file as RGB uint8."""
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise LightFieldError(f"cannot read view {path}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def load_lightfield(directory, layout="benchmark"):
    """
    Load a light field from a directory of numbered PNG views plus a scene config.

    Args:
        directory: scene directory
        layout: 'benchmark' for an S x T grid in row-major order, 'row' for a
            single row of views (T = 1)

    Returns:
        LightField
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise LightFieldError(f"not a directory: {directory}")
    if layout not in ("benchmark", "row"):
        raise LightFieldError(f"unknown layout: {layout}")

    config_path = _find_scene_config(directory)
    entries = read_scene_config(config_path)
    d_min = _lookup(entries, "d_min", float, config_path)
    d_max = _lookup(entries, "d_max", float, config_path)
    if d_min is None or d_max is None:
        raise LightFieldError(f"{config_path} lacks disp_min/disp_max")

    views = _numbered_views(directory)
    if not views:
        raise LightFieldError(f"no numbered PNG views in {directory}")

    if layout == "row":
        num_s = _lookup(entries, "num_s", int, config_path) or max(views) + 1
        num_t = 1
    else:
        num_s = _lookup(entries, "num_s", int, config_path)
        num_t = _lookup(entries, "num_t", int, config_path)
        if num_s is None or num_t is None:
            side = int(round((max(views) + 1) ** 0.5))
            if side * side != max(views) + 1:
                raise LightFieldError(
                    f"cannot infer a square grid from {max(views) + 1} views; "
                    "set num_cams_x/num_cams_y"
                )
            num_s = num_s or side
            num_t = num_t or side

    for index in range(num_s * num_t):
        if index not in views:
            raise LightFieldError(f"missing view index {index} in {directory}")

    first = read_rgb(views[0])
    grid = np.empty((num_s, num_t) + first.shape, dtype=np.uint8)
    for index in range(num_s * num_t):
        image = first if index == 0 else read_rgb(views[index])
        if image.shape != first.shape:
            raise LightFieldError(
                f"view {index} has shape {image.shape}, expected {first.shape}"
            )
        grid[index % num_s, index // num_s] = image

    logger.debug("loaded %dx%d light field of %dx%d views from %s",
                 num_s, num_t, first.shape[1], first.shape[0], directory)
    return LightField(
        grid,
        d_min,
        d_max,
        ref_s=_lookup(entries, "ref_s", int, config_path),
        ref_t=_lookup(entries, "ref_t", int, config_path),
    )


def write_lightfield(lf, directory):
    """Write a light field in the benchmark layout (input_CamNNN.png + parameters.cfg)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t in range(lf.T):
        for s in range(lf.S):
            path = directory / f"input_Cam{t * lf.S + s:03d}.png"
            if not cv2.imwrite(str(path), cv2.cvtColor(lf.view(s, t), cv2.COLOR_RGB2BGR)):
                raise LightFieldError(f"cannot write view {path}")

    lines = [
        "[meta]",
        f"disp_min = {float(lf.d_min)!r}",
        f"disp_max = {float(lf.d_max)!r}",
        f"num_cams_x = {lf.S}",
        f"num_cams_y = {lf.T}",
        f"ref_s = {lf.ref_s}",
        f"ref_t = {lf.ref_t}",
    ]
    (directory / "parameters.cfg").write_text("\n".join(lines) + "\n")
