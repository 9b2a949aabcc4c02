"""
Disparity map files: PFM for values, colormapped PNG for viewing, flat binary
dumps of cost volumes for debugging.
"""

import json
import re
from pathlib import Path

import cv2
import numpy as np

from lf_core import DisparityMap, LightFieldError


def read_pfm(path):
    """
    Read a PFM file.

    Returns:
        (data, scale): float32 array (H, W) or (H, W, 3) with top-down rows, and |scale|
    """
    path = Path(path)
    try:
        with open(path, "rb") as file:
            header = file.readline().rstrip().decode("ascii")
            if header == "PF":
                color = True
            elif header == "Pf":
                color = False
            else:
                raise LightFieldError(f"not a PFM file: {path}")

            dims = re.match(r"^(\d+)\s+(\d+)\s*$", file.readline().decode("ascii"))
            if not dims:
                raise LightFieldError(f"malformed PFM header: {path}")
            width, height = map(int, dims.groups())

            scale = float(file.readline().decode("ascii").rstrip())
            endian = "<" if scale < 0 else ">"
            data = np.frombuffer(file.read(), dtype=endian + "f4")
    except OSError as e:
        raise LightFieldError(f"cannot read {path}: {e}") from e
    except (UnicodeDecodeError, ValueError) as e:
        raise LightFieldError(f"malformed PFM file {path}: {e}") from e

    shape = (height, width, 3) if color else (height, width)
    if data.size != np.prod(shape):
        raise LightFieldError(f"{path} holds {data.size} values, expected {np.prod(shape)}")
    return np.flipud(data.reshape(shape)).astype(np.float32), abs(scale)


def write_pfm(path, data):
    """Write a little-endian ('-1.0' scale) PFM with bottom-up rows."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = "Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = "PF"
    else:
        raise ValueError(f"cannot write array of shape {data.shape} as PFM")
    height, width = data.shape[:2]
    with open(path, "wb") as file:
        file.write(f"{header}\n{width} {height}\n-1.0\n".encode("ascii"))
        file.write(np.flipud(data).astype("<f4").tobytes())


def load_disparity(path):
    """Read a PFM disparity map; non-finite values become invalid."""
    data, _ = read_pfm(path)
    if data.ndim != 2:
        raise LightFieldError(f"{path} is not a single-channel disparity map")
    values = data.astype(np.float64)
    return DisparityMap.from_values(values, np.isfinite(values))


def save_disparity(path, dm):
    """Write a disparity map as PFM; invalid pixels stay NaN."""
    write_pfm(path, dm.values)


def disparity_colors(dm, d_min, d_max):
    """Viridis rendering of [d_min, d_max]; invalid pixels are black. Returns BGR uint8."""
    scaled = np.clip((np.nan_to_num(dm.values, nan=d_min) - d_min) / (d_max - d_min), 0.0, 1.0)
    gray = np.round(scaled * 255.0).astype(np.uint8)
    colors = cv2.applyColorMap(gray, cv2.COLORMAP_VIRIDIS)
    colors[~dm.valid] = 0
    return colors


def write_disparity_png(path, dm, d_min, d_max):
    """Viridis preview of a disparity map over [d_min, d_max]."""
    if not cv2.imwrite(str(path), disparity_colors(dm, d_min, d_max)):
        raise LightFieldError(f"cannot write {path}")


def write_border_png(path, borders, count):
    """Border width as grayscale: black = single hypothesis, white = full range."""
    width = (borders.high - borders.low).astype(np.float64) / max(count - 1, 1)
    if not cv2.imwrite(str(path), np.round(width * 255.0).astype(np.uint8)):
        raise LightFieldError(f"cannot write {path}")


def dump_cost_volume(path, cv):
    """Raw little-endian float32 costs (NaN = unset) plus a JSON sidecar with the shape."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(cv.costs, dtype="<f4").tobytes())
    meta = {
        "shape": list(cv.shape),
        "dtype": "<f4",
        "order": "height, width, hypothesis",
        "unset": "nan",
        "sampled_count": int(cv.sampled_count),
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
