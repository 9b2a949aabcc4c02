"""
Sparse-window Census transform and Hamming distances.
Each channel of each view is encoded separately; bit k of a pixel's string is 1
iff the center is strictly brighter than the pixel at pattern offset k.
"""

from dataclasses import dataclass

import numpy as np

CHANNELS = 3

# Sparse 7x7 window: every other pixel on a 4x4 lattice around the center.
DEFAULT_OFFSETS = tuple((i, j) for i in (-3, -1, 1, 3) for j in (-3, -1, 1, 3))


@dataclass(frozen=True)
class CensusPattern:
    """Ordered (i, j) offsets, i along u (columns) and j along v (rows)."""

    offsets: tuple = DEFAULT_OFFSETS

    def __post_init__(self):
        offsets = tuple((int(i), int(j)) for i, j in self.offsets)
        if not offsets:
            raise ValueError("census pattern must not be empty")
        if len(offsets) > 64:
            raise ValueError(f"census pattern has {len(offsets)} offsets, at most 64 fit a word")
        if (0, 0) in offsets:
            raise ValueError("census pattern must not contain the center offset (0, 0)")
        if len(set(offsets)) != len(offsets):
            raise ValueError("census pattern offsets must be distinct")
        object.__setattr__(self, "offsets", offsets)

    @property
    def width(self):
        """Bits per channel string."""
        return len(self.offsets)

    @property
    def radius(self):
        """Chebyshev radius of the window."""
        return max(max(abs(i), abs(j)) for i, j in self.offsets)

    @classmethod
    def parse(cls, text):
        """Parse 'i,j; i,j; ...'."""
        offsets = []
        for item in text.split(";"):
            item = item.strip()
            if not item:
                continue
            i, j = item.split(",")
            offsets.append((int(i), int(j)))
        return cls(tuple(offsets))

    def format(self):
        """Inverse of parse."""
        return "; ".join(f"{i},{j}" for i, j in self.offsets)


@dataclass(frozen=True)
class CensusField:
    """
    Census strings of a whole light field.

    bits has shape (S, T, H, W, 3) and dtype uint64; width is the string length.
    """

    bits: np.ndarray
    width: int
    ref_s: int
    ref_t: int

    @property
    def reference(self):
        """Angular coordinates of the reference view."""
        return (self.ref_s, self.ref_t)

    @property
    def max_distance(self):
        """Largest RGB census distance, the cost of an off-image projection."""
        return CHANNELS * self.width

    def view(self, s, t):
        """(H, W, 3) census strings of view (s, t)."""
        return self.bits[s, t]


def census_image(image, pattern):
    """Census transform of one image, edge-clamped at the borders. Returns (H, W, C) uint64."""
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[..., None]
    height, width = image.shape[:2]
    r = pattern.radius
    padded = np.pad(image, ((r, r), (r, r), (0, 0)), mode="edge")

    bits = np.zeros(image.shape, dtype=np.uint64)
    for k, (i, j) in enumerate(pattern.offsets):
        neighbour = padded[r + j:r + j + height, r + i:r + i + width]
        bits |= (image > neighbour).astype(np.uint64) << np.uint64(k)
    return bits


def census_transform(lf, pattern):
    """Census transform of every view and channel of a light field."""
    bits = np.empty(lf.views.shape, dtype=np.uint64)
    for s in range(lf.S):
        for t in range(lf.T):
            bits[s, t] = census_image(lf.view(s, t), pattern)
    return CensusField(bits, pattern.width, lf.ref_s, lf.ref_t)


def hamming(a, b):
    """
    Number of differing bits.

    Accepts '0101'-style strings (widths must match) or unsigned integers /
    arrays of them.
    """
    if isinstance(a, str) or isinstance(b, str):
        if len(a) != len(b):
            raise ValueError(f"bit string widths differ: {len(a)} vs {len(b)}")
        return sum(x != y for x, y in zip(a, b))
    xor = np.bitwise_xor(np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64))
    count = np.bitwise_count(xor)
    if count.ndim == 0:
        return int(count)
    return count.astype(np.int64)


def rgb_hamming(a, b):
    """Sum over the channel axis of per-channel Hamming distances."""
    return hamming(a, b).sum(axis=-1)


def rgb_census_distance(cf, view_a, p_a, view_b, p_b):
    """Census distance between pixel p_a=(u, v) of view_a and p_b of view_b."""
    (sa, ta), (ua, va) = view_a, p_a
    (sb, tb), (ub, vb) = view_b, p_b
    return int(rgb_hamming(cf.bits[sa, ta, va, ua], cf.bits[sb, tb, vb, ub]))
