"""Canonical 70x60 face preparation: PGM I/O, eye alignment, equalization.

The canonical output frame is 70 rows by 60 columns with both eyes on
row 24 at columns 18 and 41 (inter-eye distance 23 px, midpoint centered
horizontally).  These constants are fixed and test-pinned.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

CANONICAL_HEIGHT = 70
CANONICAL_WIDTH = 60
EYE_ROW = 24
LEFT_EYE_COL = 18
RIGHT_EYE_COL = 41


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An 8-bit grayscale image; pixels are a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _as_image(img: "GrayImage | np.ndarray") -> GrayImage:
    """Accept either a GrayImage or a raw pixel array."""
    if isinstance(img, GrayImage):
        return img
    return GrayImage(pixels=img)


def read_pgm(path: str | Path) -> GrayImage:
    """Read a binary PGM (P5, maxval <= 255) file.

    Header tokens may be separated by any whitespace and '#' comments.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"image not found: {path}")
    data = path.read_bytes()

    pos = 0
    tokens = []
    while len(tokens) < 4:
        if pos >= len(data):
            raise DataError(f"{path}: truncated PGM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval, then raw payload

    magic = tokens[0].decode("ascii", "replace")
    if magic != "P5":
        raise DataError(f"{path}: unsupported magic {magic!r} (binary P5 required)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise DataError(f"{path}: non-numeric PGM header fields") from None
    if maxval > 255 or maxval < 1:
        raise DataError(f"{path}: maxval {maxval} unsupported (need 1..255)")
    if width < 1 or height < 1:
        raise DataError(f"{path}: bad dimensions {width}x{height}")
    payload = data[pos : pos + width * height]
    if len(payload) < width * height:
        raise DataError(
            f"{path}: truncated payload ({len(payload)} of {width * height} bytes)"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels=pixels.copy())


def write_pgm(img: "GrayImage | np.ndarray", path: str | Path) -> None:
    """Write a binary PGM (P5) file; read_pgm(write_pgm(img)) is lossless."""
    img = _as_image(img)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def align_crop_resize(
    img: "GrayImage | np.ndarray",
    eye_left: tuple[float, float],
    eye_right: tuple[float, float],
) -> GrayImage:
    """Map a face onto the canonical 70x60 frame by a similarity transform.

    The transform carries the given (row, col) eye positions onto the
    canonical ones, so the inter-eye segment becomes horizontal with the
    canonical length and midpoint.  Resampling is bilinear; samples
    falling outside the source take value 0.  When the eyes already sit
    at the canonical positions of a 70x60 input the transform is the
    identity and the output equals the input exactly.
    """
    img = _as_image(img)
    lr, lc = float(eye_left[0]), float(eye_left[1])
    rr, rc = float(eye_right[0]), float(eye_right[1])
    if (lr, lc) == (rr, rc):
        raise ValueError("eye coordinates are coincident")
    dist = np.hypot(rr - lr, rc - lc)
    if round(dist) == 0:
        raise ValueError("inter-eye distance rounds to zero")

    # Similarity z -> alpha*z + beta (complex plane, x=col, y=row) taking the
    # canonical eye pair onto the source eye pair; sampling then pulls back.
    src_l = complex(lc, lr)
    src_r = complex(rc, rr)
    can_l = complex(LEFT_EYE_COL, EYE_ROW)
    can_r = complex(RIGHT_EYE_COL, EYE_ROW)
    alpha = (src_r - src_l) / (can_r - can_l)
    beta = src_l - alpha * can_l

    if (
        alpha == 1
        and beta == 0
        and img.pixels.shape == (CANONICAL_HEIGHT, CANONICAL_WIDTH)
    ):
        return GrayImage(pixels=img.pixels.copy())

    out_rows, out_cols = np.meshgrid(
        np.arange(CANONICAL_HEIGHT, dtype=np.float64),
        np.arange(CANONICAL_WIDTH, dtype=np.float64),
        indexing="ij",
    )
    src_x = alpha.real * out_cols - alpha.imag * out_rows + beta.real
    src_y = alpha.imag * out_cols + alpha.real * out_rows + beta.imag

    x0 = np.floor(src_x)
    y0 = np.floor(src_y)
    fx = src_x - x0
    fy = src_y - y0

    h, w = img.pixels.shape
    pix = img.pixels.astype(np.float64)
    acc = np.zeros_like(src_x)
    for dy, dx, weight in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = (y0 + dy).astype(np.int64)
        xx = (x0 + dx).astype(np.int64)
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        acc += weight * np.where(valid, pix[yy.clip(0, h - 1), xx.clip(0, w - 1)], 0.0)
    out = np.clip(np.floor(acc + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(pixels=out)


def histogram_equalize(img: GrayImage) -> GrayImage:
    """Spread pixel levels by the standard CDF mapping.

    Level v maps to round((cdf(v) - cdf_min) / (N - cdf_min) * 255) where
    N is the pixel count and cdf_min the smallest nonzero CDF value.  A
    constant image is returned unchanged (the mapping is 0/0 there).
    Monotone in the input level and idempotent up to one level of
    rounding.
    """
    img = _as_image(img)
    counts = np.bincount(img.pixels.ravel(), minlength=256)
    cdf = np.cumsum(counts)
    n = img.pixels.size
    cdf_min = int(cdf[counts.nonzero()[0][0]])
    if n == cdf_min:
        return GrayImage(pixels=img.pixels.copy())
    lut = np.floor((cdf - cdf_min) / (n - cdf_min) * 255.0 + 0.5)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return GrayImage(pixels=lut[img.pixels])


def to_feature_vector(img: "GrayImage | np.ndarray") -> np.ndarray:
    """Row-major flattening of a canonical 70x60 image to 4200 floats."""
    img = _as_image(img)
    if img.pixels.shape != (CANONICAL_HEIGHT, CANONICAL_WIDTH):
        raise ValueError(
            f"expected {CANONICAL_HEIGHT}x{CANONICAL_WIDTH} image, "
            f"got {img.height}x{img.width}"
        )
    return img.pixels.astype(np.float64).ravel()
