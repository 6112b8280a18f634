"""Image ingestion: binary PPM (P6) parsing/writing and the pixel dataset."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PpmParseError
from .model import pixel_center_coords
from .tensor import Array


def load_ppm(path) -> Array:
    """Read an 8-bit binary PPM (P6, maxval 255) into a (height, width, 3) uint8 array."""
    data = Path(path).read_bytes()
    pos = 0

    def skip_separators(pos: int, context: str) -> int:
        # whitespace and '#'-to-end-of-line comments may separate header tokens
        while pos < len(data):
            c = data[pos : pos + 1]
            if c.isspace():
                pos += 1
            elif c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                return pos
        raise PpmParseError(f"unexpected end of header while looking for {context}", pos)

    def read_int(pos: int, context: str) -> tuple[int, int]:
        pos = skip_separators(pos, context)
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise PpmParseError(f"expected an integer for {context}", pos)
        return int(data[start:pos]), pos

    if data[:2] != b"P6":
        raise PpmParseError("not a binary PPM: missing P6 magic", 0)
    pos = 2
    width, pos = read_int(pos, "width")
    height, pos = read_int(pos, "height")
    maxval, pos = read_int(pos, "max value")
    if width <= 0 or height <= 0:
        raise PpmParseError(f"degenerate image dimensions {width}x{height}", pos)
    if maxval != 255:
        raise PpmParseError(f"only 8-bit images (max value 255) are supported, got {maxval}", pos)
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PpmParseError("expected a single whitespace byte after the max value", pos)
    pos += 1
    expected = width * height * 3
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise PpmParseError(
            f"truncated pixel payload: expected {expected} bytes, found {len(payload)}",
            pos + len(payload),
        )
    if len(data) > pos + expected:
        raise PpmParseError(f"{len(data) - pos - expected} trailing bytes after pixel payload", pos + expected)
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)


def save_ppm(path, image: Array) -> None:
    """Write an image as binary PPM. Float images are clipped to [0, 1] and quantized."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected a (height, width, 3) image, got {image.shape}")
    if image.dtype != np.uint8:
        image = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = image.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())


@dataclass
class PixelDataset:
    """(coordinate, color) supervision pairs covering one image.

    Coordinates are pixel centers mapped to [-1, 1]^2 in row-major order,
    colors are in [0, 1]^3, so ``colors.reshape(height, width, 3)``
    recovers the source image.
    """

    width: int
    height: int
    coords: Array  # (n, 2) float64
    colors: Array  # (n, 3) float64

    def __post_init__(self):
        n = self.width * self.height
        if self.coords.shape != (n, 2) or self.colors.shape != (n, 3):
            raise ValueError(
                f"expected {n} samples for a {self.width}x{self.height} image, "
                f"got coords {self.coords.shape} and colors {self.colors.shape}"
            )
        if self.colors.size and (self.colors.min() < 0.0 or self.colors.max() > 1.0):
            raise ValueError("colors must lie in [0, 1]")

    def __len__(self) -> int:
        return self.coords.shape[0]

    def image(self) -> Array:
        """The supervision colors reshaped back into a (height, width, 3) image."""
        return self.colors.reshape(self.height, self.width, 3)

    @classmethod
    def from_image(cls, image: Array) -> "PixelDataset":
        image = np.asarray(image)
        if image.dtype == np.uint8:
            image = image.astype(np.float64) / 255.0
        height, width = image.shape[:2]
        return cls(
            width=width,
            height=height,
            coords=pixel_center_coords(width, height),
            colors=image.reshape(-1, 3).astype(np.float64),
        )


def load_image_dataset(path) -> PixelDataset:
    """PPM file -> PixelDataset with normalized coordinates and colors."""
    return PixelDataset.from_image(load_ppm(path))
