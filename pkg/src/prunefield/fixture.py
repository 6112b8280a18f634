"""Deterministic synthetic test image.

A 64x64 scene with smooth color gradients, two disks, a sharp-edged
square, and a diagonal stripe band: enough low-frequency structure to fit
quickly and enough high-frequency content that careless pruning shows up
in the reconstruction error.
"""

from __future__ import annotations

import numpy as np

from .dataset import save_ppm


def fixture_image(size: int = 64) -> np.ndarray:
    xs = (np.arange(size) + 0.5) / size
    gx, gy = np.meshgrid(xs, xs)

    r = 0.25 + 0.50 * gx
    g = 0.30 + 0.40 * gy
    b = 0.65 - 0.30 * gx + 0.15 * gy

    def soft_disk(cx, cy, radius, sharpness=40.0):
        d = np.sqrt((gx - cx) ** 2 + (gy - cy) ** 2)
        return 1.0 / (1.0 + np.exp(sharpness * (d - radius)))

    disk1 = soft_disk(0.34, 0.38, 0.20)
    disk2 = soft_disk(0.72, 0.28, 0.12)
    r = r * (1 - disk1) + 0.88 * disk1
    g = g * (1 - disk1) + 0.22 * disk1
    b = b * (1 - disk1) + 0.18 * disk1
    r = r * (1 - disk2) + 0.12 * disk2
    g = g * (1 - disk2) + 0.68 * disk2
    b = b * (1 - disk2) + 0.90 * disk2

    square = ((gx > 0.12) & (gx < 0.28) & (gy > 0.68) & (gy < 0.84)).astype(np.float64)
    r = r * (1 - square) + 0.95 * square
    g = g * (1 - square) + 0.88 * square
    b = b * (1 - square) + 0.25 * square

    band = ((gx + gy > 1.18) & (gx + gy < 1.62)).astype(np.float64)
    stripes = 0.5 + 0.5 * np.sin(2.0 * np.pi * 5.0 * (gx - gy))
    r = r * (1 - band) + (0.15 + 0.7 * stripes) * band
    g = g * (1 - band) + (0.15 + 0.5 * stripes) * band
    b = b * (1 - band) + (0.35 + 0.3 * (1 - stripes)) * band

    return np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)


def write_fixture(path, size: int = 64) -> None:
    """Write the synthetic scene as a binary PPM."""
    save_ppm(path, fixture_image(size))
