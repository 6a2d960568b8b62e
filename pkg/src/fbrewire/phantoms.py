"""Synthetic test images with known ground truth."""
from __future__ import annotations

import numpy as np


def piecewise_constant(size: int = 64) -> np.ndarray:
    """Background with a rectangle, a disk and a triangle at distinct levels.

    Edges are placed off the even lattice so subsampling cannot be exact.
    """
    r, c = np.mgrid[0:size, 0:size] / size
    im = np.full((size, size), 60.0)
    im[(r >= 0.14) & (r < 0.47) & (c >= 0.11) & (c < 0.58)] = 180.0
    im[(r - 0.68) ** 2 + (c - 0.66) ** 2 < 0.22 ** 2] = 120.0
    im[(r > 0.55) & (c > 0.08) & (c - 0.08 < (r - 0.55) * 0.9)] = 220.0
    return im


def constant(value: float = 100.0, size: int = 64) -> np.ndarray:
    return np.full((size, size), float(value))


def constant_regions(size: int = 64, margin: int = 2) -> list:
    """Boolean masks of the phantom's flat areas, eroded by ``margin`` pixels."""
    im = piecewise_constant(size)
    masks = []
    for level in np.unique(im):
        m = im == level
        eroded = m.copy()
        for dr in range(-margin, margin + 1):
            for dc in range(-margin, margin + 1):
                eroded &= np.roll(np.roll(m, dr, 0), dc, 1)
        if eroded.any():
            masks.append(eroded)
    return masks
