"""Image-to-grid template pipeline.

A colony photograph becomes the substrate for the simulation in three steps:
threshold the green mycelium pixels, thicken them with one morphological
dilation pass, and count each node's conductive neighbors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .images import RgbImage, load_image, read_mask_pgm, write_mask_pgm

__all__ = [
    "ConductiveGrid",
    "binarize",
    "dilate",
    "neighbor_counts",
    "k_histogram",
    "build_grid",
    "load_image",
    "read_mask_pgm",
    "write_mask_pgm",
    "write_k_histogram_csv",
]

# Offsets of the two supported neighborhoods, in row-major scan order.
_VON_NEUMANN = ((-1, 0), (1, 0), (0, -1), (0, 1))
_MOORE = tuple(
    (dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)
)


def _offsets(neighborhood: str):
    if neighborhood == "von_neumann":
        return _VON_NEUMANN
    if neighborhood == "moore":
        return _MOORE
    raise ValueError(f"unknown neighborhood {neighborhood!r}")


def binarize(img: RgbImage, *, r_max: int = 20, g_min: int = 40, b_max: int = 20) -> np.ndarray:
    """Threshold mycelium pixels: r < r_max and g > g_min and b < b_max.

    All comparisons are strict.
    """
    px = img.pixels
    return (px[:, :, 0] < r_max) & (px[:, :, 1] > g_min) & (px[:, :, 2] < b_max)


def dilate(mask: np.ndarray, neighborhood: str = "moore") -> np.ndarray:
    """One binary dilation pass; out-of-bounds neighbors are clipped."""
    out = mask.copy()
    h, w = mask.shape
    for dr, dc in _offsets(neighborhood):
        src = mask[max(dr, 0) : h + min(dr, 0), max(dc, 0) : w + min(dc, 0)]
        out[max(-dr, 0) : h + min(-dr, 0), max(-dc, 0) : w + min(-dc, 0)] |= src
    return out


def neighbor_counts(mask: np.ndarray, neighborhood: str = "von_neumann") -> np.ndarray:
    """Per-node count of conductive neighbors, stored 0 at non-conductive nodes."""
    h, w = mask.shape
    k = np.zeros((h, w), dtype=np.uint8)
    for dr, dc in _offsets(neighborhood):
        src = mask[max(dr, 0) : h + min(dr, 0), max(dc, 0) : w + min(dc, 0)]
        k[max(-dr, 0) : h + min(-dr, 0), max(-dc, 0) : w + min(-dc, 0)] += src
    k[~mask] = 0
    return k


@dataclass(frozen=True)
class ConductiveGrid:
    """Binary conductivity mask plus per-node conductive-neighbor count."""

    mask: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        if self.mask.ndim != 2 or self.mask.dtype != np.bool_:
            raise ValueError("mask must be a 2-d boolean array")
        if self.k.shape != self.mask.shape:
            raise ValueError("k and mask shapes differ")

    @classmethod
    def from_mask(cls, mask: np.ndarray, neighborhood: str = "von_neumann") -> "ConductiveGrid":
        return cls(mask=mask, k=neighbor_counts(mask, neighborhood))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def n_conductive(self) -> int:
        return int(self.mask.sum())

    def bounding_box(self) -> tuple[int, int, int, int]:
        """(x0, y0, x1, y1) inclusive bounds of the conductive region."""
        rows, cols = np.nonzero(self.mask)
        if rows.size == 0:
            raise ValueError("grid has no conductive nodes")
        return int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max())


def k_histogram(grid: ConductiveGrid) -> dict[int, int]:
    """Node count per neighbor count, over conductive nodes only."""
    values, counts = np.unique(grid.k[grid.mask], return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def build_grid(
    img: RgbImage,
    *,
    dilation_passes: int = 1,
    dilation_neighborhood: str = "moore",
    count_neighborhood: str = "von_neumann",
) -> ConductiveGrid:
    """Run the full template pipeline on a colony image."""
    mask = binarize(img)
    for _ in range(dilation_passes):
        mask = dilate(mask, dilation_neighborhood)
    return ConductiveGrid.from_mask(mask, count_neighborhood)


def write_k_histogram_csv(path: str | Path, hist: dict[int, int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "count"])
        for k in sorted(hist):
            writer.writerow([k, hist[k]])
