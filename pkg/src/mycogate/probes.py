"""Observers for a running simulation.

Virtual electrodes sum (u - v) over a small disc of conductive nodes; network
activity counts nodes with u above 0.1; coverage remembers every node that
ever crossed that threshold; snapshots render the field over the mask.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import FhnState, SimView
from .template import ConductiveGrid

ACTIVITY_THRESHOLD = 0.1
SNAPSHOT_THRESHOLD = 0.04


@dataclass(frozen=True)
class Electrode:
    """A recording site: disc of conductive nodes within `radius` of (x, y)."""

    id: int
    x: int
    y: int
    radius: float = 2.0


@dataclass(frozen=True)
class Palette:
    background: tuple[int, int, int] = (0, 0, 0)
    substrate: tuple[int, int, int] = (110, 110, 110)
    excited: tuple[int, int, int] = (255, 64, 32)
    covered: tuple[int, int, int] = (220, 32, 32)
    uncovered: tuple[int, int, int] = (128, 128, 128)


DEFAULT_PALETTE = Palette()


def disc_nodes(grid: ConductiveGrid, e: Electrode) -> tuple[np.ndarray, np.ndarray]:
    """Conductive nodes strictly within the electrode radius, row-major order."""
    r = int(np.ceil(e.radius))
    y0, y1 = max(e.y - r, 0), min(e.y + r + 1, grid.height)
    x0, x1 = max(e.x - r, 0), min(e.x + r + 1, grid.width)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    within = ((yy - e.y) ** 2 + (xx - e.x) ** 2) < e.radius**2
    hit = within & grid.mask[y0:y1, x0:x1]
    return yy[hit], xx[hit]


def electrode_potential(state: FhnState, grid: ConductiveGrid, e: Electrode) -> float:
    rows, cols = disc_nodes(grid, e)
    if rows.size == 0:
        return 0.0
    return float(np.sum(state.u[rows, cols] - state.v[rows, cols]))


def activity(state: FhnState, grid: ConductiveGrid) -> int:
    """Number of conductive nodes with u strictly above the activity threshold."""
    return int(np.count_nonzero(grid.mask & (state.u > ACTIVITY_THRESHOLD)))


def update_coverage(cov: np.ndarray, state: FhnState) -> np.ndarray:
    """Pointwise OR of the coverage map with (u > threshold)."""
    return cov | (state.u > ACTIVITY_THRESHOLD)


def render_snapshot(
    state: FhnState,
    grid: ConductiveGrid,
    threshold: float = SNAPSHOT_THRESHOLD,
    palette: Palette = DEFAULT_PALETTE,
) -> np.ndarray:
    """RGB raster: background, substrate, and excitation where u > threshold."""
    img = np.empty((*grid.mask.shape, 3), dtype=np.uint8)
    img[:] = palette.background
    img[grid.mask] = palette.substrate
    img[grid.mask & (state.u > threshold)] = palette.excited
    return img


def render_coverage(
    cov: np.ndarray, grid: ConductiveGrid, palette: Palette = DEFAULT_PALETTE
) -> np.ndarray:
    """RGB raster: covered nodes red, conductive-but-never-covered gray."""
    img = np.empty((*grid.mask.shape, 3), dtype=np.uint8)
    img[:] = palette.background
    img[grid.mask] = palette.uncovered
    img[grid.mask & cov] = palette.covered
    return img


class TraceProbe:
    """Samples the potential of each electrode every `cadence` iterations."""

    def __init__(self, electrodes, cadence: int = 1):
        self.electrodes = tuple(electrodes)
        self.cadence = cadence
        self.steps: list[int] = []
        self._samples: list[list[float]] = [[] for _ in self.electrodes]
        self._indices: list[np.ndarray] = []

    def attach(self, view: SimView) -> None:
        self._indices = []
        for e in self.electrodes:
            rows, cols = disc_nodes(view.grid, e)
            if rows.size == 0:
                raise ValueError(
                    f"electrode {e.id} at ({e.x}, {e.y}) touches no conductive node"
                )
            self._indices.append(view.compact_of(rows, cols))

    def sample(self, view: SimView) -> None:
        self.steps.append(view.t)
        u, v = view.u, view.v
        for buf, idx in zip(self._samples, self._indices):
            buf.append(float(np.sum(u[idx] - v[idx])))

    def values(self) -> np.ndarray:
        """(n_electrodes, n_samples) array of potentials."""
        return np.asarray(self._samples)

    def trace(self, electrode_id: int) -> "Trace":
        for e, buf in zip(self.electrodes, self._samples):
            if e.id == electrode_id:
                return Trace(electrode=e.id, cadence=self.cadence,
                             samples=np.asarray(buf))
        raise KeyError(f"no electrode with id {electrode_id}")


@dataclass(frozen=True)
class Trace:
    """Potential samples of one electrode; sample i is iteration i * cadence."""

    electrode: int
    cadence: int
    samples: np.ndarray


class ActivityProbe:
    def __init__(self, cadence: int = 1):
        self.cadence = cadence
        self.steps: list[int] = []
        self.counts: list[int] = []

    def attach(self, view: SimView) -> None:
        pass

    def sample(self, view: SimView) -> None:
        self.steps.append(view.t)
        self.counts.append(int(np.count_nonzero(view.u > ACTIVITY_THRESHOLD)))


class SnapshotProbe:
    """Renders the field every `cadence` iterations.

    With a sink callback the frames go straight to it as (t, rgb) and nothing
    is retained; otherwise they accumulate on .frames.
    """

    def __init__(self, cadence: int = 100, sink=None, threshold: float = SNAPSHOT_THRESHOLD,
                 palette: Palette = DEFAULT_PALETTE):
        self.cadence = cadence
        self.sink = sink
        self.threshold = threshold
        self.palette = palette
        self.frames: list[tuple[int, np.ndarray]] = []
        self._grid: ConductiveGrid | None = None

    def attach(self, view: SimView) -> None:
        self._grid = view.grid

    def sample(self, view: SimView) -> None:
        state = FhnState(u=view.full_u(), v=view.full_v(), t=view.t)
        rgb = render_snapshot(state, self._grid, self.threshold, self.palette)
        if self.sink is not None:
            self.sink(view.t, rgb)
        else:
            self.frames.append((view.t, rgb))


def write_traces_csv(path: str | Path, probe: TraceProbe) -> None:
    """CSV with header step,e<id>,... and one row per sample."""
    values = probe.values()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step"] + [f"e{e.id}" for e in probe.electrodes])
        for j, t in enumerate(probe.steps):
            writer.writerow([t] + [repr(float(values[i, j])) for i in range(values.shape[0])])


def write_activity_csv(path: str | Path, probe: ActivityProbe) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "activity"])
        for t, c in zip(probe.steps, probe.counts):
            writer.writerow([t, c])
