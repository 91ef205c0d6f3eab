"""Explicit-Euler FitzHugh-Nagumo integration on a conductive grid.

Two interchangeable paths compute the same update, bit for bit: `step` is the
plain-numpy reference used by tests and small experiments, and `run` drives a
compiled gather/scatter kernel over the conductive nodes only, which is what
makes colony-scale sweeps practical.

The Laplacian treats missing or non-conductive neighbors by one of two rules:

* ``absorbing`` (default): absent neighbors contribute 0 to the neighbor sum
  while the center keeps its full -4 coefficient, so poorly connected nodes
  leak current and are effectively less excitable.
* ``no_flux``: the center coefficient equals the number of present neighbors,
  which makes every mask edge (and the outer boundary) a zero-flux wall.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import DivergenceError
from .template import ConductiveGrid

RULE_ABSORBING = "absorbing"
RULE_NO_FLUX = "no_flux"

_CHECKPOINT_MAGIC = b"MYCOCKPT"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class FhnParams:
    """Integration constants. c2 is the swept excitability control."""

    c2: float
    dt: float = 0.015
    dx: float = 2.0
    du: float = 1.0
    a: float = 0.13
    b: float = 0.013
    c1: float = 0.26
    laplacian_rule: str = RULE_ABSORBING

    def __post_init__(self):
        if not (self.dt > 0 and self.dx > 0 and self.du >= 0):
            raise ValueError("require dt > 0, dx > 0, du >= 0")
        if not (0 < self.a < 1):
            raise ValueError("require 0 < a < 1")
        if self.c2 < 0:
            raise ValueError("require c2 >= 0")
        if self.laplacian_rule not in (RULE_ABSORBING, RULE_NO_FLUX):
            raise ValueError(f"unknown laplacian rule {self.laplacian_rule!r}")


@dataclass
class FhnState:
    """Trans-membrane potential u, recovery v, and the iteration counter."""

    u: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def rest(cls, grid: ConductiveGrid) -> "FhnState":
        shape = grid.mask.shape
        return cls(u=np.zeros(shape), v=np.zeros(shape), t=0)

    def copy(self) -> "FhnState":
        return FhnState(u=self.u.copy(), v=self.v.copy(), t=self.t)


@dataclass(frozen=True)
class Stimulus:
    """Additive current at fixed loci over the window [onset, onset + duration).

    loci is an (n, 2) array of (row, col) node coordinates; duplicates are
    collapsed so each node receives the amplitude once per stimulus.
    """

    loci: np.ndarray
    amplitude: float
    onset: int = 100
    duration: int = 100

    def __post_init__(self):
        loci = np.atleast_2d(np.asarray(self.loci, dtype=np.intp))
        if loci.ndim != 2 or loci.shape[1] != 2:
            raise ValueError("loci must be an (n, 2) array of (row, col) pairs")
        loci = np.unique(loci, axis=0)
        object.__setattr__(self, "loci", loci)
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.duration < 1:
            raise ValueError("duration must be at least 1")
        if self.onset < 0:
            raise ValueError("onset must be non-negative")

    def active_at(self, t: int) -> bool:
        return self.onset <= t < self.onset + self.duration

    def validate_on(self, grid: ConductiveGrid) -> None:
        rows, cols = self.loci[:, 0], self.loci[:, 1]
        if rows.size == 0:
            raise ValueError("stimulus has no loci")
        inside = (
            (rows >= 0) & (rows < grid.height) & (cols >= 0) & (cols < grid.width)
        )
        if not inside.all() or not grid.mask[rows, cols].all():
            raise ValueError("stimulus loci must all be conductive grid nodes")


def _center_coeff(grid: ConductiveGrid, rule: str) -> np.ndarray:
    if rule == RULE_ABSORBING:
        return np.full(grid.mask.shape, 4.0)
    if rule == RULE_NO_FLUX:
        return grid.k.astype(np.float64)
    raise ValueError(f"unknown laplacian rule {rule!r}")


def _neighbor_sum(masked: np.ndarray) -> np.ndarray:
    """Sum of the four orthogonal neighbors with zero fill outside the array.

    Term order (up + down) + left + right matches the compiled kernel so both
    paths round identically.
    """
    h, w = masked.shape
    up = np.zeros_like(masked)
    up[1:, :] = masked[:-1, :]
    down = np.zeros_like(masked)
    down[:-1, :] = masked[1:, :]
    left = np.zeros_like(masked)
    left[:, 1:] = masked[:, :-1]
    right = np.zeros_like(masked)
    right[:, :-1] = masked[:, 1:]
    return ((up + down) + left) + right


def laplacian(
    u: np.ndarray, grid: ConductiveGrid, dx: float = 2.0, rule: str = RULE_ABSORBING
) -> np.ndarray:
    """Five-node Laplacian over conductive nodes; 0 at non-conductive nodes."""
    masked = np.where(grid.mask, u, 0.0)
    s = _neighbor_sum(masked)
    inv_dx2 = 1.0 / (dx * dx)
    out = (s - _center_coeff(grid, rule) * u) * inv_dx2
    return np.where(grid.mask, out, 0.0)


def _current_field(grid: ConductiveGrid, stimuli, t: int) -> np.ndarray:
    cur = np.zeros(grid.mask.shape)
    for stim in stimuli:
        if stim.active_at(t):
            cur[stim.loci[:, 0], stim.loci[:, 1]] += stim.amplitude
    return cur


def step(
    state: FhnState,
    grid: ConductiveGrid,
    params: FhnParams,
    stimuli=(),
) -> FhnState:
    """One explicit-Euler update; returns a new state with t advanced by one."""
    mask = grid.mask
    u = np.where(mask, state.u, 0.0)
    v = np.where(mask, state.v, 0.0)
    s = _neighbor_sum(u)
    inv_dx2 = 1.0 / (params.dx * params.dx)
    lap = (s - _center_coeff(grid, params.laplacian_rule) * u) * inv_dx2
    cur = _current_field(grid, stimuli, state.t)
    with np.errstate(over="ignore", invalid="ignore"):
        # Overflow to inf/nan is caught by the divergence guard below.
        rhs = (
            params.c1 * u * (u - params.a) * (1.0 - u)
            - params.c2 * u * v
            + cur
            + params.du * lap
        )
        un = u + params.dt * rhs
        vn = v + params.dt * (params.b * (u - v))
    un = np.where(mask, un, 0.0)
    vn = np.where(mask, vn, 0.0)
    t_next = state.t + 1
    _check_finite(un, vn, mask, t_next)
    return FhnState(u=un, v=vn, t=t_next)


def _check_finite(u: np.ndarray, v: np.ndarray, mask: np.ndarray, t: int) -> None:
    for name, arr in (("u", u), ("v", v)):
        bad = ~np.isfinite(arr) & mask
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise DivergenceError(step=t, node=(int(col), int(row)), field=name)


# --- compiled fast path ------------------------------------------------------


@njit(cache=True, nogil=True)
def _step_kernel(u, v, un, vn, cov, nup, ndn, nlf, nrt, cc, cur,
                 dt, inv_dx2, du_coef, a, b, c1, c2):
    n = cc.shape[0]
    for i in range(n):
        ui = u[i]
        vi = v[i]
        s = u[nup[i]] + u[ndn[i]] + u[nlf[i]] + u[nrt[i]]
        lap = (s - cc[i] * ui) * inv_dx2
        rhs = c1 * ui * (ui - a) * (1.0 - ui) - c2 * ui * vi + cur[i] + du_coef * lap
        nu = ui + dt * rhs
        un[i] = nu
        vn[i] = vi + dt * (b * (ui - vi))
        if nu > 0.1:
            cov[i] = 1


class CompiledGrid:
    """Compact per-conductive-node index arrays for the gather kernel.

    Conductive nodes are numbered in row-major order; index n is a ghost slot
    whose u value is pinned at 0, standing in for every absent neighbor.
    """

    def __init__(self, grid: ConductiveGrid, rule: str = RULE_ABSORBING):
        self.grid = grid
        self.rule = rule
        mask = grid.mask
        h, w = mask.shape
        self.n = int(mask.sum())
        self.rows, self.cols = np.nonzero(mask)
        index = np.full((h, w), self.n, dtype=np.int64)
        index[self.rows, self.cols] = np.arange(self.n)
        self.index = index
        self.nup = self._neighbor(index, -1, 0)
        self.ndn = self._neighbor(index, 1, 0)
        self.nlf = self._neighbor(index, 0, -1)
        self.nrt = self._neighbor(index, 0, 1)
        if rule == RULE_ABSORBING:
            self.cc = np.full(self.n, 4.0)
        elif rule == RULE_NO_FLUX:
            self.cc = grid.k[self.rows, self.cols].astype(np.float64)
        else:
            raise ValueError(f"unknown laplacian rule {rule!r}")

    def _neighbor(self, index: np.ndarray, dr: int, dc: int) -> np.ndarray:
        h, w = index.shape
        rr = self.rows + dr
        cc = self.cols + dc
        out = np.full(self.n, self.n, dtype=np.int64)
        ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        out[ok] = index[rr[ok], cc[ok]]
        return out

    def gather(self, full: np.ndarray) -> np.ndarray:
        """Full-grid field -> compact vector with the trailing ghost slot."""
        out = np.zeros(self.n + 1)
        out[: self.n] = full[self.rows, self.cols]
        return out

    def scatter(self, compact: np.ndarray) -> np.ndarray:
        full = np.zeros(self.grid.mask.shape)
        full[self.rows, self.cols] = compact[: self.n]
        return full

    def compact_of(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        idx = self.index[rows, cols]
        if (idx >= self.n).any():
            raise ValueError("coordinates include non-conductive nodes")
        return idx


class SimView:
    """Read-only window onto the running simulation, handed to probes."""

    def __init__(self, compiled: CompiledGrid):
        self._c = compiled
        self.grid = compiled.grid
        self.t = 0
        self._u = np.zeros(compiled.n)
        self._v = np.zeros(compiled.n)

    @property
    def u(self) -> np.ndarray:
        """Compact u over conductive nodes, row-major."""
        return self._u

    @property
    def v(self) -> np.ndarray:
        return self._v

    def compact_of(self, rows, cols) -> np.ndarray:
        return self._c.compact_of(np.asarray(rows), np.asarray(cols))

    def full_u(self) -> np.ndarray:
        return self._c.scatter(np.append(self._u, 0.0))

    def full_v(self) -> np.ndarray:
        return self._c.scatter(np.append(self._v, 0.0))

    def _update(self, u: np.ndarray, v: np.ndarray, t: int) -> None:
        self._u = u
        self._v = v
        self.t = t


@dataclass
class RunResult:
    final: FhnState
    coverage: np.ndarray
    probes: tuple


def run(
    grid: ConductiveGrid,
    params: FhnParams,
    stimuli=(),
    probes=(),
    steps: int = 1,
    initial: FhnState | None = None,
) -> RunResult:
    """Integrate `steps` iterations, sampling probes at their cadences.

    Starts at rest unless an initial state is given. Probes are sampled at
    every iteration t (including the starting one) with t divisible by the
    probe's cadence, so sample i of a probe corresponds to iteration
    i * cadence when starting from t = 0. Raises DivergenceError if any field
    value becomes non-finite; the result is bit-reproducible for identical
    inputs regardless of how concurrent callers schedule independent runs.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    for probe in probes:
        if getattr(probe, "cadence", 1) < 1:
            raise ValueError("probe cadence must be at least 1")
    for stim in stimuli:
        stim.validate_on(grid)

    compiled = CompiledGrid(grid, params.laplacian_rule)
    n = compiled.n

    if initial is None:
        initial = FhnState.rest(grid)
    _check_finite(initial.u, initial.v, grid.mask, initial.t)
    u = compiled.gather(initial.u)
    v = compiled.gather(initial.v)
    un = np.zeros(n + 1)
    vn = np.zeros(n + 1)
    cov = (u[:n] > 0.1).astype(np.uint8)

    view = SimView(compiled)
    view._update(u[:n], v[:n], initial.t)
    for probe in probes:
        probe.attach(view)

    t = initial.t
    for probe in probes:
        if t % probe.cadence == 0:
            probe.sample(view)

    # Stimulus currents change only at window edges; rebuild lazily.
    cur = np.zeros(n + 1)
    boundaries = set()
    for stim in stimuli:
        boundaries.add(stim.onset)
        boundaries.add(stim.onset + stim.duration)
    _rebuild_current(cur, compiled, stimuli, t)

    dt = params.dt
    inv_dx2 = 1.0 / (params.dx * params.dx)
    args = (params.du, params.a, params.b, params.c1, params.c2)

    for _ in range(steps):
        if t in boundaries:
            _rebuild_current(cur, compiled, stimuli, t)
        _step_kernel(
            u, v, un, vn, cov,
            compiled.nup, compiled.ndn, compiled.nlf, compiled.nrt,
            compiled.cc, cur, dt, inv_dx2, *args,
        )
        u, un = un, u
        v, vn = vn, v
        t += 1
        if not np.isfinite(u[:n]).all() or not np.isfinite(v[:n]).all():
            full_u = compiled.scatter(u)
            full_v = compiled.scatter(v)
            _check_finite(full_u, full_v, grid.mask, t)
        view._update(u[:n], v[:n], t)
        for probe in probes:
            if t % probe.cadence == 0:
                probe.sample(view)

    final = FhnState(u=compiled.scatter(u), v=compiled.scatter(v), t=t)
    coverage = np.zeros(grid.mask.shape, dtype=bool)
    coverage[compiled.rows, compiled.cols] = cov.astype(bool)
    return RunResult(final=final, coverage=coverage, probes=tuple(probes))


def _rebuild_current(cur: np.ndarray, compiled: CompiledGrid, stimuli, t: int) -> None:
    cur[:] = 0.0
    for stim in stimuli:
        if stim.active_at(t):
            idx = compiled.compact_of(stim.loci[:, 0], stim.loci[:, 1])
            cur[idx] += stim.amplitude


# --- checkpoints --------------------------------------------------------------

_HEADER = struct.Struct("<8sIB3xIIQ7d")
_RULE_CODES = {RULE_ABSORBING: 0, RULE_NO_FLUX: 1}
_RULE_NAMES = {v: k for k, v in _RULE_CODES.items()}


def save_checkpoint(path: str | Path, state: FhnState, params: FhnParams) -> None:
    """Write params, iteration counter, and raw row-major u/v as little-endian f64."""
    h, w = state.u.shape
    header = _HEADER.pack(
        _CHECKPOINT_MAGIC,
        _CHECKPOINT_VERSION,
        _RULE_CODES[params.laplacian_rule],
        w,
        h,
        state.t,
        params.c2,
        params.dt,
        params.dx,
        params.du,
        params.a,
        params.b,
        params.c1,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[FhnState, FhnParams]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size or not data.startswith(_CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    magic, version, rule_code, w, h, t, c2, dt, dx, du, a, b, c1 = _HEADER.unpack(
        data[: _HEADER.size]
    )
    if version != _CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    need = _HEADER.size + 2 * h * w * 8
    if len(data) != need:
        raise ValueError(f"{path}: wrong payload size ({len(data)} != {need})")
    offset = _HEADER.size
    u = np.frombuffer(data, dtype="<f8", count=h * w, offset=offset).reshape(h, w)
    offset += h * w * 8
    v = np.frombuffer(data, dtype="<f8", count=h * w, offset=offset).reshape(h, w)
    params = FhnParams(
        c2=c2, dt=dt, dx=dx, du=du, a=a, b=b, c1=c1,
        laplacian_rule=_RULE_NAMES[rule_code],
    )
    return FhnState(u=u.copy(), v=v.copy(), t=t), params
