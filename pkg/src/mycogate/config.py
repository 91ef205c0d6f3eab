"""Experiment configuration: a single YAML file drives the whole pipeline.

A minimal config is just the image path; every integration constant, the
electrode layout, stimulus defaults, and detection thresholds have defaults
baked in. `schema_version` is explicit so old files fail loudly rather than
silently misparse.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .engine import RULE_ABSORBING, RULE_NO_FLUX, FhnParams
from .errors import ConfigError
from .gatelab import DetectionParams, StimulusSpec
from .probes import Electrode, disc_nodes
from .template import ConductiveGrid

SCHEMA_VERSION = 1

DEFAULT_C2 = [0.095, 0.096, 0.097]
DEFAULT_PAIRS = [(3, 13), (5, 15), (7, 14), (4, 13), (13, 7)]


@dataclass(frozen=True)
class StimulusSite:
    x: int
    y: int
    radius: float = 2.0


@dataclass
class ExperimentConfig:
    image: str | None = None
    mask: str | None = None
    out_dir: str = "out"
    c2: list = field(default_factory=lambda: list(DEFAULT_C2))
    dt: float = 0.015
    dx: float = 2.0
    du: float = 1.0
    a: float = 0.13
    b: float = 0.013
    c1: float = 0.26
    laplacian_rule: str = RULE_ABSORBING
    run_length: int = 20000
    electrodes: list | None = None  # None -> default 4x4 layout over the bbox
    electrode_radius: float = 2.0
    stim_amplitude: float = 0.5
    stim_onset: int = 100
    stim_duration: int = 100
    run_stimulus_sites: list | None = None  # None -> one site at the colony center
    trace_cadence: int = 1
    activity_cadence: int = 1
    snapshot_cadence: int = 100
    detect_threshold: float = 2.0
    detect_refractory: int = 300
    event_window: int = 200
    event_separation: int = 1000
    input_exclusion_pad: int = 1000
    count_input_electrodes: bool = False
    pairs: list = field(default_factory=lambda: list(DEFAULT_PAIRS))

    def fhn_params(self, c2: float) -> FhnParams:
        return FhnParams(
            c2=c2, dt=self.dt, dx=self.dx, du=self.du, a=self.a, b=self.b,
            c1=self.c1, laplacian_rule=self.laplacian_rule,
        )

    def stimulus_spec(self) -> StimulusSpec:
        return StimulusSpec(
            amplitude=self.stim_amplitude,
            onset=self.stim_onset,
            duration=self.stim_duration,
        )

    def detection_params(self) -> DetectionParams:
        return DetectionParams(
            threshold=self.detect_threshold,
            refractory=self.detect_refractory,
            window=self.event_window,
            separation=self.event_separation,
            input_exclusion_pad=self.input_exclusion_pad,
        )


_SCALARS = {
    f.name for f in ExperimentConfig.__dataclass_fields__.values()
} - {"electrodes", "run_stimulus_sites", "pairs", "c2"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse YAML text; unknown keys and wrong schema versions are errors."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")

    cfg = ExperimentConfig()
    for key, value in doc.items():
        if key == "c2":
            cfg.c2 = [float(v) for v in _as_list(value, "c2")]
        elif key == "pairs":
            cfg.pairs = [_parse_pair(p) for p in _as_list(value, "pairs")]
        elif key == "electrodes":
            cfg.electrodes = None if value is None else [
                _parse_electrode(e, cfg.electrode_radius) for e in value
            ]
        elif key == "run_stimulus_sites":
            cfg.run_stimulus_sites = None if value is None else [
                _parse_site(s) for s in value
            ]
        elif key in _SCALARS:
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def serialize_config(cfg: ExperimentConfig) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(asdict(cfg))
    doc["pairs"] = [list(p) for p in cfg.pairs]
    if cfg.electrodes is not None:
        doc["electrodes"] = [
            {"id": e.id, "x": e.x, "y": e.y, "radius": e.radius} for e in cfg.electrodes
        ]
    if cfg.run_stimulus_sites is not None:
        doc["run_stimulus_sites"] = [
            {"x": s.x, "y": s.y, "radius": s.radius} for s in cfg.run_stimulus_sites
        ]
    return yaml.safe_dump(doc, sort_keys=True)


def _as_list(value, name):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list")
    return value


def _parse_pair(p) -> tuple[int, int]:
    if not isinstance(p, (list, tuple)) or len(p) != 2:
        raise ConfigError(f"pair {p!r} must be [ex, ey]")
    ex, ey = int(p[0]), int(p[1])
    if ex == ey:
        raise ConfigError(f"pair ({ex}, {ey}) uses the same electrode twice")
    return ex, ey


def _parse_electrode(e, default_radius: float) -> Electrode:
    try:
        return Electrode(
            id=int(e["id"]), x=int(e["x"]), y=int(e["y"]),
            radius=float(e.get("radius", default_radius)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad electrode entry {e!r}") from exc


def _parse_site(s) -> StimulusSite:
    try:
        return StimulusSite(
            x=int(s["x"]), y=int(s["y"]), radius=float(s.get("radius", 2.0))
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad stimulus site entry {s!r}") from exc


def validate_config(cfg: ExperimentConfig) -> None:
    """Static checks that need no grid."""
    if (cfg.image is None) == (cfg.mask is None):
        raise ConfigError("exactly one of image or mask must be set")
    if not cfg.c2:
        raise ConfigError("c2 list must not be empty")
    if any(v <= 0 for v in cfg.c2):
        raise ConfigError("c2 values must be positive")
    if cfg.run_length < cfg.stim_onset + cfg.stim_duration:
        raise ConfigError("run_length must cover the stimulus window")
    if cfg.laplacian_rule not in (RULE_ABSORBING, RULE_NO_FLUX):
        raise ConfigError(f"unknown laplacian_rule {cfg.laplacian_rule!r}")
    for cadence_name in ("trace_cadence", "activity_cadence"):
        if getattr(cfg, cadence_name) < 1:
            raise ConfigError(f"{cadence_name} must be at least 1")
    if cfg.snapshot_cadence < 0:
        raise ConfigError("snapshot_cadence must be 0 (off) or positive")
    if cfg.electrodes is not None:
        ids = [e.id for e in cfg.electrodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("electrode ids must be unique")


def resolve_electrodes(cfg: ExperimentConfig, grid: ConductiveGrid) -> list[Electrode]:
    """Configured layout, or the default 4x4 lattice over the bounding box."""
    if cfg.electrodes is not None:
        electrodes = list(cfg.electrodes)
    else:
        electrodes = default_electrode_layout(grid, radius=cfg.electrode_radius)
    for e in electrodes:
        rows, _ = disc_nodes(grid, e)
        if rows.size == 0:
            raise ConfigError(
                f"electrode {e.id} at ({e.x}, {e.y}) touches no conductive node"
            )
    return electrodes


def resolve_pairs(cfg: ExperimentConfig, electrodes) -> list[tuple[int, int]]:
    if not cfg.pairs:
        raise ConfigError("at least one input pair is required")
    ids = {e.id for e in electrodes}
    for ex, ey in cfg.pairs:
        if ex not in ids or ey not in ids:
            raise ConfigError(f"pair ({ex}, {ey}) references unknown electrode ids")
    return [(int(ex), int(ey)) for ex, ey in cfg.pairs]


def default_electrode_layout(grid: ConductiveGrid, radius: float = 2.0) -> list[Electrode]:
    """16 electrodes on a 4x4 lattice over the conductive bounding box.

    Each lattice point snaps to the nearby conductive node with the densest
    5x5 conductive surround, so electrodes sit on strands rather than in
    gaps. Deterministic: ties break on distance, then row-major order.
    """
    x0, y0, x1, y1 = grid.bounding_box()
    electrodes = []
    for i in range(4):
        for j in range(4):
            ty = y0 + (i + 0.5) / 4.0 * (y1 - y0)
            tx = x0 + (j + 0.5) / 4.0 * (x1 - x0)
            x, y = _snap_to_strand(grid, tx, ty)
            electrodes.append(Electrode(id=i * 4 + j, x=x, y=y, radius=radius))
    return electrodes


def _snap_to_strand(grid: ConductiveGrid, tx: float, ty: float) -> tuple[int, int]:
    mask = grid.mask
    h, w = mask.shape
    search = max(h, w) // 8 + 2
    cy, cx = int(round(ty)), int(round(tx))
    ry0, ry1 = max(cy - search, 0), min(cy + search + 1, h)
    rx0, rx1 = max(cx - search, 0), min(cx + search + 1, w)
    sub = mask[ry0:ry1, rx0:rx1]
    rows, cols = np.nonzero(sub)
    if rows.size == 0:
        rows, cols = np.nonzero(mask)
        ry0, rx0 = 0, 0
        if rows.size == 0:
            raise ConfigError("grid has no conductive nodes")
    rows = rows + ry0
    cols = cols + rx0
    density = _window_density(mask, rows, cols, half=2)
    dist2 = (rows - ty) ** 2 + (cols - tx) ** 2
    # Highest density wins; then closest; then row-major.
    order = np.lexsort((cols, rows, dist2, -density))
    best = order[0]
    return int(cols[best]), int(rows[best])


def _window_density(mask: np.ndarray, rows: np.ndarray, cols: np.ndarray, half: int) -> np.ndarray:
    padded = np.pad(mask.astype(np.int32), half)
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = padded.cumsum(0).cumsum(1)
    size = 2 * half + 1
    r1, c1 = rows + size, cols + size
    return (
        integral[r1, c1] - integral[rows, c1] - integral[r1, cols] + integral[rows, cols]
    )
