"""Mining two-input Boolean gates from electrode responses.

Binary inputs are injected as current impulses at two chosen electrodes, one
run per input pair (01), (10), (11); the all-zero input is not simulated
because the deterministic network produces no spikes from rest. Spikes
detected on each electrode are aligned into events across the three runs, and
each event's presence pattern names one of the seven nonzero two-input gates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import engine
from .engine import FhnParams, Stimulus
from .probes import Electrode, TraceProbe, disc_nodes
from .template import ConductiveGrid

INPUT_RUNS = ((0, 1), (1, 0), (1, 1))


class GateLabel(Enum):
    OR = "or"
    SELECT_Y = "sel_y"
    XOR = "xor"
    SELECT_X = "sel_x"
    NOT_X_AND_Y = "notx_and_y"
    X_AND_NOT_Y = "x_and_noty"
    AND = "and"


GATE_ORDER = (
    GateLabel.OR,
    GateLabel.SELECT_Y,
    GateLabel.XOR,
    GateLabel.SELECT_X,
    GateLabel.NOT_X_AND_Y,
    GateLabel.X_AND_NOT_Y,
    GateLabel.AND,
)

# (f01, f10, f11) -> gate, with f00 = 0 always.
TRIPLE_TO_GATE = {
    (1, 1, 1): GateLabel.OR,
    (1, 0, 1): GateLabel.SELECT_Y,
    (1, 1, 0): GateLabel.XOR,
    (0, 1, 1): GateLabel.SELECT_X,
    (1, 0, 0): GateLabel.NOT_X_AND_Y,
    (0, 1, 0): GateLabel.X_AND_NOT_Y,
    (0, 0, 1): GateLabel.AND,
}


def gate_output(gate: GateLabel, x: int, y: int) -> int:
    """Evaluate the gate as a Boolean function of (x, y)."""
    return {
        GateLabel.OR: x | y,
        GateLabel.SELECT_Y: y,
        GateLabel.XOR: x ^ y,
        GateLabel.SELECT_X: x,
        GateLabel.NOT_X_AND_Y: (1 - x) & y,
        GateLabel.X_AND_NOT_Y: x & (1 - y),
        GateLabel.AND: x & y,
    }[gate]


@dataclass(frozen=True)
class SpikeEvent:
    electrode: int
    time: int
    peak: float


@dataclass(frozen=True)
class ResponseTriple:
    """Spike present/absent in the (01), (10), (11) runs for one event."""

    electrode: int
    time: int
    bits: tuple[int, int, int]

    def __post_init__(self):
        if not any(self.bits):
            raise ValueError("all-false response triples are never materialized")


@dataclass(frozen=True)
class DetectionParams:
    threshold: float = 2.0
    refractory: int = 300
    window: int = 200
    separation: int = 1000
    input_exclusion_pad: int = 1000

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.refractory < 1:
            raise ValueError("refractory must be at least 1")
        if self.window < 1 or self.separation < 1:
            raise ValueError("window and separation must be at least 1")


@dataclass(frozen=True)
class StimulusSpec:
    amplitude: float = 0.5
    onset: int = 100
    duration: int = 100


def encode_inputs(
    ex: Electrode,
    ey: Electrode,
    bits: tuple[int, int],
    grid: ConductiveGrid,
    spec: StimulusSpec = StimulusSpec(),
) -> tuple[Stimulus, ...]:
    """Stimuli at the x/y electrode discs for the bits that are set."""
    if ex.id == ey.id or (ex.x, ex.y) == (ey.x, ey.y):
        raise ValueError("input electrodes must be distinct")
    stimuli = []
    for bit, e in zip(bits, (ex, ey)):
        if bit:
            rows, cols = disc_nodes(grid, e)
            if rows.size == 0:
                raise ValueError(f"input electrode {e.id} touches no conductive node")
            stimuli.append(
                Stimulus(
                    loci=np.column_stack([rows, cols]),
                    amplitude=spec.amplitude,
                    onset=spec.onset,
                    duration=spec.duration,
                )
            )
    return tuple(stimuli)


def detect_spikes(
    samples: np.ndarray,
    threshold: float,
    refractory: int,
    cadence: int = 1,
    electrode: int = 0,
) -> list[SpikeEvent]:
    """Thresholded local maxima, at least `refractory` iterations apart.

    A spike is a sample strictly greater than its predecessor and no smaller
    than its successor, with value >= threshold; of the candidates, each is
    accepted only if it lies at least `refractory` iterations after the
    previously accepted one. Sample index i maps to iteration i * cadence.
    """
    p = np.asarray(samples, dtype=float)
    if p.size < 3:
        return []
    inner = p[1:-1]
    cand = np.nonzero((inner >= threshold) & (inner > p[:-2]) & (inner >= p[2:]))[0] + 1
    events: list[SpikeEvent] = []
    last_time = None
    for i in cand:
        t = int(i) * cadence
        if last_time is not None and t - last_time < refractory:
            continue
        events.append(SpikeEvent(electrode=electrode, time=t, peak=float(p[i])))
        last_time = t
    return events


def cluster_events(
    runs,
    window: int = 200,
    separation: int = 1000,
) -> list[ResponseTriple]:
    """Align spikes from the three input runs into per-event response triples.

    Spikes from all runs are pooled and swept left to right: a spike joins the
    open cluster while it keeps the cluster span under `window`, otherwise it
    opens a new one. Adjacent clusters whose gap is below `separation` are
    then merged, since events are only distinct when further apart than that.
    """
    pooled: list[tuple[int, int, SpikeEvent]] = []
    electrode = None
    for run_idx, spikes in enumerate(runs):
        for s in spikes:
            pooled.append((s.time, run_idx, s))
            electrode = s.electrode if electrode is None else electrode
    if not pooled:
        return []
    pooled.sort(key=lambda item: (item[0], item[1]))

    clusters: list[list[tuple[int, int, SpikeEvent]]] = []
    for item in pooled:
        if clusters and item[0] - clusters[-1][0][0] < window:
            clusters[-1].append(item)
        else:
            clusters.append([item])

    merged: list[list[tuple[int, int, SpikeEvent]]] = []
    for cluster in clusters:
        if merged and cluster[0][0] - merged[-1][-1][0] < separation:
            merged[-1].extend(cluster)
        else:
            merged.append(cluster)

    triples = []
    for cluster in merged:
        bits = [0, 0, 0]
        for _, run_idx, _ in cluster:
            bits[run_idx] = 1
        triples.append(
            ResponseTriple(electrode=electrode, time=cluster[0][0], bits=tuple(bits))
        )
    return triples


def classify(triple: ResponseTriple) -> GateLabel:
    return TRIPLE_TO_GATE[triple.bits]


@dataclass
class GateTally:
    """Per-electrode gate counts for one (input pair, c2) mining unit."""

    ex: int
    ey: int
    c2: float
    electrode_ids: tuple[int, ...]
    counts: np.ndarray  # (n_electrodes, 7) ints in GATE_ORDER

    @property
    def totals(self) -> np.ndarray:
        """Per-gate totals across electrodes."""
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MineResult:
    tally: GateTally
    spikes: dict  # (x, y) bits -> electrode id -> list[SpikeEvent]
    triples: dict  # electrode id -> list[(ResponseTriple, GateLabel)]


def mine(
    grid: ConductiveGrid,
    params: FhnParams,
    electrodes,
    ex_id: int,
    ey_id: int,
    steps: int,
    stim: StimulusSpec = StimulusSpec(),
    detect: DetectionParams = DetectionParams(),
    count_input_electrodes: bool = False,
    trace_cadence: int = 1,
) -> MineResult:
    """Run the three input runs for one electrode pair and tally the gates."""
    electrodes = tuple(electrodes)
    by_id = {e.id: e for e in electrodes}
    if len(by_id) != len(electrodes):
        raise ValueError("electrode ids must be unique")
    ex, ey = by_id[ex_id], by_id[ey_id]

    spikes: dict = {}
    for bits in INPUT_RUNS:
        stimuli = encode_inputs(ex, ey, bits, grid, stim)
        probe = TraceProbe(electrodes, cadence=trace_cadence)
        engine.run(grid, params, stimuli=stimuli, probes=(probe,), steps=steps)
        values = probe.values()
        per_electrode = {}
        for i, e in enumerate(electrodes):
            found = detect_spikes(
                values[i], detect.threshold, detect.refractory,
                cadence=trace_cadence, electrode=e.id,
            )
            stimulated = (e.id == ex_id and bits[0]) or (e.id == ey_id and bits[1])
            if stimulated and not count_input_electrodes:
                lo = stim.onset
                hi = stim.onset + stim.duration + detect.input_exclusion_pad
                found = [s for s in found if not (lo <= s.time < hi)]
            per_electrode[e.id] = found
        spikes[bits] = per_electrode

    counts = np.zeros((len(electrodes), len(GATE_ORDER)), dtype=int)
    gate_col = {g: i for i, g in enumerate(GATE_ORDER)}
    triples: dict = {}
    for i, e in enumerate(electrodes):
        runs = [spikes[bits][e.id] for bits in INPUT_RUNS]
        found = cluster_events(runs, window=detect.window, separation=detect.separation)
        triples[e.id] = [(tr, classify(tr)) for tr in found]
        for _, gate in triples[e.id]:
            counts[i, gate_col[gate]] += 1

    tally = GateTally(
        ex=ex_id, ey=ey_id, c2=params.c2,
        electrode_ids=tuple(e.id for e in electrodes), counts=counts,
    )
    return MineResult(tally=tally, spikes=spikes, triples=triples)


@dataclass
class GateDistribution:
    """Gate counts pooled over tallies, with ratios normalized to 1."""

    counts: np.ndarray  # (7,) ints in GATE_ORDER
    total: int

    @property
    def is_empty(self) -> bool:
        return self.total == 0

    @property
    def ratios(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(len(GATE_ORDER))
        return self.counts / self.total

    def ratio(self, gate: GateLabel) -> float:
        return float(self.ratios[GATE_ORDER.index(gate)])


def aggregate(tallies) -> GateDistribution:
    tallies = tuple(tallies)
    if not tallies:
        raise ValueError("need at least one tally")
    counts = np.zeros(len(GATE_ORDER), dtype=int)
    for t in tallies:
        counts += t.totals
    return GateDistribution(counts=counts, total=int(counts.sum()))


# --- CSV output ----------------------------------------------------------------


def write_tally_csv(path: str | Path, tally: GateTally) -> None:
    """Rows per electrode plus a totals row; columns in the fixed gate order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["electrode"] + [g.value for g in GATE_ORDER] + ["total"])
        for eid, row in zip(tally.electrode_ids, tally.counts):
            writer.writerow([eid] + [int(c) for c in row] + [int(row.sum())])
        totals = tally.totals
        writer.writerow(["total"] + [int(c) for c in totals] + [tally.total])


def write_ratios_csv(path: str | Path, dist: GateDistribution) -> None:
    """Header gate,ratio; all ratios are 0 for an empty distribution."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gate", "ratio"])
        for gate, ratio in zip(GATE_ORDER, dist.ratios):
            writer.writerow([gate.value, repr(float(ratio))])


def write_spikes_csv(path: str | Path, result: MineResult) -> None:
    """Debug dump: electrode,run,peak_step,peak_value."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["electrode", "run", "peak_step", "peak_value"])
        for bits in INPUT_RUNS:
            run_name = f"{bits[0]}{bits[1]}"
            for eid in sorted(result.spikes[bits]):
                for s in result.spikes[bits][eid]:
                    writer.writerow([eid, run_name, s.time, repr(s.peak)])
