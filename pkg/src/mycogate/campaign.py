"""Campaign scheduling: independent simulation units on a thread pool.

Completed units are appended to a JSON-lines manifest as they finish, so a
partial campaign can be resumed: units already marked done are skipped. The
compiled kernels release the GIL, which is what makes threads effective here.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import DivergenceError

MANIFEST_NAME = "manifest.jsonl"


@dataclass
class UnitOutcome:
    unit: str
    status: str  # done | failed
    outputs: list
    error: str | None = None


class Manifest:
    """Append-only JSONL record of completed campaign units."""

    def __init__(self, out_dir: str | Path):
        self.path = Path(out_dir) / MANIFEST_NAME
        self._lock = threading.Lock()

    def completed_units(self) -> set[str]:
        done = set()
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry.get("status") == "done":
                    done.add(entry["unit"])
        return done

    def record(self, outcome: UnitOutcome) -> None:
        entry = {"unit": outcome.unit, "status": outcome.status,
                 "outputs": outcome.outputs}
        if outcome.error is not None:
            entry["error"] = outcome.error
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()


def run_units(units, worker, workers: int, manifest: Manifest) -> list[UnitOutcome]:
    """Execute `worker(unit)` for every unit not already marked done.

    Units are independent and deterministic, so the worker count changes only
    wall time, never any artifact. Failures are recorded and do not stop the
    remaining units.
    """
    done = manifest.completed_units()
    pending = [u for u in units if u.name not in done]
    outcomes = []

    def _execute(unit):
        try:
            outputs = worker(unit)
            return UnitOutcome(unit=unit.name, status="done",
                               outputs=[str(p) for p in outputs])
        except DivergenceError as exc:
            return UnitOutcome(unit=unit.name, status="failed", outputs=[],
                               error=f"divergence: {exc}")

    if workers <= 1:
        results = map(_execute, pending)
        for outcome in results:
            manifest.record(outcome)
            outcomes.append(outcome)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for outcome in pool.map(_execute, pending):
                manifest.record(outcome)
                outcomes.append(outcome)
    return outcomes


@dataclass(frozen=True)
class Unit:
    name: str
    payload: tuple
