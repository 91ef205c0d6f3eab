"""Command-line front end.

Subcommands: template (image -> mask + neighbor histogram), run (excitability
sweep with traces/activity/coverage/snapshots), mine (gate mining campaign),
report (re-aggregate a finished or partial campaign), synth (generate a demo
colony image). Exit codes: 0 success, 2 config error, 3 I/O error,
4 divergence, 5 template produced an empty mask.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import campaign, config as config_mod, engine, gatelab, plots, probes, synth, template
from .campaign import Manifest, Unit
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DivergenceError, ImageDataError, ImageFormatError
from .images import write_mask_pgm, write_png

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4
EXIT_EMPTY_TEMPLATE = 5

log = logging.getLogger("mycogate")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ImageFormatError, ImageDataError, OSError) as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO
    except DivergenceError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGENCE


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config YAML")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--workers", type=int, default=1,
                        help="worker threads for independent units")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the model is deterministic")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mycogate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", parents=[common],
                       help="convert the colony image to a conductive mask")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("run", parents=[common],
                       help="run the excitability sweep and record probes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mine", parents=[common],
                       help="mine Boolean gates over the configured input pairs")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("report", parents=[common],
                       help="aggregate tallies from a finished or partial campaign")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic colony image")
    p.add_argument("--width", type=int, default=1000)
    p.add_argument("--height", type=int, default=960)
    p.add_argument("--path", default="colony.png")
    p.set_defaults(func=cmd_synth)

    return parser


def _load(args) -> tuple[ExperimentConfig, Path]:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    config_mod.validate_config(cfg)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _load_grid(cfg: ExperimentConfig) -> template.ConductiveGrid:
    if cfg.mask is not None:
        mask = template.read_mask_pgm(cfg.mask)
        return template.ConductiveGrid.from_mask(mask)
    img = template.load_image(cfg.image)
    return template.build_grid(img)


def cmd_template(args) -> int:
    cfg, out = _load(args)
    if cfg.image is None:
        raise ConfigError("template needs an image path")
    img = template.load_image(cfg.image)
    grid = template.build_grid(img)
    template.write_mask_pgm(out / "mask.pgm", grid.mask)
    hist = template.k_histogram(grid)
    template.write_k_histogram_csv(out / "k_histogram.csv", hist)
    log.info("mask: %dx%d, %d conductive nodes", grid.width, grid.height,
             grid.n_conductive)
    if grid.n_conductive == 0:
        log.warning("template produced an empty mask")
        return EXIT_EMPTY_TEMPLATE
    return EXIT_OK


def _c2_label(c2: float) -> str:
    return format(c2, "g")


def _run_stimuli(cfg: ExperimentConfig, grid) -> list[engine.Stimulus]:
    sites = cfg.run_stimulus_sites
    if sites is None:
        x0, y0, x1, y1 = grid.bounding_box()
        sx, sy = config_mod._snap_to_strand(grid, (x0 + x1) / 2, (y0 + y1) / 2)
        sites = [config_mod.StimulusSite(x=sx, y=sy)]
    stimuli = []
    for site in sites:
        rows, cols = probes.disc_nodes(
            grid, probes.Electrode(id=-1, x=site.x, y=site.y, radius=site.radius)
        )
        if rows.size == 0:
            raise ConfigError(
                f"stimulus site ({site.x}, {site.y}) touches no conductive node"
            )
        stimuli.append(engine.Stimulus(
            loci=np.column_stack([rows, cols]),
            amplitude=cfg.stim_amplitude,
            onset=cfg.stim_onset,
            duration=cfg.stim_duration,
        ))
    return stimuli


def cmd_run(args) -> int:
    cfg, out = _load(args)
    grid = _load_grid(cfg)
    electrodes = config_mod.resolve_electrodes(cfg, grid)
    stimuli = _run_stimuli(cfg, grid)
    manifest = Manifest(out)

    def worker(unit: Unit):
        (c2,) = unit.payload
        unit_dir = out / _c2_label(c2)
        unit_dir.mkdir(parents=True, exist_ok=True)
        trace_probe = probes.TraceProbe(electrodes, cadence=cfg.trace_cadence)
        activity_probe = probes.ActivityProbe(cadence=cfg.activity_cadence)
        run_probes = [trace_probe, activity_probe]
        snap_dir = unit_dir / "snapshots"
        if cfg.snapshot_cadence > 0:
            snap_dir.mkdir(exist_ok=True)
            def sink(t, rgb, _dir=snap_dir):
                write_png(_dir / f"{t:09d}.png", rgb)
            run_probes.append(probes.SnapshotProbe(cadence=cfg.snapshot_cadence, sink=sink))
        result = engine.run(grid, cfg.fhn_params(c2), stimuli=stimuli,
                            probes=run_probes, steps=cfg.run_length)
        probes.write_traces_csv(unit_dir / "traces.csv", trace_probe)
        probes.write_activity_csv(unit_dir / "activity.csv", activity_probe)
        plots.line_chart(unit_dir / "activity.png", activity_probe.steps,
                         activity_probe.counts, title=f"activity c2={_c2_label(c2)}",
                         xlabel="step", ylabel="active nodes")
        write_png(unit_dir / "coverage.png",
                  probes.render_coverage(result.coverage, grid))
        write_mask_pgm(unit_dir / "coverage.pgm", result.coverage)
        return [unit_dir / "traces.csv", unit_dir / "activity.csv",
                unit_dir / "coverage.png", unit_dir / "coverage.pgm"]

    units = [Unit(name=f"run/c2={_c2_label(c2)}", payload=(float(c2),)) for c2 in cfg.c2]
    outcomes = campaign.run_units(units, worker, args.workers, manifest)
    failed = [o for o in outcomes if o.status == "failed"]
    for o in failed:
        log.error("unit %s failed: %s", o.unit, o.error)
    return EXIT_DIVERGENCE if failed else EXIT_OK


def cmd_mine(args) -> int:
    cfg, out = _load(args)
    grid = _load_grid(cfg)
    electrodes = config_mod.resolve_electrodes(cfg, grid)
    pairs = config_mod.resolve_pairs(cfg, electrodes)
    manifest = Manifest(out)

    def worker(unit: Unit):
        ex, ey, c2 = unit.payload
        unit_dir = out / f"pair{ex}-{ey}" / _c2_label(c2)
        unit_dir.mkdir(parents=True, exist_ok=True)
        result = gatelab.mine(
            grid, cfg.fhn_params(c2), electrodes, ex, ey,
            steps=cfg.run_length, stim=cfg.stimulus_spec(),
            detect=cfg.detection_params(),
            count_input_electrodes=cfg.count_input_electrodes,
            trace_cadence=cfg.trace_cadence,
        )
        gatelab.write_tally_csv(unit_dir / "tally.csv", result.tally)
        gatelab.write_spikes_csv(unit_dir / "spikes.csv", result)
        return [unit_dir / "tally.csv", unit_dir / "spikes.csv"]

    units = [
        Unit(name=f"mine/pair{ex}-{ey}/c2={_c2_label(c2)}",
             payload=(ex, ey, float(c2)))
        for ex, ey in pairs for c2 in cfg.c2
    ]
    outcomes = campaign.run_units(units, worker, args.workers, manifest)
    failed = [o for o in outcomes if o.status == "failed"]
    for o in failed:
        log.error("unit %s failed: %s", o.unit, o.error)

    _write_aggregate(out)
    return EXIT_DIVERGENCE if failed else EXIT_OK


def _read_tally_counts(path: Path) -> np.ndarray:
    import csv as _csv

    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    counts = []
    for row in rows[1:]:
        if row[0] == "total":
            continue
        counts.append([int(v) for v in row[1:-1]])
    return np.asarray(counts, dtype=int)


def _write_aggregate(out: Path) -> None:
    tally_paths = sorted(out.glob("pair*/*/tally.csv"))
    tallies = []
    for p in tally_paths:
        counts = _read_tally_counts(p)
        tallies.append(gatelab.GateTally(
            ex=-1, ey=-1, c2=0.0,
            electrode_ids=tuple(range(counts.shape[0])), counts=counts,
        ))
    agg_dir = out / "aggregate"
    agg_dir.mkdir(parents=True, exist_ok=True)
    if not tallies:
        log.warning("no tallies found; skipping aggregate")
        return
    dist = gatelab.aggregate(tallies)
    gatelab.write_ratios_csv(agg_dir / "ratios.csv", dist)
    plots.bar_chart(
        agg_dir / "ratios.png",
        [g.value for g in gatelab.GATE_ORDER],
        dist.ratios,
        title="gate ratio distribution",
    )
    if dist.is_empty:
        log.warning("aggregate distribution is empty (no gates found)")


def cmd_report(args) -> int:
    if not args.out and not args.config:
        raise ConfigError("report needs --out or a config with out_dir")
    if args.out:
        out = Path(args.out)
    else:
        cfg = load_config(args.config)
        out = Path(cfg.out_dir)
    if not out.exists():
        raise ConfigError(f"output directory {out} does not exist")
    _write_aggregate(out)
    summary = out / "report.txt"
    lines = []
    for p in sorted(out.glob("pair*/*/tally.csv")):
        counts = _read_tally_counts(p)
        lines.append(f"{p.parent.parent.name}/{p.parent.name}: total={int(counts.sum())}")
    manifest = Manifest(out)
    lines.append(f"completed units: {len(manifest.completed_units())}")
    summary.write_text("\n".join(lines) + "\n")
    log.info("wrote %s", summary)
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 7
    img = synth.colony_image(width=args.width, height=args.height, seed=seed)
    out_path = Path(args.path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_png(out_path, img.pixels)
    log.info("wrote %s (%dx%d)", out_path, img.width, img.height)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
