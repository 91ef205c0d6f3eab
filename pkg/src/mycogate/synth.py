"""Deterministic synthetic colony images for tests and demos.

Draws a radial branching network of green strands, with a few concentric
arcs fusing neighboring branches so the grid contains re-entrant loops. The
strokes vary in width, which after dilation yields strands from marginally
conductive twigs up to comfortably wide trunks.
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw

from .images import RgbImage

BACKGROUND = (246, 246, 242)
INK = (8, 150, 12)  # passes the r<20, g>40, b<20 threshold


def colony_image(
    width: int = 1000,
    height: int = 960,
    seed: int = 7,
    trunks: int = 9,
    branch_prob: float = 0.12,
    max_generation: int = 3,
    arc_rings: int = 4,
    arc_fill: float = 0.55,
    knot_every: tuple[int, int] = (3, 6),
    hub_radius_frac: float = 0.10,
) -> RgbImage:
    """Render a colony-like branching network, deterministic for a given seed.

    A small central hub of wide strands feeds radial trunks dotted with
    rounded knots (hyphal swellings). A thin strand entering a knot is a
    near-critical nucleation site for an excitable medium, so each knot gates
    wave passage at a sharp, geometry-dependent excitability threshold. Two
    gauges are mixed deliberately: trunk knots that close between c2 = 0.096
    and 0.098, and finer branch/arc knots that close between 0.094 and 0.096,
    which grades network coverage across that range. The concentric arcs
    close loops that can carry re-entrant waves.
    """
    rng = np.random.default_rng(seed)
    img = Image.new("RGB", (width, height), BACKGROUND)
    draw = ImageDraw.Draw(img)
    cx, cy = width / 2.0, height / 2.0
    radius = 0.47 * min(width, height)
    hub_r = hub_radius_frac * radius
    seg = max(radius / 28.0, 4.0)

    def knot(x, y, trunk):
        if trunk:
            d = 11 if rng.random() < 0.9 else 12
        else:
            d = 7 if rng.random() < 0.8 else 8
        draw.ellipse((x - d / 2, y - d / 2, x + d / 2, y + d / 2), fill=INK)

    # (x, y, angle, generation, segments until next knot)
    queue = []
    for i in range(trunks):
        angle = 2.0 * math.pi * i / trunks + rng.normal(0.0, 0.10)
        queue.append((cx, cy, angle, 0, int(rng.integers(*knot_every))))

    while queue:
        x, y, angle, gen, until_knot = queue.pop()
        steps = int(rng.integers(5, 10)) if gen else int(radius / seg)
        for _ in range(steps):
            angle += rng.normal(0.0, 0.13)
            nx = x + seg * math.cos(angle)
            ny = y + seg * math.sin(angle)
            if (nx - cx) ** 2 + (ny - cy) ** 2 > radius**2:
                break
            r_here = math.hypot(x - cx, y - cy)
            in_hub = r_here < hub_r
            stroke = 3 if in_hub else (2 if gen == 0 else 1)
            draw.line([(x, y), (nx, ny)], fill=INK, width=stroke)
            x, y = nx, ny
            if not in_hub:
                until_knot -= 1
                if until_knot <= 0:
                    knot(x, y, trunk=(gen == 0))
                    until_knot = int(rng.integers(*knot_every))
            # Branches start beyond the first knot ring so the hub
            # neighborhood has no ungated side exits.
            if (gen < max_generation and r_here > hub_r + 5 * seg
                    and rng.random() < branch_prob):
                side = 1.0 if rng.random() < 0.5 else -1.0
                child_angle = angle + side * rng.uniform(0.4, 1.0)
                queue.append((x, y, child_angle, gen + 1,
                              int(rng.integers(*knot_every))))

    # Concentric arcs fuse branches into loops; knotted like branches so they
    # close at the same excitability band.
    for ring in range(arc_rings):
        r = radius * (0.28 + 0.62 * ring / max(arc_rings - 1, 1))
        start = rng.uniform(0.0, 360.0)
        covered = 0.0
        while covered < arc_fill * 360.0:
            span = rng.uniform(25.0, 80.0)
            box = (cx - r, cy - r, cx + r, cy + r)
            draw.arc(box, start=start, end=start + span, fill=INK, width=1)
            mid = math.radians(start + span / 2.0)
            draw_knot_x = cx + r * math.cos(mid)
            draw_knot_y = cy + r * math.sin(mid)
            if rng.random() < 0.5:
                d = 7 if rng.random() < 0.8 else 8
                draw.ellipse((draw_knot_x - d / 2, draw_knot_y - d / 2,
                              draw_knot_x + d / 2, draw_knot_y + d / 2), fill=INK)
            covered += span
            start += span + rng.uniform(10.0, 45.0)

    return RgbImage(np.asarray(img, dtype=np.uint8))


def y_junction_mask(
    arm: int = 60, strand: int = 5, margin: int = 8
) -> np.ndarray:
    """Boolean mask of a Y: two input arms merging into one output arm.

    The two arms start at the left edge (top and bottom), meet in the middle,
    and continue as a single arm to the right edge. Useful as a minimal
    collision-of-waves fixture.
    """
    height = 2 * arm + 2 * margin
    width = 2 * arm + 2 * margin
    img = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(img)
    jx, jy = margin + arm, margin + arm
    draw.line([(margin, margin), (jx, jy)], fill=255, width=strand)
    draw.line([(margin, height - margin), (jx, jy)], fill=255, width=strand)
    draw.line([(jx, jy), (width - margin, jy)], fill=255, width=strand)
    return np.asarray(img, dtype=np.uint8) > 0
