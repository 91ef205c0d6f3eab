"""Minimal, byte-reproducible chart rendering.

Charts are drawn directly with Pillow so that identical data always produces
identical PNG bytes; no plotting tool chain is pulled in for two chart kinds.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .images import write_png

_BG = (255, 255, 255)
_FG = (30, 30, 30)
_BAR = (70, 110, 180)
_LINE = (180, 60, 40)
_GRIDLINE = (215, 215, 215)


def _canvas(size):
    img = Image.new("RGB", size, _BG)
    return img, ImageDraw.Draw(img), ImageFont.load_default()


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def bar_chart(path: str | Path, labels, values, title: str = "",
              size: tuple[int, int] = (720, 460)) -> None:
    values = [float(v) for v in values]
    img, draw, font = _canvas(size)
    w, h = size
    left, right, top, bottom = 70, 20, 40, 60
    vmax = max(values) if values and max(values) > 0 else 1.0
    plot_w, plot_h = w - left - right, h - top - bottom

    draw.text((left, 12), title, fill=_FG, font=font)
    draw.line([(left, top), (left, h - bottom), (w - right, h - bottom)], fill=_FG)
    for frac in (0.25, 0.5, 0.75, 1.0):
        y = h - bottom - frac * plot_h
        draw.line([(left, y), (w - right, y)], fill=_GRIDLINE)
        draw.text((8, y - 6), _fmt(frac * vmax), fill=_FG, font=font)
    draw.text((8, h - bottom - 6), "0", fill=_FG, font=font)

    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.6
    for i, (label, v) in enumerate(zip(labels, values)):
        x0 = left + i * slot + (slot - bar_w) / 2
        y0 = h - bottom - (v / vmax) * plot_h
        draw.rectangle([x0, y0, x0 + bar_w, h - bottom], fill=_BAR)
        draw.text((left + i * slot + slot * 0.15, h - bottom + 8), str(label),
                  fill=_FG, font=font)
        draw.text((x0, max(y0 - 14, top)), _fmt(v), fill=_FG, font=font)

    write_png(path, np.asarray(img, dtype=np.uint8))


def line_chart(path: str | Path, xs, ys, title: str = "",
               xlabel: str = "", ylabel: str = "",
               size: tuple[int, int] = (900, 460)) -> None:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    img, draw, font = _canvas(size)
    w, h = size
    left, right, top, bottom = 80, 20, 40, 60
    plot_w, plot_h = w - left - right, h - top - bottom

    draw.text((left, 12), title, fill=_FG, font=font)
    draw.line([(left, top), (left, h - bottom), (w - right, h - bottom)], fill=_FG)
    if xs.size:
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        pts = [
            (left + (x - x0) / (x1 - x0) * plot_w,
             h - bottom - (y - y0) / (y1 - y0) * plot_h)
            for x, y in zip(xs, ys)
        ]
        if len(pts) == 1:
            pts = pts * 2
        draw.line(pts, fill=_LINE)
        draw.text((8, top - 6), _fmt(y1), fill=_FG, font=font)
        draw.text((8, h - bottom - 6), _fmt(y0), fill=_FG, font=font)
        draw.text((left, h - bottom + 8), _fmt(x0), fill=_FG, font=font)
        draw.text((w - right - 50, h - bottom + 8), _fmt(x1), fill=_FG, font=font)
    draw.text((w // 2, h - 24), xlabel, fill=_FG, font=font)
    draw.text((8, h // 2), ylabel, fill=_FG, font=font)

    write_png(path, np.asarray(img, dtype=np.uint8))
