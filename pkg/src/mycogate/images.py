"""Raster I/O: PNG and binary PPM as inputs, PGM and PNG as outputs.

PGM is the canonical on-disk form of a conductivity mask (0 = non-conductive,
255 = conductive) and is written byte-for-byte reproducibly so masks can be
versioned and diffed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDataError, ImageFormatError

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster; pixels shaped (height, width, 3), dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("pixels must be a (height, width, 3) uint8 array")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def load_image(path: str | Path) -> RgbImage:
    """Decode a PNG or binary PPM (P6) file into an RgbImage.

    Raises OSError if the file cannot be read, ImageFormatError for
    unsupported formats or modes, and ImageDataError for corrupt payloads.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head.startswith(PNG_MAGIC):
        return _load_png(path)
    if head.startswith(b"P6"):
        return _load_ppm(path)
    raise ImageFormatError(f"{path}: not a PNG or binary PPM file")


def _load_png(path: Path) -> RgbImage:
    try:
        with Image.open(path) as img:
            if img.mode not in ("RGB", "RGBA"):
                raise ImageFormatError(
                    f"{path}: unsupported PNG mode {img.mode!r} (need RGB or RGBA)"
                )
            img.load()
            rgb = img.convert("RGB")
    except UnidentifiedImageError as exc:
        raise ImageDataError(f"{path}: corrupt PNG data") from exc
    except OSError as exc:
        # Pillow raises OSError for truncated image payloads.
        raise ImageDataError(f"{path}: corrupt PNG data ({exc})") from exc
    return RgbImage(np.asarray(rgb, dtype=np.uint8))


def _load_ppm(path: Path) -> RgbImage:
    data = path.read_bytes()
    try:
        width, height, maxval, offset = _parse_pnm_header(data, b"P6")
    except ValueError as exc:
        raise ImageDataError(f"{path}: {exc}") from exc
    if maxval > 255:
        raise ImageFormatError(f"{path}: 16-bit PPM is not supported")
    need = width * height * 3
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise ImageDataError(
            f"{path}: truncated PPM payload ({len(payload)} of {need} bytes)"
        )
    px = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(px.copy())


def _parse_pnm_header(data: bytes, magic: bytes) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, payload_offset) of a raw PNM header."""
    if not data.startswith(magic):
        raise ValueError(f"missing {magic.decode()} magic")
    pos = len(magic)
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError("truncated header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isdigit():
            start = pos
            while pos < len(data) and data[pos : pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise ValueError(f"unexpected byte {ch!r} in header")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ValueError("missing whitespace after maxval")
    pos += 1
    width, height, maxval = fields
    if width <= 0 or height <= 0 or maxval <= 0:
        raise ValueError("non-positive header field")
    return width, height, maxval, pos


def write_ppm(path: str | Path, image: RgbImage) -> None:
    header = f"P6\n{image.width} {image.height}\n255\n".encode()
    Path(path).write_bytes(header + image.pixels.tobytes())


def write_png(path: str | Path, rgb: np.ndarray) -> None:
    """Write an RGB uint8 array as PNG (byte-reproducible for equal input)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected a (height, width, 3) uint8 array")
    Image.fromarray(rgb, mode="RGB").save(str(path), format="PNG")


def write_mask_pgm(path: str | Path, mask: np.ndarray) -> None:
    """Write a boolean mask as binary PGM: 255 where true, 0 elsewhere."""
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError("expected a 2-d boolean mask")
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode()
    payload = np.where(mask, np.uint8(255), np.uint8(0)).tobytes()
    Path(path).write_bytes(header + payload)


def read_mask_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM mask; any nonzero sample counts as conductive."""
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM file")
    try:
        width, height, maxval, offset = _parse_pnm_header(data, b"P5")
    except ValueError as exc:
        raise ImageDataError(f"{path}: {exc}") from exc
    if maxval > 255:
        raise ImageFormatError(f"{path}: 16-bit PGM is not supported")
    need = width * height
    payload = data[offset : offset + need]
    if len(payload) < need:
        raise ImageDataError(
            f"{path}: truncated PGM payload ({len(payload)} of {need} bytes)"
        )
    return (np.frombuffer(payload, dtype=np.uint8).reshape(height, width) > 0).copy()
