"""Grayscale raster images: text rendering and PGM/PNG serialization.

The image model is deliberately small: 8-bit single-channel pixels,
0 = black ink, 255 = white background, stored row-major in an immutable
bytes buffer. Text is rendered from the embedded 8x8 bitmap font at an
integer scale with no anti-aliasing, so identical inputs always produce
byte-identical pixels.
"""

from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import font8x8


class EmptyText(ValueError):
    """render_text was given an empty string."""


class UnsupportedChar(ValueError):
    """A character has no glyph in the font."""

    def __init__(self, char: str):
        super().__init__(f"no glyph for character {char!r}")
        self.char = char


class MalformedHeader(ValueError):
    """Byte stream is not a binary PGM with the expected header."""


class TruncatedPixelData(ValueError):
    """Pixel payload length does not match the header dimensions."""


class UnsupportedMaxval(ValueError):
    """PGM maxval other than 255."""


@dataclass(frozen=True)
class ImageGray:
    """Immutable 8-bit grayscale image, pixels row-major (top row first)."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel buffer has {len(self.pixels)} bytes, expected {self.width * self.height}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageGray":
        """Build from a 2D uint8 array (rows = y)."""
        if arr.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {arr.shape}")
        a = np.ascontiguousarray(arr, dtype=np.uint8)
        return cls(width=a.shape[1], height=a.shape[0], pixels=a.tobytes())

    def to_array(self) -> np.ndarray:
        """Read-only 2D uint8 view of the pixels, shape (height, width)."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)

    def pixel(self, x: int, y: int) -> int:
        return self.pixels[y * self.width + x]

    @classmethod
    def constant(cls, width: int, height: int, value: int = 255) -> "ImageGray":
        if not 0 <= value <= 255:
            raise ValueError(f"pixel value out of range: {value}")
        return cls(width, height, bytes([value]) * (width * height))


@dataclass(frozen=True)
class FontFace:
    """Fixed-cell bitmap font; glyphs map char -> 8x8 matrix of 0/1 (1 = ink)."""

    glyph_width: int = font8x8.GLYPH_WIDTH
    glyph_height: int = font8x8.GLYPH_HEIGHT
    glyphs: dict[str, list[list[int]]] = field(
        default_factory=lambda: {c: font8x8.glyph_bitmap(c) for c in font8x8.GLYPHS}
    )

    def has_glyph(self, char: str) -> bool:
        return char in self.glyphs


DEFAULT_FONT = FontFace()


def render_text(text: str, scale: int = 4, padding: int = 8, font: FontFace = DEFAULT_FONT) -> ImageGray:
    """Render text onto a white canvas with black glyph pixels.

    Each character occupies a band of 8*scale pixels; spaces render as
    blank bands. Output size is exactly
    (len(text)*8*scale + 2*padding) x (8*scale + 2*padding).
    """
    if not text:
        raise EmptyText("cannot render empty text")
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if padding < 0:
        raise ValueError(f"padding must be >= 0, got {padding}")
    for c in text:
        if c != " " and not font.has_glyph(c):
            raise UnsupportedChar(c)

    gw, gh = font.glyph_width, font.glyph_height
    width = len(text) * gw * scale + 2 * padding
    height = gh * scale + 2 * padding
    canvas = np.full((height, width), 255, dtype=np.uint8)

    for i, c in enumerate(text):
        if c == " ":
            continue
        bitmap = np.asarray(font.glyphs[c], dtype=np.uint8)
        block = np.kron(bitmap, np.ones((scale, scale), dtype=np.uint8))
        x0 = padding + i * gw * scale
        region = canvas[padding : padding + gh * scale, x0 : x0 + gw * scale]
        region[block == 1] = 0

    return ImageGray.from_array(canvas)


def write_ppm(img: ImageGray) -> bytes:
    """Serialize as binary PGM (P5, maxval 255): bit-exact fixture format."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels


def read_ppm(data: bytes) -> ImageGray:
    """Parse exactly the binary PGM form produced by write_ppm."""
    if not data.startswith(b"P5"):
        raise MalformedHeader("not a binary PGM (P5) stream")
    # Tokenize: magic, width, height, maxval, then a single whitespace byte
    # before the pixel payload.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedHeader("incomplete PGM header")
        tokens.append(data[start:pos])
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeader("missing separator after maxval")
    pos += 1

    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise MalformedHeader(f"non-numeric PGM header field: {exc}") from None
    if maxval != 255:
        raise UnsupportedMaxval(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise MalformedHeader(f"invalid dimensions {width}x{height}")

    payload = data[pos:]
    if len(payload) != width * height:
        raise TruncatedPixelData(
            f"expected {width * height} pixel bytes, found {len(payload)}"
        )
    return ImageGray(width, height, payload)


PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _png_chunk(tag: bytes, body: bytes) -> bytes:
    chunk = tag + body
    return struct.pack(">I", len(body)) + chunk + struct.pack(">I", zlib.crc32(chunk))


def write_png(img: ImageGray) -> bytes:
    """Encode as 8-bit grayscale, non-interlaced PNG (deterministic bytes)."""
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, 0, 0, 0, 0)
    # Filter type 0 (None) prepended to every scanline.
    raw = bytearray()
    stride = img.width
    for y in range(img.height):
        raw.append(0)
        raw += img.pixels[y * stride : (y + 1) * stride]
    idat = zlib.compress(bytes(raw), 9)
    return (
        PNG_SIGNATURE
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", idat)
        + _png_chunk(b"IEND", b"")
    )


def read_png(data: bytes) -> ImageGray:
    """Decode a PNG to grayscale via Pillow (conforming reference decoder)."""
    from PIL import Image

    with Image.open(io.BytesIO(data)) as im:
        gray = im.convert("L")
        return ImageGray(gray.width, gray.height, gray.tobytes())


def load_image(path: str | Path) -> ImageGray:
    """Read a .pgm or .png file, dispatching on the extension."""
    path = Path(path)
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return read_ppm(data)
    if suffix == ".png":
        return read_png(data)
    raise ValueError(f"unsupported image extension: {path.suffix!r} (use .pgm or .png)")


def save_image(img: ImageGray, path: str | Path) -> None:
    """Write a .pgm or .png file, dispatching on the extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        path.write_bytes(write_ppm(img))
    elif suffix == ".png":
        path.write_bytes(write_png(img))
    else:
        raise ValueError(f"unsupported image extension: {path.suffix!r} (use .pgm or .png)")
