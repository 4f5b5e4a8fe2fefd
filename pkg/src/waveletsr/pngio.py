"""Minimal PNG reader/writer for 8- and 16-bit grayscale and RGB images.

Only what the evaluation harness needs: color types 0 (gray) and 2 (RGB)
at bit depths 8 and 16, no interlacing.  The reader handles all five
scanline filters and verifies chunk CRCs; the writer emits unfiltered
scanlines.  Pixel data crosses the API as float64 in [0, 1], shaped
``(channels, height, width)``.
"""

import struct
import zlib

import numpy as np

from .errors import DataFormatError, ShapeError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunks(raw: bytes, path):
    pos = len(_SIGNATURE)
    while pos < len(raw):
        if pos + 8 > len(raw):
            raise DataFormatError(f"{path}: truncated chunk header")
        (length,) = struct.unpack(">I", raw[pos:pos + 4])
        ctype = raw[pos + 4:pos + 8]
        data = raw[pos + 8:pos + 8 + length]
        if len(data) != length or pos + 12 + length > len(raw):
            raise DataFormatError(f"{path}: truncated chunk {ctype!r}")
        (crc,) = struct.unpack(">I", raw[pos + 8 + length:pos + 12 + length])
        if crc != zlib.crc32(ctype + data):
            raise DataFormatError(f"{path}: CRC mismatch in chunk {ctype!r}")
        yield ctype, data
        pos += 12 + length


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(ftype: int, cur: bytearray, prev: bytes, bpp: int, path):
    if ftype == 0:
        return
    if ftype == 1:
        for i in range(bpp, len(cur)):
            cur[i] = (cur[i] + cur[i - bpp]) & 0xFF
    elif ftype == 2:
        for i in range(len(cur)):
            cur[i] = (cur[i] + prev[i]) & 0xFF
    elif ftype == 3:
        for i in range(len(cur)):
            left = cur[i - bpp] if i >= bpp else 0
            cur[i] = (cur[i] + (left + prev[i]) // 2) & 0xFF
    elif ftype == 4:
        for i in range(len(cur)):
            left = cur[i - bpp] if i >= bpp else 0
            diag = prev[i - bpp] if i >= bpp else 0
            cur[i] = (cur[i] + _paeth(left, prev[i], diag)) & 0xFF
    else:
        raise DataFormatError(f"{path}: unknown scanline filter {ftype}")


def read_png(path) -> tuple:
    """Decode a PNG file; returns ``(image, bit_depth)``.

    ``image`` is float64 in [0, 1] shaped ``(channels, height, width)``
    with 1 channel for grayscale and 3 for RGB.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _SIGNATURE:
        raise DataFormatError(f"{path}: not a PNG file")

    header = None
    idat = bytearray()
    for ctype, data in _chunks(raw, path):
        if ctype == b"IHDR":
            header = struct.unpack(">IIBBBBB", data)
        elif ctype == b"IDAT":
            idat.extend(data)
        elif ctype == b"IEND":
            break
    if header is None:
        raise DataFormatError(f"{path}: missing IHDR chunk")
    width, height, depth, color, comp, filt, interlace = header
    if comp != 0 or filt != 0:
        raise DataFormatError(f"{path}: unsupported compression/filter method")
    if interlace != 0:
        raise DataFormatError(f"{path}: interlaced PNGs are not supported")
    if color == 0:
        channels = 1
    elif color == 2:
        channels = 3
    else:
        raise DataFormatError(
            f"{path}: unsupported color type {color}; only grayscale and RGB"
        )
    if depth not in (8, 16):
        raise DataFormatError(f"{path}: unsupported bit depth {depth}")
    if not idat:
        raise DataFormatError(f"{path}: missing IDAT data")

    try:
        stream = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise DataFormatError(f"{path}: corrupt IDAT stream") from exc

    bpp = channels * depth // 8
    stride = width * bpp
    if len(stream) != height * (stride + 1):
        raise DataFormatError(f"{path}: pixel data has wrong length")

    rows = []
    prev = bytes(stride)
    for r in range(height):
        off = r * (stride + 1)
        cur = bytearray(stream[off + 1:off + 1 + stride])
        _unfilter(stream[off], cur, prev, bpp, path)
        rows.append(bytes(cur))
        prev = rows[-1]

    flat = b"".join(rows)
    if depth == 8:
        arr = np.frombuffer(flat, dtype=np.uint8).astype(np.float64) / 255.0
    else:
        arr = np.frombuffer(flat, dtype=">u2").astype(np.float64) / 65535.0
    img = arr.reshape(height, width, channels).transpose(2, 0, 1)
    return img, depth


def write_png(path, image, bit_depth: int = 8) -> None:
    """Encode ``(channels, height, width)`` float64 data in [0, 1].

    Values are clipped and quantized to the requested depth; 1 channel
    writes grayscale, 3 channels RGB.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[None]
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise ShapeError(
            f"expected (1|3, h, w) image data, got shape {image.shape}"
        )
    if bit_depth not in (8, 16):
        raise ShapeError(f"bit depth must be 8 or 16, got {bit_depth}")
    channels, height, width = image.shape
    peak = (1 << bit_depth) - 1
    q = np.rint(np.clip(image, 0.0, 1.0) * peak)
    pixels = q.transpose(1, 2, 0)
    if bit_depth == 8:
        payload = pixels.astype(np.uint8).tobytes()
    else:
        payload = pixels.astype(">u2").tobytes()

    stride = width * channels * bit_depth // 8
    body = bytearray()
    for r in range(height):
        body.append(0)
        body.extend(payload[r * stride:(r + 1) * stride])

    color = 0 if channels == 1 else 2
    ihdr = struct.pack(">IIBBBBB", width, height, bit_depth, color, 0, 0, 0)

    def chunk(ctype: bytes, data: bytes) -> bytes:
        return struct.pack(">I", len(data)) + ctype + data \
            + struct.pack(">I", zlib.crc32(ctype + data))

    with open(path, "wb") as fh:
        fh.write(_SIGNATURE)
        fh.write(chunk(b"IHDR", ihdr))
        fh.write(chunk(b"IDAT", zlib.compress(bytes(body), 6)))
        fh.write(chunk(b"IEND", b""))
