"""Binary sidecar files holding a subband pyramid.

Layout: magic ``WSWT``, little-endian uint32 header length, a JSON header
(filter name, level count, plane count and shape, dtype), then the subband
planes as flat little-endian float64 in pyramid order.
"""

import json
import struct

import numpy as np

from .errors import DataFormatError
from .wavelet import SubbandPyramid

_MAGIC = b"WSWT"


def write_pyramid(pyramid: SubbandPyramid, path) -> None:
    planes = [np.asarray(p, dtype=np.float64) for p in pyramid.subbands]
    header = {
        "filter": pyramid.filter_name,
        "levels": pyramid.levels,
        "count": len(planes),
        "shape": list(planes[0].shape),
        "dtype": "<f8",
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for plane in planes:
            fh.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())


def read_pyramid(path) -> SubbandPyramid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise DataFormatError(f"{path}: not a subband sidecar (bad magic)")
    if len(raw) < 8:
        raise DataFormatError(f"{path}: truncated header")
    (hlen,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: corrupt sidecar header") from exc
    if header.get("dtype") != "<f8":
        raise DataFormatError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    count = int(header["count"])
    levels = int(header["levels"])
    if count != 3 * levels + 1:
        raise DataFormatError(
            f"{path}: {levels}-level sidecar must hold {3 * levels + 1} "
            f"planes, header says {count}"
        )
    shape = tuple(int(v) for v in header["shape"])
    plane_bytes = int(np.prod(shape)) * 8
    offset = 8 + hlen
    planes = []
    for _ in range(count):
        chunk = raw[offset:offset + plane_bytes]
        if len(chunk) != plane_bytes:
            raise DataFormatError(f"{path}: truncated plane data")
        planes.append(np.frombuffer(chunk, dtype="<f8").reshape(shape).copy())
        offset += plane_bytes
    if offset != len(raw):
        raise DataFormatError(f"{path}: trailing bytes after plane data")
    return SubbandPyramid(levels=levels, filter_name=header["filter"],
                          subbands=planes)
