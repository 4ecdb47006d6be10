"""Minimal OpenEXR 2.0 scanline codec.

Supports what the pipeline needs and nothing more: single-part scanline
files, RGB(A) channels of type FLOAT or HALF, compression NONE, ZIPS or
ZIP, increasing line order. Written files are 32-bit float RGB so that
linear renders round-trip bit-exactly.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = 0x01312F76

# compression ids from the OpenEXR spec
COMP_NONE = 0
COMP_ZIPS = 2
COMP_ZIP = 3

_PIXTYPE_UINT = 0
_PIXTYPE_HALF = 1
_PIXTYPE_FLOAT = 2

_TYPE_SIZE = {_PIXTYPE_UINT: 4, _PIXTYPE_HALF: 2, _PIXTYPE_FLOAT: 4}
_TYPE_DTYPE = {
    _PIXTYPE_UINT: np.dtype("<u4"),
    _PIXTYPE_HALF: np.dtype("<f2"),
    _PIXTYPE_FLOAT: np.dtype("<f4"),
}


class ExrError(ValueError):
    """Malformed or unsupported EXR file."""


def _predictor_decode(raw: bytes) -> bytes:
    d = np.frombuffer(raw, np.uint8)
    n = d.size
    # running-sum delta decode, then de-split the two interleaved halves
    t = (np.cumsum(d.astype(np.uint64)) - 128 * np.arange(n, dtype=np.uint64)).astype(np.uint8)
    out = np.empty(n, np.uint8)
    half = (n + 1) // 2
    out[0::2] = t[:half]
    out[1::2] = t[half:]
    return out.tobytes()


def _predictor_encode(raw: bytes) -> bytes:
    d = np.frombuffer(raw, np.uint8)
    n = d.size
    half = (n + 1) // 2
    s = np.empty(n, np.uint8)
    s[:half] = d[0::2]
    s[half:] = d[1::2]
    t = np.empty(n, np.uint8)
    t[0] = s[0]
    t[1:] = (s[1:].astype(np.int16) - s[:-1].astype(np.int16) + 128).astype(np.uint8)
    return t.tobytes()


def _read_nullterm(buf: bytes, pos: int) -> tuple[str, int]:
    end = buf.index(b"\x00", pos)
    return buf[pos:end].decode("latin-1"), end + 1


def _parse_channels(data: bytes) -> list[tuple[str, int]]:
    channels = []
    pos = 0
    while data[pos] != 0:
        name, pos = _read_nullterm(data, pos)
        pixtype, = struct.unpack_from("<i", data, pos)
        # skip pLinear + reserved + x/y sampling
        xs, ys = struct.unpack_from("<ii", data, pos + 8)
        if (xs, ys) != (1, 1):
            raise ExrError("subsampled channels not supported")
        pos += 16
        channels.append((name, pixtype))
    return channels


def read_exr(path) -> np.ndarray:
    """Load a scanline EXR as float32 (height, width, 3) RGB."""
    with open(path, "rb") as f:
        buf = f.read()

    magic, version = struct.unpack_from("<ii", buf, 0)
    if magic != MAGIC:
        raise ExrError(f"{path}: not an EXR file")
    if version & 0x200:
        raise ExrError(f"{path}: tiled EXR not supported")
    if version & 0x1000 or version & 0x800:
        raise ExrError(f"{path}: multi-part/deep EXR not supported")

    pos = 8
    attrs: dict[str, bytes] = {}
    while buf[pos] != 0:
        name, pos = _read_nullterm(buf, pos)
        _, pos = _read_nullterm(buf, pos)  # attribute type
        size, = struct.unpack_from("<i", buf, pos)
        pos += 4
        attrs[name] = buf[pos:pos + size]
        pos += size
    pos += 1

    for req in ("channels", "compression", "dataWindow", "lineOrder"):
        if req not in attrs:
            raise ExrError(f"{path}: missing {req} attribute")

    channels = _parse_channels(attrs["channels"])
    compression = attrs["compression"][0]
    if compression not in (COMP_NONE, COMP_ZIPS, COMP_ZIP):
        raise ExrError(f"{path}: unsupported compression id {compression}")
    if attrs["lineOrder"][0] != 0:
        raise ExrError(f"{path}: only increasing line order supported")

    xmin, ymin, xmax, ymax = struct.unpack("<iiii", attrs["dataWindow"])
    width = xmax - xmin + 1
    height = ymax - ymin + 1
    if width <= 0 or height <= 0:
        raise ExrError(f"{path}: bad data window")

    names = [c[0] for c in channels]
    if not {"R", "G", "B"}.issubset(names):
        raise ExrError(f"{path}: need R,G,B channels, found {names}")
    for _, pixtype in channels:
        if pixtype not in (_PIXTYPE_HALF, _PIXTYPE_FLOAT, _PIXTYPE_UINT):
            raise ExrError(f"{path}: unknown pixel type {pixtype}")

    lines_per_block = 16 if compression == COMP_ZIP else 1
    nblocks = (height + lines_per_block - 1) // lines_per_block
    offsets = np.frombuffer(buf, "<u8", nblocks, pos)

    row_bytes = sum(_TYPE_SIZE[t] * width for _, t in channels)
    planes = {name: np.empty((height, width), _TYPE_DTYPE[t]) for name, t in channels}

    for b in range(nblocks):
        p = int(offsets[b])
        y, size = struct.unpack_from("<ii", buf, p)
        p += 8
        data = buf[p:p + size]
        rows = min(lines_per_block, height - (y - ymin))
        expect = row_bytes * rows
        if compression != COMP_NONE and size != expect:
            data = _predictor_decode(zlib.decompress(data))
        if len(data) != expect:
            raise ExrError(f"{path}: scanline block size mismatch")
        off = 0
        for r in range(rows):
            row = y - ymin + r
            for name, pixtype in channels:
                nb = _TYPE_SIZE[pixtype] * width
                planes[name][row] = np.frombuffer(data, _TYPE_DTYPE[pixtype], width, off)
                off += nb

    rgb = np.stack([planes["R"], planes["G"], planes["B"]], axis=-1)
    return rgb.astype(np.float32)


def write_exr(path, rgb: np.ndarray, compression: int = COMP_NONE) -> None:
    """Write float32 RGB as a single-part scanline EXR (FLOAT channels)."""
    rgb = np.ascontiguousarray(rgb, dtype="<f4")
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected (height, width, 3) array")
    height, width = rgb.shape[:2]
    if compression not in (COMP_NONE, COMP_ZIPS, COMP_ZIP):
        raise ValueError(f"unsupported compression id {compression}")

    def attr(name: str, typ: str, value: bytes) -> bytes:
        return (name.encode() + b"\x00" + typ.encode() + b"\x00"
                + struct.pack("<i", len(value)) + value)

    chlist = b""
    for name in ("B", "G", "R"):  # alphabetical order required
        chlist += name.encode() + b"\x00" + struct.pack("<iBBBBii", _PIXTYPE_FLOAT, 0, 0, 0, 0, 1, 1)
    chlist += b"\x00"
    box = struct.pack("<iiii", 0, 0, width - 1, height - 1)

    header = b"".join([
        struct.pack("<ii", MAGIC, 2),
        attr("channels", "chlist", chlist),
        attr("compression", "compression", bytes([compression])),
        attr("dataWindow", "box2i", box),
        attr("displayWindow", "box2i", box),
        attr("lineOrder", "lineOrder", b"\x00"),
        attr("pixelAspectRatio", "float", struct.pack("<f", 1.0)),
        attr("screenWindowCenter", "v2f", struct.pack("<ff", 0.0, 0.0)),
        attr("screenWindowWidth", "float", struct.pack("<f", 1.0)),
        b"\x00",
    ])

    lines_per_block = 16 if compression == COMP_ZIP else 1
    nblocks = (height + lines_per_block - 1) // lines_per_block

    chunks = []
    for b in range(nblocks):
        y0 = b * lines_per_block
        rows = min(lines_per_block, height - y0)
        block = b"".join(
            ch.tobytes()
            for r in range(rows)
            for ch in (rgb[y0 + r, :, 2], rgb[y0 + r, :, 1], rgb[y0 + r, :, 0])
        )
        if compression != COMP_NONE:
            packed = zlib.compress(_predictor_encode(block))
            if len(packed) < len(block):
                block = packed
        chunks.append(struct.pack("<ii", y0, len(block)) + block)

    with open(path, "wb") as f:
        f.write(header)
        offset = len(header) + 8 * nblocks
        for c in chunks:
            f.write(struct.pack("<Q", offset))
            offset += len(c)
        for c in chunks:
            f.write(c)
