"""Patch codecs: the compact binary format and the flat CSV table.

Binary layout (big-endian)::

    b"MTPB" u8:version
    str:scheme_name str:scheme_hash u16:root u8:dimension u8:exact
    time        (exact: int num, int den | float: f64)
    frame       dimension x scalar
    varint:tile_count
    tile        u16:type scalar:scale dimension x scalar:offset varint:depth depth x varint:child

``int`` is a varint byte length followed by a signed two's-complement body,
``str`` a varint length followed by UTF-8, and ``scalar`` an ``int`` pair
(exact patches) or an f64 (float patches).
"""

from __future__ import annotations

import io
import struct
from fractions import Fraction
from pathlib import Path
from typing import List, Tuple

import pandas as pd

from ..core.errors import MultitileError
from .exact import format_rational, parse_rational
from .models import Patch, PatchMeta, PlacedTile, Scalar, TimePoint

MAGIC = b"MTPB"
VERSION = 1
CSV_COLUMNS = ["type", "scale_num", "scale_den", "offset_x", "offset_y", "depth", "path"]


class CodecError(MultitileError):
    pass


def _varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _bigint(value: int) -> bytes:
    length = (value.bit_length() + 8) // 8
    return _varint(length) + value.to_bytes(length, "big", signed=True)


def _text(value: str) -> bytes:
    raw = value.encode("utf-8")
    return _varint(len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.stream = io.BytesIO(data)

    def take(self, n: int) -> bytes:
        chunk = self.stream.read(n)
        if len(chunk) != n:
            raise CodecError("truncated patch file")
        return chunk

    def varint(self) -> int:
        shift = value = 0
        while True:
            byte = self.take(1)[0]
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7

    def bigint(self) -> int:
        return int.from_bytes(self.take(self.varint()), "big", signed=True)

    def text(self) -> str:
        return self.take(self.varint()).decode("utf-8")

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _scalar(value: Scalar, exact: bool) -> bytes:
    if exact:
        value = Fraction(value)
        return _bigint(value.numerator) + _bigint(value.denominator)
    return struct.pack(">d", float(value))


def _read_scalar(reader: _Reader, exact: bool) -> Scalar:
    if exact:
        numerator = reader.bigint()
        return Fraction(numerator, reader.bigint())
    return reader.unpack(">d")[0]


def encode_patch(patch: Patch) -> bytes:
    meta = patch.meta
    exact = meta.time.is_exact
    out = bytearray(MAGIC)
    out += struct.pack(">B", VERSION)
    out += _text(meta.scheme_name) + _text(meta.scheme_hash)
    out += struct.pack(">HBB", meta.root, meta.dimension, int(exact))
    out += _scalar(meta.time.u if exact else meta.time.approx, exact)
    for coordinate in meta.frame_offset:
        out += _scalar(coordinate, exact)
    out += _varint(len(patch.tiles))
    for tile in patch.tiles:
        out += struct.pack(">H", tile.type)
        out += _scalar(tile.scale, exact)
        for coordinate in tile.offset:
            out += _scalar(coordinate, exact)
        out += _varint(len(tile.path))
        for child in tile.path:
            out += _varint(child)
    return bytes(out)


def decode_patch(data: bytes) -> Patch:
    reader = _Reader(data)
    if reader.take(4) != MAGIC:
        raise CodecError("not a multitile patch file")
    (version,) = reader.unpack(">B")
    if version != VERSION:
        raise CodecError(f"unsupported patch format version {version}")
    name = reader.text()
    scheme_hash = reader.text()
    root, dimension, exact = reader.unpack(">HBB")
    exact = bool(exact)
    time_value = _read_scalar(reader, exact)
    time = TimePoint(u=time_value) if exact else TimePoint(approx=time_value)
    frame = tuple(_read_scalar(reader, exact) for _ in range(dimension))
    tiles: List[PlacedTile] = []
    for _ in range(reader.varint()):
        (type_id,) = reader.unpack(">H")
        scale = _read_scalar(reader, exact)
        offset = tuple(_read_scalar(reader, exact) for _ in range(dimension))
        path = tuple(reader.varint() for _ in range(reader.varint()))
        tiles.append(PlacedTile(type_id, scale, offset, path))
    meta = PatchMeta(name, scheme_hash, dimension, root, time, frame)
    return Patch(tuple(tiles), meta)


def write_patch(patch: Patch, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_patch(patch))


def read_patch(path: Path) -> Patch:
    return decode_patch(path.read_bytes())


def patch_frame(patch: Patch) -> pd.DataFrame:
    records = []
    for tile in patch.tiles:
        scale = Fraction(tile.scale) if patch.is_exact else tile.scale
        offset = [format_rational(c) if patch.is_exact else repr(c) for c in tile.offset]
        records.append(
            {
                "type": tile.type,
                "scale_num": scale.numerator if patch.is_exact else scale,
                "scale_den": scale.denominator if patch.is_exact else 1,
                "offset_x": offset[0],
                "offset_y": offset[1] if len(offset) > 1 else "",
                "depth": tile.depth,
                "path": ".".join(str(i) for i in tile.path),
            }
        )
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def write_patch_csv(patch: Patch, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    patch_frame(patch).to_csv(path, index=False)


def read_patch_csv(path: Path) -> List[PlacedTile]:
    """Tiles of an exact-mode CSV export (patch metadata is not part of the table)."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    tiles: List[PlacedTile] = []
    for row in df.itertuples(index=False):
        offset = [parse_rational(row.offset_x)]
        if row.offset_y:
            offset.append(parse_rational(row.offset_y))
        path_ = tuple(int(i) for i in row.path.split(".")) if row.path else ()
        scale = Fraction(int(row.scale_num), int(row.scale_den))
        tiles.append(PlacedTile(int(row.type), scale, tuple(offset), path_))
    return tiles
