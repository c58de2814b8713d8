"""GeoTIFF subset reader/writer and band-manifest ingestion.

Supported subset: little-endian classic TIFF, first IFD only, striped or
tiled layout, chunky or planar sample order, Compression 1 (none) or
8/32946 (deflate), samples float32 / uint8 / uint16 (integers promoted to
float32 on load), ModelPixelScale + ModelTiepoint for the geotransform,
GDAL nodata ASCII tag honored when present. Anything else raises
FormatError naming the offending tag.

The band manifest is a JSON sidecar: {"bands": {"<index>": "<name>", ...},
"pixel_size_m": <number>} with indices counted from zero.
"""
from __future__ import annotations

import json
import math
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import FormatError, ManifestError
from .grid import Geotransform, GridF32, RasterStack

_TAG_WIDTH = 256
_TAG_HEIGHT = 257
_TAG_BITS = 258
_TAG_COMPRESSION = 259
_TAG_PHOTOMETRIC = 262
_TAG_STRIP_OFFSETS = 273
_TAG_SAMPLES = 277
_TAG_ROWS_PER_STRIP = 278
_TAG_STRIP_COUNTS = 279
_TAG_PLANAR = 284
_TAG_PREDICTOR = 317
_TAG_TILE_WIDTH = 322
_TAG_TILE_HEIGHT = 323
_TAG_TILE_OFFSETS = 324
_TAG_TILE_COUNTS = 325
_TAG_SAMPLE_FORMAT = 339
_TAG_PIXEL_SCALE = 33550
_TAG_TIEPOINT = 33922
_TAG_GDAL_NODATA = 42113

_TYPE_ASCII = 2
_TYPE_SHORT = 3
_TYPE_LONG = 4
_TYPE_DOUBLE = 12

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}


def _parse_ifd_values(raw: bytes, ftype: int, count: int):
    if ftype == _TYPE_ASCII:
        return raw.split(b"\x00", 1)[0].decode("latin-1")
    if ftype == _TYPE_SHORT:
        return struct.unpack(f"<{count}H", raw)
    if ftype == _TYPE_LONG:
        return struct.unpack(f"<{count}I", raw)
    if ftype == _TYPE_DOUBLE:
        return struct.unpack(f"<{count}d", raw)
    if ftype == 1:
        return struct.unpack(f"<{count}B", raw)
    return None  # unparsed tag types are only an error if the tag matters


def _read_ifd(data: bytes, offset: int) -> dict[int, tuple]:
    if offset + 2 > len(data):
        raise FormatError("truncated IFD")
    (n_entries,) = struct.unpack_from("<H", data, offset)
    entries: dict[int, tuple] = {}
    pos = offset + 2
    for _ in range(n_entries):
        if pos + 12 > len(data):
            raise FormatError("truncated IFD entry")
        tag, ftype, count = struct.unpack_from("<HHI", data, pos)
        unit = _TYPE_SIZES.get(ftype)
        if unit is None:
            pos += 12
            continue
        nbytes = unit * count
        if nbytes <= 4:
            raw = data[pos + 8 : pos + 8 + nbytes]
        else:
            (val_off,) = struct.unpack_from("<I", data, pos + 8)
            if val_off + nbytes > len(data):
                raise FormatError(f"tag {tag} value runs past end of file")
            raw = data[val_off : val_off + nbytes]
        entries[tag] = (ftype, count, _parse_ifd_values(raw, ftype, count))
        pos += 12
    return entries


def _scalar(entries: dict, tag: int, default=None):
    if tag not in entries:
        return default
    values = entries[tag][2]
    if isinstance(values, str):
        return values
    return values[0]


def _sequence(entries: dict, tag: int):
    values = entries[tag][2]
    return list(values)


def _decompress(chunk: bytes, compression: int, expected: int) -> bytes:
    if compression == 1:
        out = chunk
    else:
        try:
            out = zlib.decompress(chunk)
        except zlib.error as exc:
            raise FormatError(f"deflate strip/tile failed to decompress: {exc}") from exc
    if len(out) < expected:
        raise FormatError(
            f"strip/tile holds {len(out)} bytes, expected at least {expected}"
        )
    return out[:expected]


def read_geotiff(path: str | Path) -> tuple[np.ndarray, Geotransform | None, float | None]:
    """Read a GeoTIFF into (bands, height, width) float32 plus geo metadata.

    Returns the band cube (integers promoted to float32), the geotransform
    when ModelPixelScale/ModelTiepoint are present (None otherwise), and the
    GDAL nodata value if tagged.
    """
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise FormatError("file too short to be a TIFF")
    if data[:2] == b"MM":
        raise FormatError("big-endian byte order unsupported (little-endian only)")
    if data[:2] != b"II":
        raise FormatError("not a TIFF file (bad byte-order mark)")
    (magic,) = struct.unpack_from("<H", data, 2)
    if magic == 43:
        raise FormatError("BigTIFF unsupported (classic TIFF only)")
    if magic != 42:
        raise FormatError(f"bad TIFF magic {magic}")
    (ifd_offset,) = struct.unpack_from("<I", data, 4)
    entries = _read_ifd(data, ifd_offset)

    width = _scalar(entries, _TAG_WIDTH)
    height = _scalar(entries, _TAG_HEIGHT)
    if not width or not height:
        raise FormatError("missing ImageWidth/ImageLength tags")
    samples = int(_scalar(entries, _TAG_SAMPLES, 1))

    compression = int(_scalar(entries, _TAG_COMPRESSION, 1))
    if compression not in (1, 8, 32946):
        raise FormatError(
            f"unsupported Compression tag value {compression}; "
            "supported: 1 (none), 8/32946 (deflate)"
        )
    predictor = int(_scalar(entries, _TAG_PREDICTOR, 1))
    if predictor != 1:
        raise FormatError(f"unsupported Predictor tag value {predictor}")

    bits = _sequence(entries, _TAG_BITS) if _TAG_BITS in entries else [1]
    if len(set(bits)) != 1:
        raise FormatError(f"mixed BitsPerSample {bits} unsupported")
    bit = int(bits[0])
    fmts = (
        _sequence(entries, _TAG_SAMPLE_FORMAT) if _TAG_SAMPLE_FORMAT in entries else [1]
    )
    if len(set(fmts)) != 1:
        raise FormatError(f"mixed SampleFormat {fmts} unsupported")
    fmt = int(fmts[0])
    if (bit, fmt) == (32, 3):
        dtype = np.dtype("<f4")
    elif (bit, fmt) == (8, 1):
        dtype = np.dtype("u1")
    elif (bit, fmt) == (16, 1):
        dtype = np.dtype("<u2")
    else:
        raise FormatError(
            f"unsupported BitsPerSample={bit}/SampleFormat={fmt}; "
            "supported: float32, uint8, uint16"
        )

    planar = int(_scalar(entries, _TAG_PLANAR, 1))
    if planar not in (1, 2):
        raise FormatError(f"unsupported PlanarConfiguration tag value {planar}")

    cube = np.zeros((samples, height, width), dtype=dtype)
    itemsize = dtype.itemsize

    if _TAG_TILE_OFFSETS in entries:
        tw = int(_scalar(entries, _TAG_TILE_WIDTH))
        th = int(_scalar(entries, _TAG_TILE_HEIGHT))
        offsets = _sequence(entries, _TAG_TILE_OFFSETS)
        counts = _sequence(entries, _TAG_TILE_COUNTS)
        across = (width + tw - 1) // tw
        down = (height + th - 1) // th
        per_plane = across * down
        n_planes = samples if planar == 2 else 1
        chans = 1 if planar == 2 else samples
        if len(offsets) != per_plane * n_planes:
            raise FormatError(
                f"TileOffsets holds {len(offsets)} entries, expected {per_plane * n_planes}"
            )
        for idx, (off, cnt) in enumerate(zip(offsets, counts)):
            plane, within = divmod(idx, per_plane)
            ty, tx = divmod(within, across)
            raw = _decompress(data[off : off + cnt], compression, tw * th * chans * itemsize)
            tile = np.frombuffer(raw, dtype=dtype).reshape(th, tw, chans)
            y0, x0 = ty * th, tx * tw
            y1, x1 = min(y0 + th, height), min(x0 + tw, width)
            block = tile[: y1 - y0, : x1 - x0, :]
            if planar == 2:
                cube[plane, y0:y1, x0:x1] = block[:, :, 0]
            else:
                cube[:, y0:y1, x0:x1] = np.moveaxis(block, 2, 0)
    elif _TAG_STRIP_OFFSETS in entries:
        offsets = _sequence(entries, _TAG_STRIP_OFFSETS)
        counts = _sequence(entries, _TAG_STRIP_COUNTS)
        rps = int(_scalar(entries, _TAG_ROWS_PER_STRIP, height))
        per_plane = (height + rps - 1) // rps
        n_planes = samples if planar == 2 else 1
        chans = 1 if planar == 2 else samples
        if len(offsets) != per_plane * n_planes:
            raise FormatError(
                f"StripOffsets holds {len(offsets)} entries, expected {per_plane * n_planes}"
            )
        for idx, (off, cnt) in enumerate(zip(offsets, counts)):
            plane, within = divmod(idx, per_plane)
            y0 = within * rps
            y1 = min(y0 + rps, height)
            raw = _decompress(
                data[off : off + cnt], compression, (y1 - y0) * width * chans * itemsize
            )
            rows = np.frombuffer(raw, dtype=dtype).reshape(y1 - y0, width, chans)
            if planar == 2:
                cube[plane, y0:y1, :] = rows[:, :, 0]
            else:
                cube[:, y0:y1, :] = np.moveaxis(rows, 2, 0)
    else:
        raise FormatError("missing StripOffsets/TileOffsets tags")

    gt = None
    if _TAG_PIXEL_SCALE in entries and _TAG_TIEPOINT in entries:
        sx, sy = _sequence(entries, _TAG_PIXEL_SCALE)[:2]
        if not math.isclose(sx, sy, rel_tol=1e-9):
            raise FormatError(
                f"non-square pixels in ModelPixelScale ({sx} x {sy}) unsupported"
            )
        tie = _sequence(entries, _TAG_TIEPOINT)
        if len(tie) < 6:
            raise FormatError("ModelTiepoint tag needs 6 values")
        i, j, _, x, y, _ = tie[:6]
        gt = Geotransform(
            origin_easting=x - i * sx, origin_northing=y + j * sy, pixel_size=sx
        )

    nodata = None
    if _TAG_GDAL_NODATA in entries:
        text = entries[_TAG_GDAL_NODATA][2]
        try:
            nodata = float(str(text).strip())
        except ValueError:
            raise FormatError(f"unparseable GDAL nodata tag {text!r}") from None

    if dtype != np.dtype("<f4"):
        cube = cube.astype(np.float32)
    return cube, gt, nodata


def _pack_values(ftype: int, values) -> bytes:
    if ftype == _TYPE_ASCII:
        return values.encode("latin-1") + b"\x00"
    n = len(values)
    if ftype == _TYPE_SHORT:
        return struct.pack(f"<{n}H", *values)
    if ftype == _TYPE_LONG:
        return struct.pack(f"<{n}I", *values)
    if ftype == _TYPE_DOUBLE:
        return struct.pack(f"<{n}d", *values)
    raise ValueError(f"unsupported write type {ftype}")


def write_geotiff(
    path: str | Path,
    bands: np.ndarray,
    geotransform: Geotransform | None = None,
    nodata: float | None = None,
    compression: str = "deflate",
    tile: tuple[int, int] | None = None,
) -> None:
    """Write a (bands, height, width) cube as float32 or uint8 GeoTIFF.

    Chunky (pixel-interleaved) layout, one strip per image unless `tile`
    gives a (tile_width, tile_height) pair. float64 input is narrowed to
    float32; uint8 input stays uint8 (used for mask output).
    """
    cube = np.asarray(bands)
    if cube.ndim == 2:
        cube = cube[None, :, :]
    if cube.ndim != 3:
        raise ValueError(f"expected (bands, h, w) array, got shape {cube.shape}")
    if cube.dtype == np.uint8:
        dtype, bits, sfmt = np.dtype("u1"), 8, 1
    else:
        cube = cube.astype(np.float32)
        dtype, bits, sfmt = np.dtype("<f4"), 32, 3
    s, h, w = cube.shape
    if compression not in ("deflate", "none"):
        raise ValueError(f"compression must be 'deflate' or 'none', got {compression!r}")
    comp_code = 8 if compression == "deflate" else 1

    interleaved = np.ascontiguousarray(np.moveaxis(cube, 0, 2))  # (h, w, s)

    chunks: list[bytes] = []
    if tile is None:
        raw = interleaved.astype(dtype, copy=False).tobytes()
        chunks.append(zlib.compress(raw) if comp_code == 8 else raw)
    else:
        tw, th = tile
        for y0 in range(0, h, th):
            for x0 in range(0, w, tw):
                block = np.zeros((th, tw, s), dtype=dtype)
                y1, x1 = min(y0 + th, h), min(x0 + tw, w)
                block[: y1 - y0, : x1 - x0, :] = interleaved[y0:y1, x0:x1, :]
                raw = block.tobytes()
                chunks.append(zlib.compress(raw) if comp_code == 8 else raw)

    entries: list[tuple[int, int, list]] = [
        (_TAG_WIDTH, _TYPE_LONG, [w]),
        (_TAG_HEIGHT, _TYPE_LONG, [h]),
        (_TAG_BITS, _TYPE_SHORT, [bits] * s),
        (_TAG_COMPRESSION, _TYPE_SHORT, [comp_code]),
        (_TAG_PHOTOMETRIC, _TYPE_SHORT, [1]),
        (_TAG_SAMPLES, _TYPE_SHORT, [s]),
        (_TAG_PLANAR, _TYPE_SHORT, [1]),
        (_TAG_SAMPLE_FORMAT, _TYPE_SHORT, [sfmt] * s),
    ]
    if tile is None:
        entries.append((_TAG_STRIP_OFFSETS, _TYPE_LONG, [0]))
        entries.append((_TAG_ROWS_PER_STRIP, _TYPE_LONG, [h]))
        entries.append((_TAG_STRIP_COUNTS, _TYPE_LONG, [len(chunks[0])]))
        offsets_tag = _TAG_STRIP_OFFSETS
    else:
        tw, th = tile
        entries.append((_TAG_TILE_WIDTH, _TYPE_LONG, [tw]))
        entries.append((_TAG_TILE_HEIGHT, _TYPE_LONG, [th]))
        entries.append((_TAG_TILE_OFFSETS, _TYPE_LONG, [0] * len(chunks)))
        entries.append((_TAG_TILE_COUNTS, _TYPE_LONG, [len(c) for c in chunks]))
        offsets_tag = _TAG_TILE_OFFSETS
    if geotransform is not None:
        ps = geotransform.pixel_size
        entries.append((_TAG_PIXEL_SCALE, _TYPE_DOUBLE, [ps, ps, 0.0]))
        entries.append(
            (
                _TAG_TIEPOINT,
                _TYPE_DOUBLE,
                [0.0, 0.0, 0.0, geotransform.origin_easting, geotransform.origin_northing, 0.0],
            )
        )
    if nodata is not None:
        entries.append((_TAG_GDAL_NODATA, _TYPE_ASCII, repr(float(nodata))))
    entries.sort(key=lambda e: e[0])

    ifd_offset = 8
    ifd_size = 2 + 12 * len(entries) + 4
    ext_offset = ifd_offset + ifd_size
    packed = [_pack_values(t, v) for _, t, v in entries]
    ext_size = sum(len(p) + (len(p) & 1) for p in packed if len(p) > 4)
    data_offset = ext_offset + ext_size
    if data_offset & 1:
        data_offset += 1

    chunk_offsets = []
    pos = data_offset
    for c in chunks:
        chunk_offsets.append(pos)
        pos += len(c) + (len(c) & 1)

    for i, (tag, ftype, values) in enumerate(entries):
        if tag == offsets_tag:
            entries[i] = (tag, ftype, chunk_offsets)
            packed[i] = _pack_values(ftype, chunk_offsets)

    out = bytearray()
    out += struct.pack("<2sHI", b"II", 42, ifd_offset)
    out += struct.pack("<H", len(entries))
    ext_pos = ext_offset
    ext_blob = bytearray()
    for (tag, ftype, values), blob in zip(entries, packed):
        count = len(values) if not isinstance(values, str) else len(blob)
        out += struct.pack("<HHI", tag, ftype, count)
        if len(blob) <= 4:
            out += blob.ljust(4, b"\x00")
        else:
            out += struct.pack("<I", ext_pos)
            ext_blob += blob
            if len(blob) & 1:
                ext_blob += b"\x00"
            ext_pos += len(blob) + (len(blob) & 1)
    out += struct.pack("<I", 0)  # no further IFDs
    out += ext_blob
    while len(out) < data_offset:
        out += b"\x00"
    for c in chunks:
        out += c
        if len(c) & 1:
            out += b"\x00"
    Path(path).write_bytes(bytes(out))


def read_manifest(path: str | Path) -> tuple[dict[int, str], float | None]:
    """Parse the band manifest sidecar; returns (index -> name, pixel_size_m)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or "bands" not in doc:
        raise ManifestError("manifest must be a JSON object with a 'bands' map")
    names: dict[int, str] = {}
    for key, name in doc["bands"].items():
        try:
            idx = int(key)
        except (TypeError, ValueError):
            raise ManifestError(f"band index {key!r} is not an integer") from None
        if idx < 0:
            raise ManifestError(f"band index {idx} is negative")
        names[idx] = str(name)
    if not names:
        raise ManifestError("manifest names no bands")
    ps = doc.get("pixel_size_m")
    return names, (float(ps) if ps is not None else None)


def write_manifest(path: str | Path, names: list[str], pixel_size: float) -> None:
    doc = {"bands": {str(i): n for i, n in enumerate(names)}, "pixel_size_m": pixel_size}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_stack(raster_path: str | Path, manifest_path: str | Path) -> RasterStack:
    """Read a GeoTIFF plus its band manifest into a RasterStack.

    The manifest must name exactly the band indices present in the file.
    Geotransform comes from the GeoTIFF tags; if absent, the manifest's
    pixel_size_m fills in with origin (0, height * pixel_size). When both
    exist they must agree.
    """
    cube, gt, nodata = read_geotiff(raster_path)
    names, manifest_ps = read_manifest(manifest_path)
    n = cube.shape[0]
    if sorted(names) != list(range(n)):
        raise ManifestError(
            f"manifest names bands {sorted(names)} but file has {n} band(s) "
            f"(expected indices 0..{n - 1})"
        )
    if gt is None:
        if manifest_ps is None:
            raise ManifestError(
                "raster has no ModelPixelScale/ModelTiepoint tags and the "
                "manifest gives no pixel_size_m"
            )
        gt = Geotransform(0.0, cube.shape[1] * manifest_ps, manifest_ps)
    elif manifest_ps is not None and not math.isclose(
        gt.pixel_size, manifest_ps, rel_tol=1e-6
    ):
        raise ManifestError(
            f"manifest pixel_size_m={manifest_ps} disagrees with raster "
            f"pixel size {gt.pixel_size}"
        )
    bands = {names[i]: GridF32(cube[i], nodata=nodata) for i in range(n)}
    return RasterStack(geotransform=gt, bands=bands)


def save_stack(
    stack: RasterStack,
    path: str | Path,
    compression: str = "deflate",
    tile: tuple[int, int] | None = None,
) -> None:
    """Write a stack's bands (iteration order) as float32 GeoTIFF.

    The nodata tag is taken from the first band that declares one; GeoTIFF
    stores a single file-wide nodata value.
    """
    cube = np.stack([g.values for g in stack.bands.values()])
    nodata = next((g.nodata for g in stack.bands.values() if g.nodata is not None), None)
    write_geotiff(
        path,
        cube,
        geotransform=stack.geotransform,
        nodata=nodata,
        compression=compression,
        tile=tile,
    )
