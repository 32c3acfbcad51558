"""Tile persistence and ingestion.

Tiles live in a plain directory tree ``root/theme/scale/scene/x/y.<ext>``
next to one JSON manifest (``manifest.json``) that records the encoding mode,
per-(theme, scale, scene) coverage rectangles, and the capture date of every
stored tile. Writes go through temp-file + atomic rename so concurrent
readers always see either the old or the new complete blob.

A store is created either in production mode (jpeg, with gif for the topo
scales of footnote policy) or in lossless mode (png everywhere) so tests can
assert pixel-exact behavior.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NotFoundError, StoreIOError, ValidationError
from . import mosaic
from .grid import (
    SCALE_MAX,
    THEME_DRG,
    TILE_SIZE,
    UNKNOWN_DATE,
    TileId,
    TileMeta,
    tile_meta_geometry,
    tile_span,
    validate_scale,
    validate_theme,
    validate_zone,
)

ENCODINGS = mosaic.ENCODINGS
MEDIA_TYPES = mosaic.MEDIA_TYPES
FILL_VALUE = mosaic.FILL_VALUE

# Topo-map scale codes returned as GIF in production (2 m, 8 m, 32 m).
DRG_GIF_SCALES = (11, 13, 15)

MANIFEST_NAME = "manifest.json"

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def encoding_for(theme: int, scale: int, lossless: bool = False) -> str:
    """Encoding policy: DRG at the GIF scales -> gif, everything else jpeg;
    lossless stores use png throughout."""
    validate_theme(theme)
    validate_scale(scale)
    if lossless:
        return "png"
    if theme == THEME_DRG and scale in DRG_GIF_SCALES:
        return "gif"
    return "jpeg"


def encode_pixels(pixels: np.ndarray, encoding: str) -> bytes:
    return mosaic.encode(mosaic.Canvas(pixels), encoding)


def decode_pixels(data: bytes) -> np.ndarray:
    return mosaic.decode(data).pixels


@dataclass(frozen=True)
class TileBlob:
    id: TileId
    encoding: str
    data: bytes


@dataclass(frozen=True)
class RasterPlacement:
    """Where an ingested raster sits: UTM zone, SW-corner origin in meters,
    base scale code, and capture date (ISO yyyy-mm-dd or "unknown")."""

    zone: int
    origin_easting: float
    origin_northing: float
    scale: int
    capture_date: str = UNKNOWN_DATE

    def __post_init__(self):
        validate_zone(self.zone)
        validate_scale(self.scale)
        if self.capture_date != UNKNOWN_DATE and not _DATE_RE.match(self.capture_date):
            raise ValidationError(
                f"capture date must be yyyy-mm-dd or 'unknown', got {self.capture_date!r}",
                "captureDate",
            )


def _as_rgb(pixels: np.ndarray) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise ValidationError("raster must be uint8")
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"raster must be (H, W) or (H, W, 3), got {arr.shape}")
    return arr


class TileStore:
    """Directory-backed tile repository with a JSON manifest."""

    def __init__(self, root: str | Path, lossless: bool | None = None):
        self.root = Path(root)
        self._manifest_path = self.root / MANIFEST_NAME
        if self._manifest_path.exists():
            self._manifest = json.loads(self._manifest_path.read_text())
            if lossless is not None and bool(lossless) != self._manifest["lossless"]:
                raise ValidationError("store already exists with a different encoding mode")
        else:
            self.root.mkdir(parents=True, exist_ok=True)
            self._manifest = {"version": 1, "lossless": bool(lossless), "themes": {}}
            self._write_manifest()

    # -- manifest ----------------------------------------------------------

    @property
    def lossless(self) -> bool:
        return self._manifest["lossless"]

    def _write_manifest(self) -> None:
        tmp = self._manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(self._manifest, indent=1, sort_keys=True))
        os.replace(tmp, self._manifest_path)

    def _scene_entry(self, theme: int, scale: int, zone: int, create: bool = False):
        themes = self._manifest["themes"]
        t = themes.get(str(theme))
        if t is None:
            if not create:
                return None
            t = themes[str(theme)] = {"scales": {}}
        s = t["scales"].get(str(scale))
        if s is None:
            if not create:
                return None
            s = t["scales"][str(scale)] = {"scenes": {}}
        z = s["scenes"].get(str(zone))
        if z is None:
            if not create:
                return None
            z = s["scenes"][str(zone)] = {"coverage": None, "tiles": {}}
        return z

    def _index_tile(self, tile: TileId, date: str) -> None:
        entry = self._scene_entry(tile.theme, tile.scale, tile.scene, create=True)
        cov = entry["coverage"]
        if cov is None:
            entry["coverage"] = [tile.x, tile.y, tile.x, tile.y]
        else:
            cov[0] = min(cov[0], tile.x)
            cov[1] = min(cov[1], tile.y)
            cov[2] = max(cov[2], tile.x)
            cov[3] = max(cov[3], tile.y)
        entry["tiles"][f"{tile.x},{tile.y}"] = date

    def manifest_digest(self) -> str:
        return hashlib.sha256(self._manifest_path.read_bytes()).hexdigest()

    def themes(self) -> list[int]:
        return sorted(int(t) for t in self._manifest["themes"])

    def scales(self, theme: int) -> list[int]:
        t = self._manifest["themes"].get(str(theme))
        return sorted(int(s) for s in t["scales"]) if t else []

    def scenes(self, theme: int, scale: int) -> list[int]:
        t = self._manifest["themes"].get(str(theme), {"scales": {}})
        s = t["scales"].get(str(scale))
        return sorted(int(z) for z in s["scenes"]) if s else []

    def coverage(self, theme: int, scale: int, zone: int):
        """Tile-index bounding rectangle [min_x, min_y, max_x, max_y] or None."""
        entry = self._scene_entry(theme, scale, zone)
        return tuple(entry["coverage"]) if entry and entry["coverage"] else None

    def iter_tile_ids(self, theme: int, scale: int, zone: int):
        entry = self._scene_entry(theme, scale, zone)
        if not entry:
            return
        for key in sorted(entry["tiles"]):
            x, y = key.split(",")
            yield TileId(theme, scale, zone, int(x), int(y))

    def capture_date(self, tile: TileId) -> str:
        entry = self._scene_entry(tile.theme, tile.scale, tile.scene)
        if not entry:
            return UNKNOWN_DATE
        return entry["tiles"].get(f"{tile.x},{tile.y}", UNKNOWN_DATE)

    # -- tile I/O -----------------------------------------------------------

    def _tile_path(self, tile: TileId) -> Path:
        ext = encoding_for(tile.theme, tile.scale, self.lossless)
        return (
            self.root
            / str(tile.theme)
            / str(tile.scale)
            / str(tile.scene)
            / str(tile.x)
            / f"{tile.y}.{ext}"
        )

    def has_tile(self, tile: TileId) -> bool:
        return self._tile_path(tile).exists()

    def put_tile(self, blob: TileBlob, capture_date: str | None = None) -> None:
        """Store one encoded tile; read-your-write byte fidelity guaranteed.

        Atomic: on any failure the store (files and manifest) is unchanged.
        """
        expected = encoding_for(blob.id.theme, blob.id.scale, self.lossless)
        if blob.encoding != expected:
            raise ValidationError(
                f"encoding {blob.encoding!r} violates policy ({expected!r} for this "
                f"theme/scale/mode)",
                "encoding",
            )
        pixels = decode_pixels(blob.data)
        if pixels.shape[:2] != (TILE_SIZE, TILE_SIZE):
            raise ValidationError(
                f"tile must decode to {TILE_SIZE}x{TILE_SIZE} pixels, got "
                f"{pixels.shape[1]}x{pixels.shape[0]}"
            )
        date = capture_date if capture_date is not None else self.capture_date(blob.id)
        self._commit([(blob.id, blob.data, date)])

    def _commit(self, entries: list[tuple[TileId, bytes, str]]) -> None:
        """Write a batch of encoded tiles plus the manifest, all or nothing."""
        staged: list[tuple[Path, Path]] = []
        replaced: list[tuple[Path, bytes | None]] = []
        try:
            for tile, data, _date in entries:
                path = self._tile_path(tile)
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_bytes(data)
                staged.append((tmp, path))
            for tmp, path in staged:
                replaced.append((path, path.read_bytes() if path.exists() else None))
                os.replace(tmp, path)
            for tile, _data, date in entries:
                self._index_tile(tile, date)
            self._write_manifest()
        except Exception as exc:
            for path, previous in replaced:
                if previous is None:
                    path.unlink(missing_ok=True)
                else:
                    path.write_bytes(previous)
            for tmp, _path in staged:
                tmp.unlink(missing_ok=True)
            self._manifest = json.loads(self._manifest_path.read_text())
            raise StoreIOError(f"tile write failed, store rolled back: {exc}") from exc

    def get_tile(self, tile: TileId) -> TileBlob:
        """Stored bytes, unmodified; NotFoundError for holes in coverage."""
        path = self._tile_path(tile)
        if not path.exists():
            raise NotFoundError(f"no tile stored at {tile.key()}")
        ext = path.suffix.lstrip(".")
        return TileBlob(id=tile, encoding=ext, data=path.read_bytes())

    def get_tile_pixels(self, tile: TileId) -> np.ndarray | None:
        """Decoded tile or None when absent (callers render holes as fill)."""
        try:
            return decode_pixels(self.get_tile(tile).data)
        except NotFoundError:
            return None

    def get_tile_meta(self, tile: TileId) -> TileMeta:
        """Geometry is always computable; absent tiles get an unknown date."""
        geometry = tile_meta_geometry(tile)
        date = self.capture_date(tile)
        if date == UNKNOWN_DATE:
            return geometry
        return TileMeta(
            id=geometry.id,
            nw=geometry.nw,
            ne=geometry.ne,
            sw=geometry.sw,
            se=geometry.se,
            center=geometry.center,
            capture_date=date,
        )

    # -- ingestion and pyramid ----------------------------------------------

    def ingest_raster(
        self, pixels: np.ndarray, placement: RasterPlacement, theme: int
    ) -> int:
        """Cut a raster into base-scale tiles and store them, all or nothing.

        Raster row 0 is the northern edge; the placement origin is the SW
        corner, aligned to the base-scale tile grid.
        """
        validate_theme(theme)
        arr = _as_rgb(pixels)
        h, w = arr.shape[:2]
        if h % TILE_SIZE or w % TILE_SIZE:
            raise ValidationError(
                f"raster dimensions must be multiples of {TILE_SIZE}, got {w}x{h}"
            )
        span = tile_span(placement.scale)
        if placement.origin_easting % span or placement.origin_northing % span:
            raise ValidationError(
                "placement origin must be aligned to the base-scale tile grid"
            )
        x0 = int(placement.origin_easting // span)
        y0 = int(placement.origin_northing // span)
        cols, rows = w // TILE_SIZE, h // TILE_SIZE
        encoding = encoding_for(theme, placement.scale, self.lossless)
        entries = []
        for j in range(rows):  # j counts tile rows from the south
            for i in range(cols):
                window = arr[
                    (rows - 1 - j) * TILE_SIZE : (rows - j) * TILE_SIZE,
                    i * TILE_SIZE : (i + 1) * TILE_SIZE,
                ]
                tile = TileId(theme, placement.scale, placement.zone, x0 + i, y0 + j)
                entries.append((tile, encode_pixels(window, encoding), placement.capture_date))
        self._commit(entries)
        return len(entries)

    def build_pyramid_level(self, theme: int, from_scale: int) -> int:
        """Build scale ``from_scale + 1`` tiles from the level below.

        Each parent (X, Y) is assembled from children (2X, 2Y) .. (2X+1, 2Y+1),
        every child contributing a 2x2-box-mean 100x100 quadrant; missing
        children contribute mid-gray fill.
        """
        validate_theme(theme)
        to_scale = validate_scale(from_scale + 1)
        encoding = encoding_for(theme, to_scale, self.lossless)
        entries = []
        for zone in self.scenes(theme, from_scale):
            parents: dict[tuple[int, int], str] = {}
            for child in self.iter_tile_ids(theme, from_scale, zone):
                key = (child.x // 2, child.y // 2)
                date = self.capture_date(child)
                if date != UNKNOWN_DATE:
                    prev = parents.get(key, UNKNOWN_DATE)
                    parents[key] = date if prev == UNKNOWN_DATE else max(prev, date)
                else:
                    parents.setdefault(key, UNKNOWN_DATE)
            half = TILE_SIZE // 2
            for (px, py), date in sorted(parents.items()):
                canvas = np.full((TILE_SIZE, TILE_SIZE, 3), FILL_VALUE, dtype=np.uint8)
                for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1)):
                    child = TileId(theme, from_scale, zone, 2 * px + dx, 2 * py + dy)
                    src = self.get_tile_pixels(child)
                    if src is None:
                        continue
                    shrunk = _box_mean(src)
                    row0 = 0 if dy == 1 else half  # higher y is further north
                    canvas[row0 : row0 + half, dx * half : (dx + 1) * half] = shrunk
                parent = TileId(theme, to_scale, zone, px, py)
                entries.append((parent, encode_pixels(canvas, encoding), date))
        if entries:
            self._commit(entries)
        return len(entries)

    def _level_collapsed(self, theme: int, scale: int) -> bool:
        return all(
            len(list(self.iter_tile_ids(theme, scale, zone))) <= 1
            for zone in self.scenes(theme, scale)
        )

    def build_pyramid(self, theme: int) -> list[int]:
        """Build levels upward until a single tile covers each scene's extent.

        Returns the per-level tile counts, starting with the base level's.
        """
        scales = self.scales(theme)
        if not scales:
            return []
        base = scales[0]
        counts = [
            sum(len(list(self.iter_tile_ids(theme, base, z))) for z in self.scenes(theme, base))
        ]
        scale = base
        while not self._level_collapsed(theme, scale) and scale < SCALE_MAX:
            written = self.build_pyramid_level(theme, scale)
            if written == 0:
                break
            counts.append(written)
            scale += 1
        return counts


def _box_mean(pixels: np.ndarray) -> np.ndarray:
    """2x2 box mean with round-half-up, halving both dimensions."""
    h, w = pixels.shape[:2]
    blocks = pixels.reshape(h // 2, 2, w // 2, 2, 3).astype(np.uint32)
    return ((blocks.sum(axis=(1, 3)) + 2) // 4).astype(np.uint8)
