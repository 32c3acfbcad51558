"""Tile-grid geometry: scale ladder, tile extents, adjacency, area layout.

A tile is a 200x200 pixel image covering ``200 * meters_per_pixel(scale)``
meters on a side. The grid is anchored at easting 0 / northing 0 (the
equator), tile indices grow eastward (x) and northward (y), and tile extents
are half-open rectangles so every point belongs to exactly one tile.

Image layout uses the pixel-center rule: a corner pixel that lands exactly on
a tile edge is classified by the point half a pixel inward, which makes the
resulting offsets exact integers and removes floor-on-boundary ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

from .errors import DomainError, ValidationError

if TYPE_CHECKING:
    from .gazetteer import NearestPlace

TILE_SIZE = 200  # pixels per tile side

THEME_DOQ = 1  # grayscale ortho aerial photo
THEME_DRG = 2  # scanned topographic map
THEMES = (THEME_DOQ, THEME_DRG)

SCALE_MIN, SCALE_MAX = 8, 24  # full resolution ladder, 0.25 .. 16384 m/px
WIRE_SCALE_MIN, WIRE_SCALE_MAX = 10, 16  # scales admitted at the HTTP layer

ZONE_MIN, ZONE_MAX = 1, 60
SERVED_ZONE_MIN, SERVED_ZONE_MAX = 3, 20  # zones with served data

MIN_IMAGE_PX, MAX_IMAGE_PX = 50, 2000

UNKNOWN_DATE = "unknown"


def validate_theme(theme: int) -> int:
    if theme not in THEMES:
        raise DomainError(f"theme must be 1 (DOQ) or 2 (DRG), got {theme!r}", "theme")
    return theme


def validate_scale(scale: int) -> int:
    if not isinstance(scale, int) or not SCALE_MIN <= scale <= SCALE_MAX:
        raise DomainError(
            f"scale code must be an integer in [{SCALE_MIN}, {SCALE_MAX}], got {scale!r}",
            "scale",
        )
    return scale


def validate_zone(zone: int) -> int:
    if not isinstance(zone, int) or not ZONE_MIN <= zone <= ZONE_MAX:
        raise DomainError(f"UTM zone must be in [1, 60], got {zone!r}", "zone")
    return zone


def meters_per_pixel(scale: int) -> float:
    """Ground resolution of a scale code: code 10 is 1 m/px, each step doubles."""
    validate_scale(scale)
    return 2.0 ** (scale - 10)


def tile_span(scale: int) -> float:
    """Ground meters covered by one tile side at the given scale."""
    return TILE_SIZE * meters_per_pixel(scale)


@dataclass(frozen=True)
class LonLatPt:
    lon: float
    lat: float

    def __post_init__(self):
        if not -180.0 <= self.lon < 180.0:
            raise DomainError(f"longitude {self.lon!r} outside [-180, 180)", "lon")
        if not -90.0 < self.lat < 90.0:
            raise DomainError(f"latitude {self.lat!r} outside (-90, 90)", "lat")


@dataclass(frozen=True)
class UtmPt:
    zone: int
    easting: float
    northing: float

    def __post_init__(self):
        validate_zone(self.zone)
        if self.northing < 0:
            raise DomainError(
                f"northing {self.northing!r} is negative (northern hemisphere only)",
                "northing",
            )


@dataclass(frozen=True)
class UtmRect:
    zone: int
    min_easting: float
    min_northing: float
    max_easting: float
    max_northing: float

    def __post_init__(self):
        validate_zone(self.zone)
        if not (self.min_easting < self.max_easting and self.min_northing < self.max_northing):
            raise DomainError("rectangle must have min < max on both axes")

    @property
    def midpoint(self) -> UtmPt:
        return UtmPt(
            self.zone,
            (self.min_easting + self.max_easting) / 2.0,
            (self.min_northing + self.max_northing) / 2.0,
        )


@dataclass(frozen=True)
class TileId:
    theme: int
    scale: int
    scene: int
    x: int
    y: int

    def __post_init__(self):
        validate_theme(self.theme)
        validate_scale(self.scale)
        validate_zone(self.scene)
        if self.x < 0 or self.y < 0:
            raise DomainError(f"tile indices must be non-negative, got ({self.x}, {self.y})")

    def key(self) -> str:
        return f"{self.theme}/{self.scale}/{self.scene}/{self.x}/{self.y}"


@dataclass(frozen=True)
class TileMeta:
    id: TileId
    nw: LonLatPt
    ne: LonLatPt
    sw: LonLatPt
    se: LonLatPt
    center: LonLatPt
    capture_date: str = UNKNOWN_DATE


@dataclass(frozen=True)
class LonLatPtOffset:
    point: LonLatPt
    x_offset: int  # pixels rightward from the containing tile's top-left pixel
    y_offset: int  # pixels downward from the containing tile's top-left pixel

    def __post_init__(self):
        if not (0 <= self.x_offset < TILE_SIZE and 0 <= self.y_offset < TILE_SIZE):
            raise DomainError(
                f"pixel offsets must lie in [0, {TILE_SIZE}), got "
                f"({self.x_offset}, {self.y_offset})"
            )


@dataclass(frozen=True)
class AreaCoordinate:
    tile_meta: TileMeta
    offset: LonLatPtOffset


@dataclass(frozen=True)
class AreaBoundingBox:
    north_west: AreaCoordinate
    north_east: AreaCoordinate
    south_west: AreaCoordinate
    south_east: AreaCoordinate
    center: AreaCoordinate
    nearest_place: Optional["NearestPlace"] = None

    @property
    def columns(self) -> int:
        return self.north_east.tile_meta.id.x - self.north_west.tile_meta.id.x + 1

    @property
    def rows(self) -> int:
        return self.north_west.tile_meta.id.y - self.south_west.tile_meta.id.y + 1

    @property
    def width_px(self) -> int:
        """Requested image width, reconstructed from the corner offsets."""
        nw, ne = self.north_west, self.north_east
        return (
            (ne.tile_meta.id.x - nw.tile_meta.id.x) * TILE_SIZE
            + ne.offset.x_offset
            - nw.offset.x_offset
            + 1
        )

    @property
    def height_px(self) -> int:
        nw, sw = self.north_west, self.south_west
        return (
            (nw.tile_meta.id.y - sw.tile_meta.id.y) * TILE_SIZE
            + sw.offset.y_offset
            - nw.offset.y_offset
            + 1
        )


def tile_extent(tile: TileId) -> UtmRect:
    """Half-open ground rectangle [x*L, (x+1)*L) x [y*L, (y+1)*L) of a tile."""
    span = tile_span(tile.scale)
    return UtmRect(
        zone=tile.scene,
        min_easting=tile.x * span,
        min_northing=tile.y * span,
        max_easting=(tile.x + 1) * span,
        max_northing=(tile.y + 1) * span,
    )


def tile_for_utm(theme: int, scale: int, p: UtmPt) -> TileId:
    """Tile whose half-open extent contains the projected point."""
    if p.easting < 0 or p.northing < 0:
        raise DomainError(
            f"coordinates must be non-negative, got ({p.easting}, {p.northing})"
        )
    span = tile_span(scale)
    return TileId(
        theme=theme,
        scale=scale,
        scene=p.zone,
        x=math.floor(p.easting / span),
        y=math.floor(p.northing / span),
    )


def neighbor(tile: TileId, dx: int, dy: int) -> TileId:
    """Adjacent tile reached by adding (dx, dy) to the X and Y indices."""
    nx, ny = tile.x + dx, tile.y + dy
    if nx < 0 or ny < 0:
        raise DomainError(f"neighbor index ({nx}, {ny}) out of grid")
    return TileId(tile.theme, tile.scale, tile.scene, nx, ny)


InverseFn = Callable[[int, float, float], LonLatPt]
ForwardFn = Callable[[float, float], UtmPt]


def _default_inverse(zone: int, easting: float, northing: float) -> LonLatPt:
    from . import projection

    return projection.utm_to_lon_lat(UtmPt(zone, easting, northing))


def _default_forward(lon: float, lat: float) -> UtmPt:
    from . import projection

    return projection.lon_lat_to_utm(LonLatPt(lon, lat))


def tile_meta_geometry(tile: TileId, inverse: InverseFn | None = None) -> TileMeta:
    """Geographic fiducials of a tile: corner and center points of its extent.

    Pure geometry; the capture date is left unknown for the store to fill.
    """
    inv = inverse or _default_inverse
    rect = tile_extent(tile)
    mid = rect.midpoint
    return TileMeta(
        id=tile,
        nw=inv(rect.zone, rect.min_easting, rect.max_northing),
        ne=inv(rect.zone, rect.max_easting, rect.max_northing),
        sw=inv(rect.zone, rect.min_easting, rect.min_northing),
        se=inv(rect.zone, rect.max_easting, rect.min_northing),
        center=inv(rect.zone, mid.easting, mid.northing),
        capture_date=UNKNOWN_DATE,
    )


def _pixel_area_coordinate(
    theme: int,
    scale: int,
    zone: int,
    left_easting: float,
    top_northing: float,
    col: int,
    row: int,
    inverse: InverseFn,
) -> AreaCoordinate:
    """AreaCoordinate of one image pixel, classified by its center point."""
    res = meters_per_pixel(scale)
    span = tile_span(scale)
    easting = left_easting + (col + 0.5) * res
    northing = top_northing - (row + 0.5) * res
    tile = tile_for_utm(theme, scale, UtmPt(zone, easting, northing))
    # Offsets are exact integers for pixel centers; the clamp only guards the
    # 1-ulp case where the tile floor and the offset floor could disagree.
    x_off = min(TILE_SIZE - 1, max(0, math.floor((easting - tile.x * span) / res)))
    y_off = min(TILE_SIZE - 1, max(0, math.floor(((tile.y + 1) * span - northing) / res)))
    point = inverse(zone, easting, northing)
    return AreaCoordinate(
        tile_meta=tile_meta_geometry(tile, inverse),
        offset=LonLatPtOffset(point=point, x_offset=x_off, y_offset=y_off),
    )


def area_from_utm(
    theme: int,
    scale: int,
    center: UtmPt,
    width_px: int,
    height_px: int,
    inverse: InverseFn | None = None,
    min_px: int = MIN_IMAGE_PX,
    max_px: int = MAX_IMAGE_PX,
) -> AreaBoundingBox:
    """Describe the tiles needed to build a width x height image around a
    projected center point.

    The image covers the half-open ground rectangle
    ``[cE - w*r/2, cE + w*r/2) x [cN - h*r/2, cN + h*r/2)``; each corner
    coordinate names the tile containing the center of that corner pixel and
    the pixel's column/row inside that tile (rows counted from the tile's top
    edge). ``min_px``/``max_px`` default to the wire bounds; internal callers
    (map rescaling) may relax them.
    """
    validate_theme(theme)
    if not (min_px <= width_px <= max_px and min_px <= height_px <= max_px):
        raise ValidationError(
            f"image size must be within [{min_px}, {max_px}] pixels, got "
            f"{width_px}x{height_px}",
            "width" if not min_px <= width_px <= max_px else "height",
        )
    if not SERVED_ZONE_MIN <= center.zone <= SERVED_ZONE_MAX:
        raise DomainError(
            f"zone {center.zone} outside served zones "
            f"[{SERVED_ZONE_MIN}, {SERVED_ZONE_MAX}]",
            "zone",
        )
    inv = inverse or _default_inverse
    res = meters_per_pixel(scale)
    left = center.easting - width_px * res / 2.0
    top = center.northing + height_px * res / 2.0

    def coord(col: int, row: int) -> AreaCoordinate:
        return _pixel_area_coordinate(
            theme, scale, center.zone, left, top, col, row, inv
        )

    return AreaBoundingBox(
        north_west=coord(0, 0),
        north_east=coord(width_px - 1, 0),
        south_west=coord(0, height_px - 1),
        south_east=coord(width_px - 1, height_px - 1),
        center=coord(width_px // 2, height_px // 2),
    )


def area_from_point(
    center: LonLatPt,
    theme: int,
    scale: int,
    width_px: int,
    height_px: int,
    forward: ForwardFn | None = None,
    inverse: InverseFn | None = None,
) -> AreaBoundingBox:
    """area_from_utm with a geographic center, projected into its own zone."""
    fwd = forward or _default_forward
    center_utm = fwd(center.lon, center.lat)
    return area_from_utm(theme, scale, center_utm, width_px, height_px, inverse)
