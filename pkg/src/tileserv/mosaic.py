"""Image composition: tile mosaicking, grid/border/logo drawing, rescaling,
and the jpeg/gif/png codec used across the package.

compose_area implements the canonical double loop over the AreaBoundingBox
tile span: west-to-east columns, north-to-south rows, each tile pasted at
``((x - xStart) * 200 - xOffset, (yStart - y) * 200 - yOffset)`` so the
north-west offsets crop the image's left and top edges. Absent tiles leave
mid-gray fill.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import DecodeError, RenderError, ValidationError
from .grid import TILE_SIZE, AreaBoundingBox, TileId, meters_per_pixel, tile_span

ENCODINGS = ("jpeg", "gif", "png")
MEDIA_TYPES = {"jpeg": "image/jpeg", "gif": "image/gif", "png": "image/png"}
MEDIA_TO_ENCODING = {v: k for k, v in MEDIA_TYPES.items()}

FILL_VALUE = 128  # mid-gray fill for holes, shared with the tile store
JPEG_QUALITY = 90

# Grid lines pick the smallest {1,2,5}*10^k spacing that lands strictly more
# than this many pixels apart on screen.
MIN_GRID_SPACING_PX = 100

LOGO_W, LOGO_H = 48, 24
LOGO_MARGIN = 4


@dataclass
class Canvas:
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise ValidationError(f"canvas must be (H, W, 3) uint8, got {arr.shape} {arr.dtype}")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, width: int, height: int, fill: int = FILL_VALUE) -> "Canvas":
        if width < 1 or height < 1:
            raise ValidationError(f"canvas size must be >= 1x1, got {width}x{height}")
        return cls(np.full((height, width, 3), fill, dtype=np.uint8))

    def copy(self) -> "Canvas":
        return Canvas(self.pixels.copy())


@dataclass(frozen=True)
class RenderStyle:
    grid_style: str = "none"  # none | utm | geo
    grid_width_px: int = 0
    grid_color: str = "80FFFFFF"
    border_width_px: int = 0
    border_color: str = "FF000000"
    font_name: str = "Sans"
    font_color: str = "FF000000"
    logo: bool = False


def parse_argb(value: str) -> tuple[int, int, int, int]:
    """Split an 8-hex-digit ARGB string: first two digits are the alpha."""
    if not isinstance(value, str) or len(value) != 8:
        raise ValidationError(f"ARGB color must be 8 hex digits, got {value!r}")
    try:
        alpha = int(value[0:2], 16)
        red = int(value[2:4], 16)
        green = int(value[4:6], 16)
        blue = int(value[6:8], 16)
    except ValueError as exc:
        raise ValidationError(f"ARGB color must be 8 hex digits, got {value!r}") from exc
    return alpha, red, green, blue


# ---------------------------------------------------------------------------
# Codec
# ---------------------------------------------------------------------------


def encode(canvas: Canvas, encoding: str, quality: int = JPEG_QUALITY) -> bytes:
    if encoding not in ENCODINGS:
        raise ValidationError(f"unknown encoding {encoding!r}", "format")
    img = Image.fromarray(canvas.pixels, mode="RGB")
    buf = io.BytesIO()
    if encoding == "jpeg":
        img.save(buf, format="JPEG", quality=quality)
    elif encoding == "gif":
        img.convert("P", palette=Image.Palette.ADAPTIVE).save(buf, format="GIF")
    else:
        img.save(buf, format="PNG")
    return buf.getvalue()


def decode(data: bytes) -> Canvas:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise DecodeError(f"undecodable image bytes: {exc}") from exc
    return Canvas(np.array(img.convert("RGB")))


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def canvas_utm_frame(abb: AreaBoundingBox) -> tuple[int, float, float, float]:
    """(zone, resolution, left easting, top northing) of the composed canvas."""
    nw = abb.north_west
    res = meters_per_pixel(nw.tile_meta.id.scale)
    span = tile_span(nw.tile_meta.id.scale)
    left = nw.tile_meta.id.x * span + nw.offset.x_offset * res
    top = (nw.tile_meta.id.y + 1) * span - nw.offset.y_offset * res
    return nw.tile_meta.id.scene, res, left, top


def compose_area(
    abb: AreaBoundingBox,
    fetch: Callable[[TileId], Optional[bytes]],
    concurrent_fetch: bool = False,
    debug_tile_edges: bool = False,
) -> Canvas:
    """Fetch and paste every tile in the AreaBoundingBox span, cropping via
    the north-west offsets. ``fetch`` returns encoded bytes or None for an
    absent tile; it is called exactly once per tile, and concurrently only
    when ``concurrent_fetch`` says the callable tolerates that.
    """
    width, height = abb.width_px, abb.height_px
    template = abb.north_west.tile_meta.id
    x_start, y_start = template.x, template.y
    x_off = abb.north_west.offset.x_offset
    y_off = abb.north_west.offset.y_offset
    x_end = abb.north_east.tile_meta.id.x
    y_end = abb.south_west.tile_meta.id.y

    wanted = [
        TileId(template.theme, template.scale, template.scene, x, y)
        for x in range(x_start, x_end + 1)
        for y in range(y_start, y_end - 1, -1)
    ]
    if concurrent_fetch and len(wanted) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(8, len(wanted))) as pool:
            blobs = dict(zip(wanted, pool.map(fetch, wanted)))
    else:
        blobs = {tid: fetch(tid) for tid in wanted}

    out = np.full((height, width, 3), FILL_VALUE, dtype=np.uint8)
    for tid in wanted:
        data = blobs[tid]
        if data is None:
            continue
        try:
            tile = decode(data)
        except DecodeError as exc:
            raise RenderError(f"tile {tid.key()} failed to decode: {exc}") from exc
        if tile.width != TILE_SIZE or tile.height != TILE_SIZE:
            raise RenderError(
                f"tile {tid.key()} decoded to {tile.width}x{tile.height}, "
                f"expected {TILE_SIZE}x{TILE_SIZE}"
            )
        px = (tid.x - x_start) * TILE_SIZE - x_off
        py = (y_start - tid.y) * TILE_SIZE - y_off
        src = tile.pixels
        if debug_tile_edges:
            src = src.copy()
            src[0, :] = src[-1, :] = src[:, 0] = src[:, -1] = (255, 255, 0)
        _paste(out, src, px, py)
    return Canvas(out)


def _paste(dst: np.ndarray, src: np.ndarray, px: int, py: int) -> None:
    h, w = dst.shape[:2]
    sh, sw = src.shape[:2]
    x0, y0 = max(px, 0), max(py, 0)
    x1, y1 = min(px + sw, w), min(py + sh, h)
    if x0 >= x1 or y0 >= y1:
        return
    dst[y0:y1, x0:x1] = src[y0 - py : y1 - py, x0 - px : x1 - px]


# ---------------------------------------------------------------------------
# Grid, border, logo, text
# ---------------------------------------------------------------------------


def nice_spacing(unit_per_px: float, min_px: int = MIN_GRID_SPACING_PX) -> float:
    """Smallest {1,2,5}*10^k whose on-screen spacing exceeds ``min_px``."""
    floor_units = min_px * unit_per_px
    k = math.floor(math.log10(floor_units)) - 1
    while True:
        for mult in (1.0, 2.0, 5.0):
            candidate = mult * 10.0**k
            if candidate > floor_units:
                return candidate
        k += 1


def _blend_mask(pixels: np.ndarray, mask: np.ndarray, argb: str) -> None:
    alpha, r, g, b = parse_argb(argb)
    if alpha == 0 or not mask.any():
        return
    a = alpha / 255.0
    color = np.array([r, g, b], dtype=np.float64)
    under = pixels[mask].astype(np.float64)
    pixels[mask] = np.clip(np.rint(a * color + (1.0 - a) * under), 0, 255).astype(np.uint8)


def draw_grid(
    canvas: Canvas,
    abb: AreaBoundingBox,
    style: RenderStyle,
    spacing: float | None = None,
    inverse=None,
) -> Canvas:
    """Alpha-blend UTM or geographic grid lines over a composed canvas.

    ``spacing`` overrides the automatic {1,2,5}*10^k rule (meters for the UTM
    grid, degrees for the geographic one).
    """
    if style.grid_width_px <= 0 or style.grid_style == "none":
        return canvas.copy()
    out = canvas.copy()
    mask = np.zeros((out.height, out.width), dtype=bool)
    if style.grid_style == "utm":
        _utm_grid_mask(mask, abb, style.grid_width_px, spacing)
    elif style.grid_style == "geo":
        _geo_grid_mask(mask, abb, style.grid_width_px, spacing, inverse)
    else:
        raise ValidationError(f"unknown grid style {style.grid_style!r}", "styles")
    _blend_mask(out.pixels, mask, style.grid_color)
    return out


def _line_start(position: float, width: int) -> int:
    return int(round(position)) - (width - 1) // 2


def _utm_grid_mask(
    mask: np.ndarray, abb: AreaBoundingBox, width_px: int, spacing: float | None
) -> None:
    h, w = mask.shape
    _zone, res, left, top = canvas_utm_frame(abb)
    step = spacing if spacing is not None else nice_spacing(res)
    right = left + w * res
    bottom = top - h * res
    m = math.ceil(left / step)
    while m * step < right:
        col = _line_start((m * step - left) / res, width_px)
        mask[:, max(col, 0) : max(col + width_px, 0)] = True
        m += 1
    m = math.ceil(bottom / step)
    while m * step <= top:
        row = _line_start((top - m * step) / res, width_px)
        mask[max(row, 0) : max(row + width_px, 0), :] = True
        m += 1


def _geo_grid_mask(
    mask: np.ndarray,
    abb: AreaBoundingBox,
    width_px: int,
    spacing: float | None,
    inverse=None,
) -> None:
    """Graticule lines; meridians/parallels are gently curved in projected
    space, so each is traced by a quadratic fit through three solved points."""
    from .grid import _default_inverse

    inv = inverse or _default_inverse
    h, w = mask.shape
    zone, res, left, top = canvas_utm_frame(abb)

    def lonlat_at(col: float, row: float):
        return inv(zone, left + (col + 0.5) * res, top - (row + 0.5) * res)

    mid = lonlat_at((w - 1) / 2, (h - 1) / 2)
    lon_l, lon_r = lonlat_at(0, (h - 1) / 2).lon, lonlat_at(w - 1, (h - 1) / 2).lon
    lat_b, lat_t = lonlat_at((w - 1) / 2, h - 1).lat, lonlat_at((w - 1) / 2, 0).lat
    dpp_lon = max((lon_r - lon_l) / max(w - 1, 1), 1e-12)
    dpp_lat = max((lat_t - lat_b) / max(h - 1, 1), 1e-12)
    step_lon = spacing if spacing is not None else nice_spacing(dpp_lon)
    step_lat = spacing if spacing is not None else nice_spacing(dpp_lat)

    def solve_col(target_lon: float, row: float) -> float:
        col = (w - 1) / 2
        for _ in range(3):
            col += (target_lon - lonlat_at(col, row).lon) / dpp_lon
        return col

    def solve_row(target_lat: float, col: float) -> float:
        row = (h - 1) / 2
        for _ in range(3):
            row -= (target_lat - lonlat_at(col, row).lat) / dpp_lat
        return row

    pad = 2.0  # degrees of slack so lines crossing a corner are not missed
    m = math.ceil((mid.lon - pad * step_lon - abs(w * dpp_lon)) / step_lon)
    while m * step_lon < mid.lon + pad * step_lon + abs(w * dpp_lon):
        lon = m * step_lon
        cols = [solve_col(lon, r) for r in (0.0, (h - 1) / 2, float(h - 1))]
        if any(-width_px <= c < w + width_px for c in cols):
            _trace_vertical(mask, cols, width_px)
        m += 1
    m = math.ceil((mid.lat - pad * step_lat - abs(h * dpp_lat)) / step_lat)
    while m * step_lat < mid.lat + pad * step_lat + abs(h * dpp_lat):
        lat = m * step_lat
        rows = [solve_row(lat, c) for c in (0.0, (w - 1) / 2, float(w - 1))]
        if any(-width_px <= r < h + width_px for r in rows):
            _trace_horizontal(mask, rows, width_px)
        m += 1


def _quad_fit(v0: float, vm: float, v1: float, t: np.ndarray) -> np.ndarray:
    # Lagrange through t = 0, 0.5, 1.
    return (
        v0 * (2 * t - 1) * (t - 1)
        + vm * 4 * t * (1 - t)
        + v1 * t * (2 * t - 1)
    )


def _trace_vertical(mask: np.ndarray, cols: list[float], width_px: int) -> None:
    h, w = mask.shape
    t = np.arange(h) / max(h - 1, 1)
    line = _quad_fit(cols[0], cols[1], cols[2], t)
    start = np.floor(line).astype(int) - (width_px - 1) // 2
    for j in range(h):
        c0 = start[j]
        if c0 + width_px <= 0 or c0 >= w:
            continue
        mask[j, max(c0, 0) : min(c0 + width_px, w)] = True


def _trace_horizontal(mask: np.ndarray, rows: list[float], width_px: int) -> None:
    h, w = mask.shape
    t = np.arange(w) / max(w - 1, 1)
    line = _quad_fit(rows[0], rows[1], rows[2], t)
    start = np.floor(line).astype(int) - (width_px - 1) // 2
    for i in range(w):
        r0 = start[i]
        if r0 + width_px <= 0 or r0 >= h:
            continue
        mask[max(r0, 0) : min(r0 + width_px, h), i] = True


def draw_border(canvas: Canvas, style: RenderStyle) -> Canvas:
    """Alpha-blend a border of ``border_width_px`` pixels around the edge."""
    b = style.border_width_px
    if b <= 0:
        return canvas.copy()
    out = canvas.copy()
    mask = np.zeros((out.height, out.width), dtype=bool)
    mask[:b, :] = mask[-b:, :] = True
    mask[:, :b] = mask[:, -b:] = True
    _blend_mask(out.pixels, mask, style.border_color)
    return out


def _logo_mark() -> np.ndarray:
    """Bundled monochrome placeholder mark (not any agency's real logo)."""
    mark = np.zeros((LOGO_H, LOGO_W), dtype=bool)
    mark[:2, :] = mark[-2:, :] = True
    mark[:, :2] = mark[:, -2:] = True
    for d in range(-LOGO_H, LOGO_W, 6):
        for j in range(LOGO_H):
            i = d + j
            if 3 <= i < LOGO_W - 3 and 3 <= j < LOGO_H - 3:
                mark[j, i] = True
    return mark


def draw_logo(canvas: Canvas, style: RenderStyle) -> Canvas:
    """Placeholder mark bottom-right with a 4 px margin; the caption uses the
    style's font color."""
    out = canvas.copy()
    h, w = out.height, out.width
    if h < LOGO_H + 2 * LOGO_MARGIN or w < LOGO_W + 2 * LOGO_MARGIN:
        return out
    mark = _logo_mark()
    y0 = h - LOGO_MARGIN - LOGO_H
    x0 = w - LOGO_MARGIN - LOGO_W
    region = out.pixels[y0 : y0 + LOGO_H, x0 : x0 + LOGO_W]
    region[~mark] = (region[~mark] * 0.5).astype(np.uint8)  # darken backdrop
    region[mark] = 255
    caption_w = 52
    if x0 - caption_w >= 0:
        out = draw_text(
            out, "imagery", (x0 - caption_w, y0 + LOGO_H // 2 - 6), style.font_color
        )
    return out


def draw_text(canvas: Canvas, text: str, origin: tuple[int, int], argb: str) -> Canvas:
    """Alpha-blend text using the bundled default bitmap font."""
    alpha, r, g, b = parse_argb(argb)
    if alpha == 0:
        return canvas.copy()
    stencil = Image.new("L", (canvas.width, canvas.height), 0)
    drawer = ImageDraw.Draw(stencil)
    drawer.text(origin, text, fill=255, font=ImageFont.load_default())
    mask = np.asarray(stencil) > 127
    out = canvas.copy()
    _blend_mask(out.pixels, mask, argb)
    return out


def draw_message(canvas: Canvas, message: str, argb: str = "FF000000") -> Canvas:
    """Word-wrap a message into the canvas (error-in-image rendering)."""
    out = canvas.copy()
    cols = max(4, (out.width - 8) // 6)
    lines, line = [], ""
    for word in message.split():
        if line and len(line) + 1 + len(word) > cols:
            lines.append(line)
            line = word
        else:
            line = f"{line} {word}".strip()
    if line:
        lines.append(line)
    for i, text in enumerate(lines[: max(1, (out.height - 8) // 12)]):
        out = draw_text(out, text, (4, 4 + 12 * i), argb)
    return out


def rescale(canvas: Canvas, target_w: int, target_h: int) -> Canvas:
    """Bilinear resample; aspect distortion is allowed."""
    if target_w < 1 or target_h < 1:
        raise ValidationError(f"target size must be >= 1x1, got {target_w}x{target_h}")
    src = canvas.pixels
    sh, sw = src.shape[:2]
    if (target_w, target_h) == (sw, sh):
        return canvas.copy()
    sx = (np.arange(target_w) + 0.5) * (sw / target_w) - 0.5
    sy = (np.arange(target_h) + 0.5) * (sh / target_h) - 0.5
    x0 = np.clip(np.floor(sx).astype(int), 0, sw - 1)
    y0 = np.clip(np.floor(sy).astype(int), 0, sh - 1)
    x1 = np.clip(x0 + 1, 0, sw - 1)
    y1 = np.clip(y0 + 1, 0, sh - 1)
    fx = np.clip(sx - x0, 0.0, 1.0)[np.newaxis, :, np.newaxis]
    fy = np.clip(sy - y0, 0.0, 1.0)[:, np.newaxis, np.newaxis]
    p00 = src[np.ix_(y0, x0)].astype(np.float64)
    p01 = src[np.ix_(y0, x1)].astype(np.float64)
    p10 = src[np.ix_(y1, x0)].astype(np.float64)
    p11 = src[np.ix_(y1, x1)].astype(np.float64)
    top = p00 * (1 - fx) + p01 * fx
    bottom = p10 * (1 - fx) + p11 * fx
    blended = top * (1 - fy) + bottom * fy
    return Canvas(np.clip(np.rint(blended), 0, 255).astype(np.uint8))
