"""Stateless HTTP service: method endpoints plus the two map endpoints.

Every endpoint is a pure function of its request; handlers share only the
read-mostly store and gazetteer indices. Method endpoints speak JSON inside a
``{"method", "request", "result"}`` envelope (the request echo keeps replies
self-describing and correlatable); the map endpoints return raw image bytes,
a capabilities document, or an exception rendered in the caller's requested
style. Parameter names are case-insensitive; unknown parameter names are
ignored, unknown values for known parameters are rejected.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import NamedTuple, Optional
from urllib.parse import parse_qsl, urlsplit
from xml.sax.saxutils import escape

from . import mosaic, projection
from .errors import (
    DomainError,
    NotFoundError,
    ServiceError,
    ValidationError,
)
from .gazetteer import Gazetteer, Place
from .grid import (
    MAX_IMAGE_PX,
    MIN_IMAGE_PX,
    SERVED_ZONE_MAX,
    SERVED_ZONE_MIN,
    WIRE_SCALE_MAX,
    WIRE_SCALE_MIN,
    AreaBoundingBox,
    AreaCoordinate,
    LonLatPt,
    TileId,
    TileMeta,
    UtmPt,
    UtmRect,
    area_from_utm,
    neighbor,
    tile_extent,
    tile_for_utm,
)
from .store import MEDIA_TYPES, TileStore

WMS_VERSION = "1.1.1"
LAYER_THEMES = {"doq": 1, "drg": 2}
THEME_LAYERS = {1: "DOQ", 2: "DRG"}
EXCEPTION_STYLES = ("se_xml", "se_blank", "se_inimage")
GRID_STYLES = {"blank": "none", "utmgrid": "utm", "geogrid": "geo"}
DEFAULT_GRID_COLOR = "80FFFFFF"

# Hard cap for internally composed native canvases and for error images.
MAX_RENDER_PX = 4000

STATUS_FOR_CODE = {"validation": 400, "domain": 422, "not_found": 404, "internal": 500}


class Response(NamedTuple):
    status: int
    content_type: str
    body: bytes
    headers: dict


class Params:
    """Case-insensitive query parameters with typed, range-checked getters."""

    def __init__(self, query: str):
        pairs = parse_qsl(query, keep_blank_values=True)
        self.echo = {k: v for k, v in pairs}
        self._values = {k.lower(): v for k, v in pairs}

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        value = self._values.get(name.lower())
        return value if value not in (None, "") else default

    def require(self, name: str) -> str:
        value = self.get(name)
        if value is None:
            raise ValidationError(f"missing required parameter {name!r}", name)
        return value

    def get_int(
        self,
        name: str,
        lo: Optional[int] = None,
        hi: Optional[int] = None,
        default: Optional[int] = None,
    ) -> Optional[int]:
        raw = self.get(name)
        if raw is None:
            if default is None and lo is not None:
                raise ValidationError(f"missing required parameter {name!r}", name)
            return default
        try:
            value = int(raw)
        except ValueError:
            raise ValidationError(f"parameter {name!r} must be an integer, got {raw!r}", name)
        if (lo is not None and value < lo) or (hi is not None and value > hi):
            raise ValidationError(
                f"parameter {name!r} must be in [{lo}, {hi}], got {value}", name
            )
        return value

    def get_float(self, name: str, default: Optional[float] = None) -> Optional[float]:
        raw = self.get(name)
        if raw is None:
            if default is None:
                raise ValidationError(f"missing required parameter {name!r}", name)
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"parameter {name!r} must be a number, got {raw!r}", name)

    def get_choice(
        self, name: str, choices: dict[str, object], default: Optional[object] = None
    ) -> object:
        raw = self.get(name)
        if raw is None:
            if default is None:
                raise ValidationError(f"missing required parameter {name!r}", name)
            return default
        value = choices.get(raw.lower())
        if value is None:
            raise ValidationError(
                f"parameter {name!r} must be one of {sorted(choices)}, got {raw!r}", name
            )
        return value


# ---------------------------------------------------------------------------
# JSON wire shapes
# ---------------------------------------------------------------------------


def lon_lat_json(p: LonLatPt) -> dict:
    return {"lon": p.lon, "lat": p.lat}


def tile_id_json(t: TileId) -> dict:
    return {"theme": t.theme, "scale": t.scale, "scene": t.scene, "x": t.x, "y": t.y}


def rect_json(r: UtmRect) -> dict:
    return {
        "zone": r.zone,
        "minEasting": r.min_easting,
        "minNorthing": r.min_northing,
        "maxEasting": r.max_easting,
        "maxNorthing": r.max_northing,
    }


def tile_meta_json(meta: TileMeta, with_neighbors: bool = False) -> dict:
    doc = {
        "id": tile_id_json(meta.id),
        "extent": rect_json(tile_extent(meta.id)),
        "nw": lon_lat_json(meta.nw),
        "ne": lon_lat_json(meta.ne),
        "sw": lon_lat_json(meta.sw),
        "se": lon_lat_json(meta.se),
        "center": lon_lat_json(meta.center),
        "captureDate": meta.capture_date,
    }
    if with_neighbors:
        compass = {
            "n": (0, 1), "ne": (1, 1), "e": (1, 0), "se": (1, -1),
            "s": (0, -1), "sw": (-1, -1), "w": (-1, 0), "nw": (-1, 1),
        }
        doc["neighbors"] = {
            key: tile_id_json(neighbor(meta.id, dx, dy))
            for key, (dx, dy) in compass.items()
            if meta.id.x + dx >= 0 and meta.id.y + dy >= 0
        }
    return doc


def area_coordinate_json(c: AreaCoordinate) -> dict:
    return {
        "tileMeta": tile_meta_json(c.tile_meta),
        "offset": {
            "point": lon_lat_json(c.offset.point),
            "xOffset": c.offset.x_offset,
            "yOffset": c.offset.y_offset,
        },
    }


def abb_json(abb: AreaBoundingBox) -> dict:
    doc = {
        "northWest": area_coordinate_json(abb.north_west),
        "northEast": area_coordinate_json(abb.north_east),
        "southWest": area_coordinate_json(abb.south_west),
        "southEast": area_coordinate_json(abb.south_east),
        "center": area_coordinate_json(abb.center),
        "nearestPlace": None,
    }
    if abb.nearest_place is not None:
        doc["nearestPlace"] = {
            "name": abb.nearest_place.name,
            "distanceMeters": abb.nearest_place.distance_meters,
            "direction": abb.nearest_place.direction,
        }
    return doc


def place_facts_json(facts) -> dict:
    return {
        "city": facts.place.city,
        "state": facts.place.state,
        "country": facts.place.country,
        "center": lon_lat_json(facts.center),
        "placeType": facts.place_type,
        "population": facts.population,
    }


# ---------------------------------------------------------------------------
# Service
# ---------------------------------------------------------------------------


@dataclass
class ServiceConfig:
    store_path: str
    gazetteer_path: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8080
    test_mode: bool = False


def load_config(path: Optional[str] = None, env=os.environ) -> ServiceConfig:
    """Single JSON config file with environment-variable overrides."""
    doc: dict = {}
    if path:
        doc = json.loads(Path(path).read_text())
    store = env.get("TILESERV_STORE", doc.get("store"))
    if not store:
        raise ValidationError("no store path configured (config 'store' or TILESERV_STORE)")
    gazetteer = env.get("TILESERV_GAZETTEER", doc.get("gazetteer"))
    bind = env.get("TILESERV_BIND", doc.get("bind", "127.0.0.1:8080"))
    host, _, port_s = bind.partition(":")
    test_raw = env.get("TILESERV_TEST_MODE", doc.get("test_mode", False))
    test_mode = str(test_raw).lower() in ("1", "true", "yes")
    return ServiceConfig(
        store_path=store,
        gazetteer_path=gazetteer,
        host=host or "127.0.0.1",
        port=int(port_s or 8080),
        test_mode=test_mode,
    )


class TileService:
    """Request dispatcher; holds no per-request state."""

    def __init__(
        self, store: TileStore, gazetteer: Optional[Gazetteer] = None, test_mode: bool = False
    ):
        self.store = store
        self.gazetteer = gazetteer if gazetteer is not None else Gazetteer()
        self.test_mode = test_mode or store.lossless
        self._routes = {
            "/gettile": self.get_tile,
            "/gettilemetafromtileid": self.get_tile_meta_from_tile_id,
            "/gettilemetafromlonlatpt": self.get_tile_meta_from_lon_lat_pt,
            "/getareafrompt": self.get_area_from_pt,
            "/getplacefacts": self.get_place_facts,
            "/getplacelist": self.get_place_list,
            "/ogcmap": self.ogc_map,
            "/getimagearea": self.get_image_area,
        }

    # -- plumbing ------------------------------------------------------------

    def handle(self, path: str, query: str) -> Response:
        route = self._routes.get(path.lower().rstrip("/") or "/")
        params = Params(query)
        if route is None:
            return self._error_json("unknown", params, NotFoundError(f"no endpoint {path}"))
        try:
            return route(params)
        except ServiceError as exc:
            return self._error_json(route.__name__, params, exc)
        except Exception as exc:  # pragma: no cover - defensive
            return self._error_json(route.__name__, params, ServiceError(str(exc)))

    def _envelope(self, method: str, params: Params, result) -> Response:
        body = json.dumps(
            {"method": method, "request": params.echo, "result": result}, indent=2
        ).encode()
        return Response(200, "application/json", body, {})

    def _error_json(self, method: str, params: Params, exc: ServiceError) -> Response:
        body = json.dumps(
            {
                "method": method,
                "request": params.echo,
                "error": {
                    "code": exc.code,
                    "message": exc.message,
                    "parameter": exc.parameter,
                },
            },
            indent=2,
        ).encode()
        status = STATUS_FOR_CODE.get(exc.code, 500)
        return Response(status, "application/json", body, {"X-Service-Error": exc.code})

    def _fetch(self, tile: TileId) -> Optional[bytes]:
        try:
            return self.store.get_tile(tile).data
        except NotFoundError:
            return None

    def _wire_tile_id(self, params: Params, theme_key="theme", scale_key="scale") -> TileId:
        theme = params.get_int(theme_key, 1, 2)
        scale = params.get_int(scale_key, WIRE_SCALE_MIN, WIRE_SCALE_MAX)
        scene = params.get_int("scene", SERVED_ZONE_MIN, SERVED_ZONE_MAX)
        x = params.get_int("x", 0)
        y = params.get_int("y", 0)
        return TileId(theme, scale, scene, x, y)

    # -- method endpoints ------------------------------------------------------

    def get_tile(self, params: Params) -> Response:
        blob = self.store.get_tile(self._wire_tile_id(params))
        return Response(200, MEDIA_TYPES[blob.encoding], blob.data, {})

    def get_tile_meta_from_tile_id(self, params: Params) -> Response:
        meta = self.store.get_tile_meta(self._wire_tile_id(params))
        return self._envelope(
            "GetTileMetaFromTileId", params, tile_meta_json(meta, with_neighbors=True)
        )

    def get_tile_meta_from_lon_lat_pt(self, params: Params) -> Response:
        theme = params.get_int("theme", 1, 2)
        scale = params.get_int("scale", WIRE_SCALE_MIN, WIRE_SCALE_MAX)
        point = LonLatPt(params.get_float("lon"), params.get_float("lat"))
        utm = projection.lon_lat_to_utm(point)
        if not SERVED_ZONE_MIN <= utm.zone <= SERVED_ZONE_MAX:
            raise DomainError(
                f"zone {utm.zone} outside served zones "
                f"[{SERVED_ZONE_MIN}, {SERVED_ZONE_MAX}]",
                "lon",
            )
        meta = self.store.get_tile_meta(tile_for_utm(theme, scale, utm))
        return self._envelope(
            "GetTileMetaFromLonLatPt", params, tile_meta_json(meta, with_neighbors=True)
        )

    def _decorated_area(
        self, theme: int, scale: int, center: LonLatPt, width: int, height: int
    ) -> AreaBoundingBox:
        abb = area_from_utm(
            theme, scale, projection.lon_lat_to_utm(center), width, height
        )

        def decorate(coord: AreaCoordinate) -> AreaCoordinate:
            date = self.store.capture_date(coord.tile_meta.id)
            if date == coord.tile_meta.capture_date:
                return coord
            return replace(coord, tile_meta=replace(coord.tile_meta, capture_date=date))

        nearest = None
        if len(self.gazetteer):
            nearest = self.gazetteer.nearest_place(center)
        return AreaBoundingBox(
            north_west=decorate(abb.north_west),
            north_east=decorate(abb.north_east),
            south_west=decorate(abb.south_west),
            south_east=decorate(abb.south_east),
            center=decorate(abb.center),
            nearest_place=nearest,
        )

    def get_area_from_pt(self, params: Params) -> Response:
        theme = params.get_int("theme", 1, 2)
        scale = params.get_int("scale", WIRE_SCALE_MIN, WIRE_SCALE_MAX)
        width = params.get_int("width", MIN_IMAGE_PX, MAX_IMAGE_PX)
        height = params.get_int("height", MIN_IMAGE_PX, MAX_IMAGE_PX)
        center = LonLatPt(params.get_float("lon"), params.get_float("lat"))
        abb = self._decorated_area(theme, scale, center, width, height)
        return self._envelope("GetAreaFromPt", params, abb_json(abb))

    def get_place_facts(self, params: Params) -> Response:
        query = Place(
            city=params.get("city", ""),
            state=params.get("state", ""),
            country=params.get("country", ""),
        )
        results = self.gazetteer.get_place_facts(query)
        return self._envelope(
            "GetPlaceFacts", params, [place_facts_json(p) for p in results]
        )

    def get_place_list(self, params: Params) -> Response:
        upper_left = LonLatPt(params.get_float("ullon"), params.get_float("ullat"))
        lower_right = LonLatPt(params.get_float("lrlon"), params.get_float("lrlat"))
        max_items = params.get_int("maxitems", 1, None, default=50)
        results = self.gazetteer.get_place_list(upper_left, lower_right, max_items)
        return self._envelope(
            "GetPlaceList", params, [place_facts_json(p) for p in results]
        )

    # -- map endpoints ---------------------------------------------------------

    def _image_formats(self) -> dict[str, str]:
        formats = {"image/jpeg": "jpeg"}
        if self.test_mode:
            formats["image/png"] = "png"
        return formats

    def _default_encoding(self) -> str:
        return "png" if self.test_mode else "jpeg"

    def ogc_map(self, params: Params) -> Response:
        exceptions = params.get("exceptions", "se_xml").lower()
        if exceptions not in EXCEPTION_STYLES:
            exceptions = "se_xml"
        try:
            request = params.require("request").lower()
            if request == "getcapabilities":
                return self._capabilities(params)
            if request != "getmap":
                raise ValidationError(
                    f"Request must be GetMap or GetCapabilities, got {params.get('request')!r}",
                    "request",
                )
            return self._get_map(params)
        except ServiceError as exc:
            return self._wms_exception(params, exc, exceptions)

    def _capabilities(self, params: Params) -> Response:
        version = params.require("version")
        if version != WMS_VERSION:
            raise ValidationError(f"version must be {WMS_VERSION}, got {version!r}", "version")
        service = params.require("service")
        if service.lower() != "wms":
            raise ValidationError(f"service must be wms, got {service!r}", "service")
        formats = "\n".join(
            f"        <Format>{escape(f)}</Format>" for f in sorted(self._image_formats())
        )
        srs = " ".join(
            f"EPSG:269{zone:02d}" for zone in range(SERVED_ZONE_MIN, SERVED_ZONE_MAX + 1)
        )
        layers = "\n".join(
            f"""    <Layer queryable="0">
      <Name>{name}</Name>
      <Title>{title}</Title>
      <SRS>{srs}</SRS>
    </Layer>"""
            for name, title in (
                ("DOQ", "Aerial ortho-imagery (grayscale, 1 m base)"),
                ("DRG", "Topographic maps (scanned)"),
            )
        )
        body = f"""<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<WMT_MS_Capabilities version="{WMS_VERSION}">
  <Service>
    <Name>OGC:WMS</Name>
    <Title>UTM tile pyramid map service</Title>
  </Service>
  <Capability>
    <Request>
      <GetCapabilities>
        <Format>application/vnd.ogc.wms_xml</Format>
      </GetCapabilities>
      <GetMap>
{formats}
      </GetMap>
    </Request>
    <Exception>
      <Format>application/vnd.ogc.se_xml</Format>
      <Format>se_blank</Format>
      <Format>se_inimage</Format>
    </Exception>
{layers}
  </Capability>
</WMT_MS_Capabilities>
"""
        return Response(200, "application/vnd.ogc.wms_xml", body.encode(), {})

    @staticmethod
    def _parse_srs_zone(raw: str) -> int:
        prefix = "epsg:269"
        if not raw.lower().startswith(prefix):
            raise ValidationError(f"SRS must be EPSG:269zz, got {raw!r}", "srs")
        try:
            zone = int(raw[len(prefix):])
        except ValueError:
            raise ValidationError(f"SRS must be EPSG:269zz, got {raw!r}", "srs")
        if not SERVED_ZONE_MIN <= zone <= SERVED_ZONE_MAX:
            raise ValidationError(
                f"SRS zone must be in [{SERVED_ZONE_MIN}, {SERVED_ZONE_MAX}], got {zone}",
                "srs",
            )
        return zone

    @staticmethod
    def _parse_bbox(raw: str) -> tuple[float, float, float, float]:
        parts = raw.split(",")
        if len(parts) != 4:
            raise ValidationError(f"BBOX must be minx,miny,maxx,maxy, got {raw!r}", "bbox")
        try:
            minx, miny, maxx, maxy = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"BBOX must be numeric, got {raw!r}", "bbox")
        if not (minx < maxx and miny < maxy):
            raise ValidationError("BBOX must have min < max on both axes", "bbox")
        if miny < 0:
            raise DomainError("BBOX northing must be non-negative", "bbox")
        return minx, miny, maxx, maxy

    @staticmethod
    def native_scale_for(requested_res: float) -> int:
        """Served scale whose resolution is linearly nearest; ties go finer."""
        best = None
        for code in range(WIRE_SCALE_MIN, WIRE_SCALE_MAX + 1):
            res = 2.0 ** (code - 10)
            key = (abs(requested_res - res), code)
            if best is None or key < best:
                best = key
        return best[1]

    def _get_map(self, params: Params) -> Response:
        version = params.require("version")
        if version != WMS_VERSION:
            raise ValidationError(f"version must be {WMS_VERSION}, got {version!r}", "version")
        theme = params.get_choice("layers", LAYER_THEMES)
        grid_style = params.get_choice("styles", GRID_STYLES, default="none")
        zone = self._parse_srs_zone(params.require("srs"))
        minx, miny, maxx, maxy = self._parse_bbox(params.require("bbox"))
        width = params.get_int("width", MIN_IMAGE_PX, MAX_IMAGE_PX)
        height = params.get_int("height", MIN_IMAGE_PX, MAX_IMAGE_PX)
        formats = self._image_formats()
        media = params.require("format")
        encoding = formats.get(media.lower())
        if encoding is None:
            raise ValidationError(
                f"format must be one of {sorted(formats)}, got {media!r}", "format"
            )

        requested_res = (maxx - minx) / width
        scale = self.native_scale_for(requested_res)
        res = 2.0 ** (scale - 10)
        native_w = max(1, round((maxx - minx) / res))
        native_h = max(1, round((maxy - miny) / res))
        if native_w > MAX_RENDER_PX or native_h > MAX_RENDER_PX:
            raise DomainError(
                f"BBOX spans more than {MAX_RENDER_PX} native pixels at scale {scale}",
                "bbox",
            )
        center = UtmPt(zone, (minx + maxx) / 2.0, (miny + maxy) / 2.0)
        abb = area_from_utm(theme, scale, center, native_w, native_h, min_px=1, max_px=MAX_RENDER_PX)
        canvas = mosaic.compose_area(abb, self._fetch)
        canvas = mosaic.rescale(canvas, width, height)
        if grid_style != "none":
            style = mosaic.RenderStyle(
                grid_style=grid_style, grid_width_px=1, grid_color=DEFAULT_GRID_COLOR
            )
            _zone, _res, left, top = mosaic.canvas_utm_frame(abb)
            canvas = _draw_grid_on_frame(
                canvas, zone, left, top,
                native_w * res / width, native_h * res / height, style,
            )
        body = mosaic.encode(canvas, encoding)
        return Response(
            200, media, body, {"X-Native-Scale": str(scale)}
        )

    def _wms_exception(self, params: Params, exc: ServiceError, style: str) -> Response:
        if style in ("se_blank", "se_inimage"):
            dims = self._error_image_dims(params)
            if dims is not None:
                w, h = dims
                canvas = mosaic.Canvas.blank(w, h)
                if style == "se_inimage":
                    canvas = mosaic.draw_message(canvas, exc.message)
                encoding = self._default_encoding()
                return Response(
                    200,
                    MEDIA_TYPES[encoding],
                    mosaic.encode(canvas, encoding),
                    {"X-Service-Error": exc.code, "X-Error-Message": exc.message},
                )
        body = f"""<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<ServiceExceptionReport version="{WMS_VERSION}">
  <ServiceException code="{escape(exc.code)}"{_locator_attr(exc)}>{escape(exc.message)}</ServiceException>
</ServiceExceptionReport>
"""
        return Response(
            200,
            "application/vnd.ogc.se_xml",
            body.encode(),
            {"X-Service-Error": exc.code, "X-Error-Message": exc.message},
        )

    @staticmethod
    def _error_image_dims(params: Params) -> Optional[tuple[int, int]]:
        """Requested dims for an error image, when usable (1..MAX_RENDER_PX)."""
        try:
            w = int(params.get("width", ""))
            h = int(params.get("height", ""))
        except ValueError:
            return None
        if 1 <= w <= MAX_RENDER_PX and 1 <= h <= MAX_RENDER_PX:
            return w, h
        return None

    def get_image_area(self, params: Params) -> Response:
        try:
            return self._image_area(params)
        except ServiceError as exc:
            return self._image_area_error(params, exc)

    def _image_area(self, params: Params) -> Response:
        theme = params.get_int("t", 1, 2)
        scale = params.get_int("s", WIRE_SCALE_MIN, WIRE_SCALE_MAX)
        width = params.get_int("w", MIN_IMAGE_PX, MAX_IMAGE_PX)
        height = params.get_int("h", MIN_IMAGE_PX, MAX_IMAGE_PX)
        center = LonLatPt(params.get_float("lon"), params.get_float("lat"))
        grid_px = params.get_int("g", 0, 200, default=0)
        border_px = params.get_int("b", 0, 200, default=0)
        logo = params.get_int("logo", 0, 1, default=0)
        style = mosaic.RenderStyle(
            grid_style="utm" if grid_px > 0 else "none",
            grid_width_px=grid_px,
            grid_color=_argb_param(params, "gc", DEFAULT_GRID_COLOR),
            border_width_px=border_px,
            border_color=_argb_param(params, "bc", "FF000000"),
            font_name=params.get("f", "Sans"),
            font_color=_argb_param(params, "fc", "FF000000"),
            logo=bool(logo),
        )
        abb = area_from_utm(theme, scale, projection.lon_lat_to_utm(center), width, height)
        canvas = mosaic.compose_area(abb, self._fetch)
        if style.grid_width_px > 0:
            canvas = mosaic.draw_grid(canvas, abb, style)
        if style.border_width_px > 0:
            canvas = mosaic.draw_border(canvas, style)
        if style.logo:
            canvas = mosaic.draw_logo(canvas, style)
        encoding = self._default_encoding()
        return Response(200, MEDIA_TYPES[encoding], mosaic.encode(canvas, encoding), {})

    def _image_area_error(self, params: Params, exc: ServiceError) -> Response:
        """This endpoint has no Exceptions parameter: errors render in-image."""
        dims = None
        try:
            w = int(params.get("w", ""))
            h = int(params.get("h", ""))
            if 1 <= w <= MAX_RENDER_PX and 1 <= h <= MAX_RENDER_PX:
                dims = (w, h)
        except ValueError:
            pass
        w, h = dims if dims else (400, 200)
        canvas = mosaic.draw_message(mosaic.Canvas.blank(w, h), exc.message)
        encoding = self._default_encoding()
        return Response(
            STATUS_FOR_CODE.get(exc.code, 500),
            MEDIA_TYPES[encoding],
            mosaic.encode(canvas, encoding),
            {"X-Service-Error": exc.code, "X-Error-Message": exc.message},
        )


def _locator_attr(exc: ServiceError) -> str:
    return f' locator="{escape(exc.parameter)}"' if exc.parameter else ""


def _argb_param(params: Params, name: str, default: str) -> str:
    raw = params.get(name)
    if raw is None:
        return default
    mosaic.parse_argb(raw)  # validates, names the parameter on failure
    return raw


def _draw_grid_on_frame(
    canvas: mosaic.Canvas,
    zone: int,
    left: float,
    top: float,
    res_x: float,
    res_y: float,
    style: mosaic.RenderStyle,
) -> mosaic.Canvas:
    """Grid drawing for rescaled WMS output, where pixel resolution may be
    anisotropic: synthesize line positions directly in the output frame."""
    import numpy as np

    out = canvas.copy()
    mask = np.zeros((out.height, out.width), dtype=bool)
    w_px = style.grid_width_px
    if style.grid_style == "utm":
        step = mosaic.nice_spacing(min(res_x, res_y))
        right = left + out.width * res_x
        bottom = top - out.height * res_y
        m = math.ceil(left / step)
        while m * step < right:
            col = int(round((m * step - left) / res_x)) - (w_px - 1) // 2
            mask[:, max(col, 0) : max(col + w_px, 0)] = True
            m += 1
        m = math.ceil(bottom / step)
        while m * step <= top:
            row = int(round((top - m * step) / res_y)) - (w_px - 1) // 2
            mask[max(row, 0) : max(row + w_px, 0), :] = True
            m += 1
    else:
        # Geographic graticule on the output frame via per-edge solves.
        from .grid import _default_inverse

        def lonlat_at(col: float, row: float):
            return _default_inverse(zone, left + (col + 0.5) * res_x, top - (row + 0.5) * res_y)

        h, w = out.height, out.width
        lon_l = lonlat_at(0, (h - 1) / 2).lon
        lon_r = lonlat_at(w - 1, (h - 1) / 2).lon
        lat_b = lonlat_at((w - 1) / 2, h - 1).lat
        lat_t = lonlat_at((w - 1) / 2, 0).lat
        dpp_lon = max((lon_r - lon_l) / max(w - 1, 1), 1e-12)
        dpp_lat = max((lat_t - lat_b) / max(h - 1, 1), 1e-12)
        step_lon = mosaic.nice_spacing(dpp_lon)
        step_lat = mosaic.nice_spacing(dpp_lat)
        m = math.ceil(lon_l / step_lon)
        while m * step_lon <= lon_r:
            col = int(round((m * step_lon - lon_l) / dpp_lon)) - (w_px - 1) // 2
            mask[:, max(col, 0) : max(col + w_px, 0)] = True
            m += 1
        m = math.ceil(lat_b / step_lat)
        while m * step_lat <= lat_t:
            row = int(round((lat_t - m * step_lat) / dpp_lat)) - (w_px - 1) // 2
            mask[max(row, 0) : max(row + w_px, 0), :] = True
            m += 1
    mosaic._blend_mask(out.pixels, mask, style.grid_color)
    return out


# ---------------------------------------------------------------------------
# HTTP server
# ---------------------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    service: TileService  # set by make_server

    def do_GET(self):
        parts = urlsplit(self.path)
        response = self.service.handle(parts.path, parts.query)
        self.send_response(response.status)
        self.send_header("Content-Type", response.content_type)
        self.send_header("Content-Length", str(len(response.body)))
        # Anonymous read-only service: let browser clients on other origins in.
        self.send_header("Access-Control-Allow-Origin", "*")
        for key, value in response.headers.items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(response.body)

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


class _Server(ThreadingHTTPServer):
    # Default accept backlog (5) makes bursts of concurrent clients hit SYN
    # retransmits; size for tens of simultaneous connections.
    request_queue_size = 128
    daemon_threads = True


def make_server(service: TileService, host: str = "127.0.0.1", port: int = 0) -> _Server:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return _Server((host, port), handler)


def serve_config(config: ServiceConfig) -> ThreadingHTTPServer:
    store = TileStore(config.store_path)
    gazetteer = Gazetteer()
    if config.gazetteer_path:
        gazetteer.load(config.gazetteer_path)
    service = TileService(store, gazetteer, test_mode=config.test_mode)
    return make_server(service, config.host, config.port)


def run(config: ServiceConfig) -> None:
    server = serve_config(config)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (store={config.store_path})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
