"""Client SDK: synchronous and asynchronous access to a running service.

Every method has a blocking form and a ``begin_*`` form returning a
PendingCall that can be polled, waited on, or given a completion callback;
both forms decode to the same typed values. Transport failures are retried
with exponential backoff (all methods are read-only, so retries are safe);
service-side faults raise the matching typed error from
:mod:`tileserv.errors`.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from . import errors
from .gazetteer import NearestPlace, Place, PlaceFacts
from .grid import (
    AreaBoundingBox,
    AreaCoordinate,
    LonLatPt,
    LonLatPtOffset,
    TileId,
    TileMeta,
)

ERROR_CLASSES = {
    "validation": errors.ValidationError,
    "domain": errors.DomainError,
    "not_found": errors.NotFoundError,
    "internal": errors.ServiceError,
}


class TransportError(Exception):
    """Network-level failure that persisted through every retry attempt."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_ms: tuple[int, ...] = (100, 200, 400)

    def delay(self, attempt: int) -> float:
        idx = min(attempt, len(self.backoff_ms) - 1)
        return self.backoff_ms[idx] / 1000.0


class PendingCall:
    """Handle for an in-flight call: poll ``state``, wait with ``result``,
    or receive exactly one completion notification."""

    def __init__(self, future: Future, on_complete: Optional[Callable] = None):
        self._future = future
        if on_complete is not None:
            future.add_done_callback(lambda _f: on_complete(self))

    @property
    def state(self) -> str:
        if not self._future.done():
            return "inFlight"
        return "failed" if self._future.exception() is not None else "done"

    def done(self) -> bool:
        return self._future.done()

    def result(self, timeout: Optional[float] = None):
        return self._future.result(timeout)


# ---------------------------------------------------------------------------
# Wire decoding
# ---------------------------------------------------------------------------


def _lon_lat(doc: dict) -> LonLatPt:
    return LonLatPt(doc["lon"], doc["lat"])


def _tile_id(doc: dict) -> TileId:
    return TileId(doc["theme"], doc["scale"], doc["scene"], doc["x"], doc["y"])


def tile_meta_from_json(doc: dict) -> TileMeta:
    return TileMeta(
        id=_tile_id(doc["id"]),
        nw=_lon_lat(doc["nw"]),
        ne=_lon_lat(doc["ne"]),
        sw=_lon_lat(doc["sw"]),
        se=_lon_lat(doc["se"]),
        center=_lon_lat(doc["center"]),
        capture_date=doc["captureDate"],
    )


def _area_coordinate(doc: dict) -> AreaCoordinate:
    return AreaCoordinate(
        tile_meta=tile_meta_from_json(doc["tileMeta"]),
        offset=LonLatPtOffset(
            point=_lon_lat(doc["offset"]["point"]),
            x_offset=doc["offset"]["xOffset"],
            y_offset=doc["offset"]["yOffset"],
        ),
    )


def abb_from_json(doc: dict) -> AreaBoundingBox:
    nearest = None
    if doc.get("nearestPlace"):
        np_doc = doc["nearestPlace"]
        nearest = NearestPlace(
            name=np_doc["name"],
            distance_meters=np_doc["distanceMeters"],
            direction=np_doc["direction"],
        )
    return AreaBoundingBox(
        north_west=_area_coordinate(doc["northWest"]),
        north_east=_area_coordinate(doc["northEast"]),
        south_west=_area_coordinate(doc["southWest"]),
        south_east=_area_coordinate(doc["southEast"]),
        center=_area_coordinate(doc["center"]),
        nearest_place=nearest,
    )


def place_facts_from_json(doc: dict) -> PlaceFacts:
    return PlaceFacts(
        place=Place(doc["city"], doc["state"], doc["country"]),
        center=_lon_lat(doc["center"]),
        place_type=doc["placeType"],
        population=doc["population"],
    )


# ---------------------------------------------------------------------------
# Client
# ---------------------------------------------------------------------------


class ServiceClient:
    """Typed access to the HTTP endpoints; safe to share across threads."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        retry: RetryPolicy = RetryPolicy(),
        max_workers: int = 8,
    ):
        if timeout <= 0:
            raise errors.ValidationError("timeout must be positive")
        if retry.attempts < 1:
            raise errors.ValidationError("retry attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retry = retry
        self._pool = ThreadPoolExecutor(max_workers=max_workers)

    def close(self) -> None:
        self._pool.shutdown(wait=False)

    # -- transport ----------------------------------------------------------

    def _fetch(self, path: str, params: dict) -> tuple[int, str, bytes, dict]:
        query = urllib.parse.urlencode(
            {k: v for k, v in params.items() if v is not None}
        )
        url = f"{self.base_url}{path}?{query}" if query else f"{self.base_url}{path}"
        last_error: Exception | None = None
        for attempt in range(self.retry.attempts):
            try:
                with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                    return (
                        resp.status,
                        resp.headers.get("Content-Type", ""),
                        resp.read(),
                        dict(resp.headers),
                    )
            except urllib.error.HTTPError as exc:
                # A status response, not a transport fault: pass upward.
                return exc.code, exc.headers.get("Content-Type", ""), exc.read(), dict(exc.headers)
            except (urllib.error.URLError, OSError, TimeoutError) as exc:
                last_error = exc
                if attempt + 1 < self.retry.attempts:
                    time.sleep(self.retry.delay(attempt))
        raise TransportError(str(last_error), self.retry.attempts)

    @staticmethod
    def _raise_service_error(status: int, content_type: str, body: bytes, headers: dict):
        if status < 400:
            return
        if content_type.startswith("application/json"):
            doc = json.loads(body)
            err = doc.get("error", {})
            cls = ERROR_CLASSES.get(err.get("code"), errors.ServiceError)
            raise cls(err.get("message", "service error"), err.get("parameter"))
        code = headers.get("X-Service-Error", "internal")
        message = headers.get("X-Error-Message", f"HTTP {status}")
        raise ERROR_CLASSES.get(code, errors.ServiceError)(message)

    def _get_bytes(self, path: str, params: dict) -> bytes:
        status, ctype, body, headers = self._fetch(path, params)
        self._raise_service_error(status, ctype, body, headers)
        return body

    def _get_result(self, path: str, params: dict):
        status, ctype, body, headers = self._fetch(path, params)
        self._raise_service_error(status, ctype, body, headers)
        return json.loads(body)["result"]

    # -- synchronous methods --------------------------------------------------

    def get_tile(self, tile: TileId) -> bytes:
        return self._get_bytes(
            "/GetTile",
            {"theme": tile.theme, "scale": tile.scale, "scene": tile.scene,
             "x": tile.x, "y": tile.y},
        )

    def try_get_tile(self, tile: TileId) -> Optional[bytes]:
        """get_tile with holes mapped to None (mosaic fill convention)."""
        try:
            return self.get_tile(tile)
        except errors.NotFoundError:
            return None

    def get_tile_meta_from_tile_id(self, tile: TileId) -> TileMeta:
        doc = self._get_result(
            "/GetTileMetaFromTileId",
            {"theme": tile.theme, "scale": tile.scale, "scene": tile.scene,
             "x": tile.x, "y": tile.y},
        )
        return tile_meta_from_json(doc)

    def get_tile_meta_from_lon_lat_pt(self, theme: int, scale: int, point: LonLatPt) -> TileMeta:
        doc = self._get_result(
            "/GetTileMetaFromLonLatPt",
            {"theme": theme, "scale": scale, "lon": point.lon, "lat": point.lat},
        )
        return tile_meta_from_json(doc)

    def get_area_from_pt(
        self, center: LonLatPt, theme: int, scale: int, width: int, height: int
    ) -> AreaBoundingBox:
        doc = self._get_result(
            "/GetAreaFromPt",
            {"theme": theme, "scale": scale, "lon": center.lon, "lat": center.lat,
             "width": width, "height": height},
        )
        return abb_from_json(doc)

    def get_place_facts(self, place: Place) -> list[PlaceFacts]:
        docs = self._get_result(
            "/GetPlaceFacts",
            {"city": place.city or None, "state": place.state or None,
             "country": place.country or None},
        )
        return [place_facts_from_json(d) for d in docs]

    def get_place_list(
        self, upper_left: LonLatPt, lower_right: LonLatPt, max_items: int = 50
    ) -> list[PlaceFacts]:
        docs = self._get_result(
            "/GetPlaceList",
            {"ulLon": upper_left.lon, "ulLat": upper_left.lat,
             "lrLon": lower_right.lon, "lrLat": lower_right.lat,
             "maxItems": max_items},
        )
        return [place_facts_from_json(d) for d in docs]

    def get_image_area(self, query: dict) -> bytes:
        return self._get_bytes("/GetImageArea", query)

    def ogc_map(self, query: dict) -> tuple[int, str, bytes, dict]:
        return self._fetch("/OgcMap", query)

    # -- asynchronous forms -----------------------------------------------------

    def _begin(self, fn: Callable, *args, on_complete=None, **kwargs) -> PendingCall:
        return PendingCall(self._pool.submit(fn, *args, **kwargs), on_complete)

    def begin_get_tile(self, tile: TileId, on_complete=None) -> PendingCall:
        return self._begin(self.get_tile, tile, on_complete=on_complete)

    def begin_get_tile_meta_from_tile_id(self, tile: TileId, on_complete=None) -> PendingCall:
        return self._begin(self.get_tile_meta_from_tile_id, tile, on_complete=on_complete)

    def begin_get_tile_meta_from_lon_lat_pt(
        self, theme: int, scale: int, point: LonLatPt, on_complete=None
    ) -> PendingCall:
        return self._begin(
            self.get_tile_meta_from_lon_lat_pt, theme, scale, point, on_complete=on_complete
        )

    def begin_get_area_from_pt(
        self, center: LonLatPt, theme: int, scale: int, width: int, height: int, on_complete=None
    ) -> PendingCall:
        return self._begin(
            self.get_area_from_pt, center, theme, scale, width, height, on_complete=on_complete
        )

    def begin_get_place_facts(self, place: Place, on_complete=None) -> PendingCall:
        return self._begin(self.get_place_facts, place, on_complete=on_complete)

    def begin_get_place_list(
        self, upper_left: LonLatPt, lower_right: LonLatPt, max_items: int = 50, on_complete=None
    ) -> PendingCall:
        return self._begin(
            self.get_place_list, upper_left, lower_right, max_items, on_complete=on_complete
        )
