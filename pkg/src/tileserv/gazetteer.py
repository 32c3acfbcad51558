"""Place-name service: keyword search, area listing, nearest landmark.

The backing file is pipe-delimited text, one place per row:

    name|state|country|lon|lat|type|population

``type`` is one of city/landmark/park/water/other and ``population`` may be
blank. Lines starting with ``#`` are comments. Malformed rows are skipped
with row-numbered diagnostics; a file with zero valid rows is rejected.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import StateError, ValidationError
from .grid import LonLatPt

PLACE_TYPES = ("city", "landmark", "park", "water", "other")

# Only "significant" landmarks qualify for nearest-place lookups.
NEAREST_ELIGIBLE_TYPES = ("city", "landmark")

EARTH_RADIUS_M = 6371008.8

COMPASS_8 = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")


@dataclass(frozen=True)
class Place:
    city: str = ""
    state: str = ""
    country: str = ""


@dataclass(frozen=True)
class PlaceFacts:
    place: Place
    center: LonLatPt
    place_type: str
    population: Optional[int] = None


@dataclass(frozen=True)
class NearestPlace:
    name: str
    distance_meters: float
    direction: str

    def __post_init__(self):
        if self.distance_meters < 0:
            raise ValidationError("distance must be non-negative")
        if self.direction not in COMPASS_8:
            raise ValidationError(f"direction must be 8-point compass, got {self.direction!r}")


def great_circle_m(a: LonLatPt, b: LonLatPt) -> float:
    """Spherical great-circle distance (haversine)."""
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dphi = p2 - p1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing_deg(frm: LonLatPt, to: LonLatPt) -> float:
    """Great-circle initial bearing from ``frm`` to ``to``: 0 = north, clockwise."""
    p1, p2 = math.radians(frm.lat), math.radians(to.lat)
    dlam = math.radians(to.lon - frm.lon)
    x = math.sin(dlam) * math.cos(p2)
    y = math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dlam)
    return math.degrees(math.atan2(x, y)) % 360.0


def compass_point(bearing_deg: float) -> str:
    """Quantize a bearing into 45-degree sectors centered on the cardinals."""
    return COMPASS_8[int(round(bearing_deg / 45.0)) % 8]


class Gazetteer:
    """In-memory place index; loads replace the index atomically."""

    def __init__(self):
        self._places: tuple[PlaceFacts, ...] = ()
        self._lock = threading.Lock()
        self.diagnostics: list[str] = []

    def __len__(self) -> int:
        return len(self._places)

    def load(self, path: str | Path) -> int:
        """Parse and index a fixture file, returning the count loaded."""
        text = Path(path).read_text()  # unreadable file raises OSError
        places: list[PlaceFacts] = []
        diagnostics: list[str] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split("|")]
            if len(fields) not in (6, 7):
                diagnostics.append(f"row {lineno}: expected 6 or 7 fields, got {len(fields)}")
                continue
            name, state, country, lon_s, lat_s, ptype = fields[:6]
            pop_s = fields[6] if len(fields) == 7 else ""
            if not name:
                diagnostics.append(f"row {lineno}: blank name")
                continue
            if ptype not in PLACE_TYPES:
                diagnostics.append(f"row {lineno}: unknown type {ptype!r}")
                continue
            try:
                center = LonLatPt(float(lon_s), float(lat_s))
            except Exception:
                diagnostics.append(f"row {lineno}: bad coordinates ({lon_s!r}, {lat_s!r})")
                continue
            population: Optional[int] = None
            if pop_s:
                try:
                    population = int(pop_s)
                except ValueError:
                    diagnostics.append(f"row {lineno}: bad population {pop_s!r}")
                    continue
            places.append(
                PlaceFacts(
                    place=Place(city=name, state=state, country=country),
                    center=center,
                    place_type=ptype,
                    population=population,
                )
            )
        if not places:
            raise ValidationError(f"no valid rows in gazetteer file {path}")
        with self._lock:
            self._places = tuple(places)
            self.diagnostics = diagnostics
        return len(places)

    def get_place_facts(self, query: Place) -> list[PlaceFacts]:
        """Case-insensitive exact match on each non-blank field; blank fields
        match anything. Ordered by (name, state)."""
        if not (query.city or query.state or query.country):
            raise ValidationError("at least one query field must be non-blank")

        def matches(p: PlaceFacts) -> bool:
            return (
                (not query.city or p.place.city.lower() == query.city.lower())
                and (not query.state or p.place.state.lower() == query.state.lower())
                and (not query.country or p.place.country.lower() == query.country.lower())
            )

        found = [p for p in self._places if matches(p)]
        found.sort(key=lambda p: (p.place.city.lower(), p.place.state.lower()))
        return found

    def get_place_list(
        self, upper_left: LonLatPt, lower_right: LonLatPt, max_items: int
    ) -> list[PlaceFacts]:
        """Places inside the rectangle, population-descending then name order."""
        if not (upper_left.lat > lower_right.lat and upper_left.lon < lower_right.lon):
            raise ValidationError("degenerate rectangle: need upperLeft NW of lowerRight")
        if max_items < 1:
            raise ValidationError(f"maxItems must be >= 1, got {max_items}", "maxItems")
        found = [
            p
            for p in self._places
            if upper_left.lon <= p.center.lon <= lower_right.lon
            and lower_right.lat <= p.center.lat <= upper_left.lat
        ]
        found.sort(key=lambda p: (-(p.population or 0), p.place.city.lower()))
        return found[:max_items]

    def nearest_place(self, p: LonLatPt) -> NearestPlace:
        """Closest city/landmark by great-circle distance; the direction reads
        FROM the place TO the query point ("3 km NE of Springfield")."""
        if not self._places:
            raise StateError("gazetteer is empty")
        best: tuple[float, str, PlaceFacts] | None = None
        for facts in self._places:
            if facts.place_type not in NEAREST_ELIGIBLE_TYPES:
                continue
            d = great_circle_m(facts.center, p)
            key = (d, facts.place.city.lower())
            if best is None or key < (best[0], best[1]):
                best = (d, facts.place.city.lower(), facts)
        if best is None:
            raise StateError("gazetteer has no city/landmark entries")
        distance, _name, facts = best
        if distance == 0.0:
            direction = "N"  # bearing undefined at zero distance
        else:
            direction = compass_point(initial_bearing_deg(facts.center, p))
        return NearestPlace(
            name=facts.place.city, distance_meters=distance, direction=direction
        )
