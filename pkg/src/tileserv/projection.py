"""Geographic <-> UTM NAD83 conversion on the GRS80 ellipsoid.

Implements the transverse Mercator projection as the Krueger series in the
third flattening n, carried to n^6. With GRS80's n ~ 1.68e-3 the truncation
error is far below a millimeter anywhere inside a zone, so round trips close
to better than 1e-9 degrees. Standard UTM framing: central scale factor
0.9996, false easting 500 000 m, false northing 0 (northern hemisphere),
central meridian at zone*6 - 183 degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .grid import LonLatPt, UtmPt, validate_zone


@dataclass(frozen=True)
class Ellipsoid:
    semi_major_axis: float
    inverse_flattening: float


GRS80 = Ellipsoid(semi_major_axis=6378137.0, inverse_flattening=298.257222101)

SCALE_FACTOR = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING = 0.0

LAT_MIN, LAT_MAX = 0.0, 84.0  # northern hemisphere band the series serves
EASTING_MIN, EASTING_MAX = 160000.0, 840000.0  # sanity band around the meridian

_F = 1.0 / GRS80.inverse_flattening
_E2 = _F * (2.0 - _F)  # first eccentricity squared
_E = math.sqrt(_E2)
_N = _F / (2.0 - _F)  # third flattening

# Rectifying radius: A = a/(1+n) * (1 + n^2/4 + n^4/64 + n^6/256)
_A_RECT = (
    GRS80.semi_major_axis
    / (1.0 + _N)
    * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)
)

# Krueger series coefficients, order n^6.
_ALPHA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 5.0 / 16.0 * _N**3
    + 41.0 / 180.0 * _N**4 - 127.0 / 288.0 * _N**5 + 7891.0 / 37800.0 * _N**6,
    13.0 / 48.0 * _N**2 - 3.0 / 5.0 * _N**3
    + 557.0 / 1440.0 * _N**4 + 281.0 / 630.0 * _N**5 - 1983433.0 / 1935360.0 * _N**6,
    61.0 / 240.0 * _N**3 - 103.0 / 140.0 * _N**4
    + 15061.0 / 26880.0 * _N**5 + 167603.0 / 181440.0 * _N**6,
    49561.0 / 161280.0 * _N**4 - 179.0 / 168.0 * _N**5 + 6601661.0 / 7257600.0 * _N**6,
    34729.0 / 80640.0 * _N**5 - 3418889.0 / 1995840.0 * _N**6,
    212378941.0 / 319334400.0 * _N**6,
)
_BETA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 37.0 / 96.0 * _N**3
    - 1.0 / 360.0 * _N**4 - 81.0 / 512.0 * _N**5 + 96199.0 / 604800.0 * _N**6,
    1.0 / 48.0 * _N**2 + 1.0 / 15.0 * _N**3
    - 437.0 / 1440.0 * _N**4 + 46.0 / 105.0 * _N**5 - 1118711.0 / 3870720.0 * _N**6,
    17.0 / 480.0 * _N**3 - 37.0 / 840.0 * _N**4
    - 209.0 / 4480.0 * _N**5 + 5569.0 / 90720.0 * _N**6,
    4397.0 / 161280.0 * _N**4 - 11.0 / 504.0 * _N**5 - 830251.0 / 7257600.0 * _N**6,
    4583.0 / 161280.0 * _N**5 - 108847.0 / 3991680.0 * _N**6,
    20648693.0 / 638668800.0 * _N**6,
)


def utm_zone_for_longitude(lon: float) -> int:
    """Zone number of a longitude: sixty 6-degree zones, zone 1 at -180."""
    if not -180.0 <= lon < 180.0:
        raise DomainError(f"longitude {lon!r} outside [-180, 180)", "lon")
    return int(math.floor((lon + 180.0) / 6.0)) + 1


def central_meridian(zone: int) -> float:
    validate_zone(zone)
    return zone * 6.0 - 183.0


def _conformal_tan(tau: float) -> float:
    """tan of the conformal latitude for tan(geodetic latitude) tau."""
    sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
    return tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)


def _geodetic_tan(taup: float) -> float:
    """Invert _conformal_tan by Newton iteration."""
    e2m = 1.0 - _E2
    tau = taup / e2m
    stol = math.sqrt(math.ulp(1.0)) * max(1.0, abs(taup))
    for _ in range(8):
        taupa = _conformal_tan(tau)
        dtau = (
            (taup - taupa)
            * (1.0 + e2m * tau * tau)
            / (e2m * math.hypot(1.0, tau) * math.hypot(1.0, taupa))
        )
        tau += dtau
        if abs(dtau) < stol:
            break
    return tau


def lon_lat_to_utm(p: LonLatPt, forced_zone: int | None = None) -> UtmPt:
    """Forward transverse Mercator projection of a geographic point.

    The zone is derived from the longitude unless ``forced_zone`` pins the
    projection to a specific zone's central meridian.
    """
    if not LAT_MIN <= p.lat <= LAT_MAX:
        raise DomainError(
            f"latitude {p.lat!r} outside served band [{LAT_MIN}, {LAT_MAX}]", "lat"
        )
    zone = forced_zone if forced_zone is not None else utm_zone_for_longitude(p.lon)
    validate_zone(zone)
    lam = math.radians(p.lon - central_meridian(zone))
    phi = math.radians(p.lat)

    taup = _conformal_tan(math.tan(phi))
    xi_p = math.atan2(taup, math.cos(lam))
    eta_p = math.asinh(math.sin(lam) / math.hypot(taup, math.cos(lam)))

    xi = xi_p
    eta = eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += a * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)

    easting = FALSE_EASTING + SCALE_FACTOR * _A_RECT * eta
    northing = FALSE_NORTHING + SCALE_FACTOR * _A_RECT * xi
    # The equator maps to northing 0; shield it from -0.0 / 1-ulp negatives.
    if -1e-6 < northing < 0.0:
        northing = 0.0
    return UtmPt(zone=zone, easting=easting, northing=northing)


def utm_to_lon_lat(p: UtmPt) -> LonLatPt:
    """Inverse transverse Mercator projection back to geographic coordinates."""
    if not EASTING_MIN < p.easting < EASTING_MAX:
        raise DomainError(
            f"easting {p.easting!r} outside sanity band "
            f"({EASTING_MIN}, {EASTING_MAX})",
            "easting",
        )
    xi = (p.northing - FALSE_NORTHING) / (SCALE_FACTOR * _A_RECT)
    eta = (p.easting - FALSE_EASTING) / (SCALE_FACTOR * _A_RECT)

    xi_p = xi
    eta_p = eta
    for j, b in enumerate(_BETA, start=1):
        xi_p -= b * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= b * math.cos(2 * j * xi) * math.sinh(2 * j * eta)

    taup = math.sin(xi_p) / math.hypot(math.sinh(eta_p), math.cos(xi_p))
    lam = math.atan2(math.sinh(eta_p), math.cos(xi_p))
    phi = math.atan(_geodetic_tan(taup))

    lon = central_meridian(p.zone) + math.degrees(lam)
    lat = math.degrees(phi)
    return LonLatPt(lon=lon, lat=lat)
