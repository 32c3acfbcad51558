"""HTTP service tests: endpoint behavior, parameter tables, exception styles."""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import conftest
import oracles
from tileserv import mosaic
from tileserv.grid import LonLatPt, TileId, UtmPt
from tileserv.projection import lon_lat_to_utm, utm_to_lon_lat
from tileserv.service import Params, TileService


def call(service: TileService, path: str, query: str):
    return service.handle(path, query)


@pytest.fixture(scope="module")
def svc(demo_service):
    return demo_service


class TestParams:
    def test_case_insensitive_names(self):
        p = Params("THEME=1&Scale=10")
        assert p.get("theme") == "1"
        assert p.get("SCALE") == "10"

    def test_echo_preserves_original(self):
        p = Params("Theme=1&x=2")
        assert p.echo == {"Theme": "1", "x": "2"}

    def test_unknown_names_ignored(self, svc):
        # The classic request template passes fs=, which the table omits.
        resp = call(svc, "/GetImageArea", "T=1&S=10&Lon=-122.42&Lat=37.775&W=60&H=60&F=Arial&fs=6&fc=ff000000")
        assert resp.status == 200
        assert resp.content_type == "image/png"


class TestGetTile:
    def test_stored_tile_exact_bytes(self, svc, demo_store):
        tile = TileId(1, 10, 10, 2755, 20904)
        resp = call(svc, "/GetTile", "theme=1&scale=10&scene=10&x=2755&y=20904")
        assert resp.status == 200
        assert resp.content_type == "image/png"
        assert resp.body == demo_store.get_tile(tile).data

    def test_ocean_tile_not_found(self, svc):
        resp = call(svc, "/GetTile", "theme=1&scale=10&scene=10&x=1&y=1")
        assert resp.status == 404
        doc = json.loads(resp.body)
        assert doc["error"]["code"] == "not_found"

    def test_scale_99_validation_names_parameter(self, svc):
        resp = call(svc, "/GetTile", "theme=1&scale=99&scene=10&x=0&y=0")
        assert resp.status == 400
        doc = json.loads(resp.body)
        assert doc["error"]["code"] == "validation"
        assert doc["error"]["parameter"] == "scale"

    def test_case_insensitive_parameters(self, svc):
        a = call(svc, "/GetTile", "theme=1&scale=10&scene=10&x=2755&y=20904")
        b = call(svc, "/gettile", "THEME=1&SCALE=10&SCENE=10&X=2755&Y=20904")
        assert a.body == b.body


class TestGetTileMeta:
    def test_from_tile_id_geometry_and_date(self, svc):
        resp = call(svc, "/GetTileMetaFromTileId", "theme=1&scale=10&scene=10&x=2755&y=20904")
        doc = json.loads(resp.body)["result"]
        assert doc["captureDate"] == conftest.DOQ_DATE
        lon, lat = oracles.snyder_inverse(10, 551000.0, 4181000.0)
        assert abs(doc["nw"]["lon"] - lon) < 1e-7
        assert abs(doc["nw"]["lat"] - lat) < 1e-7
        assert doc["extent"]["minEasting"] == 551000.0
        assert doc["neighbors"]["e"]["x"] == 2756

    def test_absent_tile_meta_has_unknown_date(self, svc):
        resp = call(svc, "/GetTileMetaFromTileId", "theme=1&scale=10&scene=10&x=2800&y=20990")
        doc = json.loads(resp.body)["result"]
        assert doc["captureDate"] == "unknown"

    def test_from_lon_lat_point(self, svc):
        center = utm_to_lon_lat(UtmPt(10, 551130.0, 4180998.0))
        resp = call(
            svc,
            "/GetTileMetaFromLonLatPt",
            f"theme=1&scale=10&lon={center.lon}&lat={center.lat}",
        )
        doc = json.loads(resp.body)["result"]
        assert (doc["id"]["x"], doc["id"]["y"]) == (2755, 20904)

    def test_central_meridian_equator_tile(self, svc):
        resp = call(svc, "/GetTileMetaFromLonLatPt", "theme=1&scale=10&lon=-123&lat=0")
        doc = json.loads(resp.body)["result"]
        assert (doc["id"]["x"], doc["id"]["y"]) == (2500, 0)

    def test_high_latitude_domain_error(self, svc):
        resp = call(svc, "/GetTileMetaFromLonLatPt", "theme=1&scale=10&lon=-122&lat=89")
        assert resp.status == 422
        assert json.loads(resp.body)["error"]["code"] == "domain"

    def test_meta_response_in_granularity_band(self, svc):
        resp = call(svc, "/GetTileMetaFromTileId", "theme=1&scale=10&scene=10&x=2755&y=20904")
        assert 1000 <= len(resp.body) <= 10000


class TestGetAreaFromPt:
    def scenario_query(self):
        center = utm_to_lon_lat(UtmPt(10, 551000.0, 4181050.0))
        return f"theme=1&scale=10&lon={center.lon}&lat={center.lat}&width=600&height=400"

    def test_spec_scenario(self, svc):
        resp = call(svc, "/GetAreaFromPt", self.scenario_query())
        doc = json.loads(resp.body)["result"]
        nw = doc["northWest"]
        assert (nw["tileMeta"]["id"]["x"], nw["tileMeta"]["id"]["y"]) == (2753, 20906)
        assert (nw["offset"]["xOffset"], nw["offset"]["yOffset"]) == (100, 150)
        assert doc["northEast"]["tileMeta"]["id"]["x"] == 2756
        assert doc["southWest"]["tileMeta"]["id"]["y"] == 20904

    def test_decoration_dates_and_nearest_place(self, svc):
        resp = call(svc, "/GetAreaFromPt", self.scenario_query())
        doc = json.loads(resp.body)["result"]
        assert doc["northWest"]["tileMeta"]["captureDate"] == conftest.DOQ_DATE
        assert doc["nearestPlace"]["name"] == "San Francisco"
        assert doc["nearestPlace"]["direction"] in (
            "N", "NE", "E", "SE", "S", "SW", "W", "NW",
        )

    def test_single_tile_area(self, svc):
        from tileserv.grid import tile_extent

        mid = tile_extent(TileId(1, 10, 10, 2755, 20904)).midpoint
        center = utm_to_lon_lat(mid)
        resp = call(
            svc,
            "/GetAreaFromPt",
            f"theme=1&scale=10&lon={center.lon}&lat={center.lat}&width=200&height=200",
        )
        doc = json.loads(resp.body)["result"]
        ids = {
            (doc[k]["tileMeta"]["id"]["x"], doc[k]["tileMeta"]["id"]["y"])
            for k in ("northWest", "northEast", "southWest", "southEast", "center")
        }
        assert ids == {(2755, 20904)}

    def test_width_2001_validation(self, svc):
        center = utm_to_lon_lat(UtmPt(10, 551000.0, 4181050.0))
        resp = call(
            svc,
            "/GetAreaFromPt",
            f"theme=1&scale=10&lon={center.lon}&lat={center.lat}&width=2001&height=400",
        )
        assert resp.status == 400
        assert json.loads(resp.body)["error"]["parameter"] == "width"

    def test_response_in_granularity_band(self, svc):
        resp = call(svc, "/GetAreaFromPt", self.scenario_query())
        assert 1000 <= len(resp.body) <= 10000


class TestPlacesEndpoints:
    def test_place_facts_exact(self, svc):
        resp = call(
            svc,
            "/GetPlaceFacts",
            "city=San Francisco&state=California&country=United States of America",
        )
        docs = json.loads(resp.body)["result"]
        assert len(docs) == 1
        assert docs[0]["center"] == {"lon": -122.4194, "lat": 37.7749}

    def test_place_facts_wildcard(self, svc):
        resp = call(svc, "/GetPlaceFacts", "state=California")
        docs = json.loads(resp.body)["result"]
        assert {d["city"] for d in docs} >= {"San Francisco", "Los Angeles", "Oakland"}

    def test_place_facts_no_match(self, svc):
        resp = call(svc, "/GetPlaceFacts", "city=Nowhereville")
        assert json.loads(resp.body)["result"] == []

    def test_place_facts_blank_rejected(self, svc):
        resp = call(svc, "/GetPlaceFacts", "")
        assert resp.status == 400

    def test_place_list(self, svc):
        resp = call(svc, "/GetPlaceList", "ulLon=-123.5&ulLat=38.5&lrLon=-121.5&lrLat=37.0&maxItems=3")
        docs = json.loads(resp.body)["result"]
        names = [d["city"] for d in docs]
        assert names[0] == "San Jose"  # top population inside the box
        assert len(names) <= 3


class TestOgcMapCapabilities:
    def test_minimal_parameters(self, svc):
        resp = call(svc, "/OgcMap", "Version=1.1.1&Request=GetCapabilities&Service=wms")
        assert resp.status == 200
        assert resp.content_type == "application/vnd.ogc.wms_xml"
        root = ET.fromstring(resp.body)
        names = {el.text for el in root.iter("Name")}
        assert {"DOQ", "DRG"} <= names
        srs = next(el.text for el in root.iter("SRS"))
        assert "EPSG:26903" in srs and "EPSG:26920" in srs

    def test_missing_service_rejected(self, svc):
        resp = call(svc, "/OgcMap", "Version=1.1.1&Request=GetCapabilities")
        assert resp.content_type == "application/vnd.ogc.se_xml"


def getmap_query(**overrides):
    base = {
        "Version": "1.1.1",
        "Request": "GetMap",
        "Layers": "DOQ",
        "Styles": "blank",
        "SRS": "EPSG:26910",
        "BBOX": "550700,4180850,551300,4181250",
        "Width": "60",
        "Height": "50",
        "Format": "image/png",
        "Exceptions": "se_xml",
    }
    base.update(overrides)
    return "&".join(f"{k}={v}" for k, v in base.items())


class TestOgcMapGetMap:
    def test_basic_map(self, svc):
        resp = call(svc, "/OgcMap", getmap_query())
        assert resp.status == 200
        assert resp.content_type == "image/png"
        canvas = mosaic.decode(resp.body)
        assert (canvas.width, canvas.height) == (60, 50)

    def test_native_scale_selection_rule(self, svc):
        # 683.25 m across 60 px -> 11.3875 m/px -> linear-nearest is 8 m/px.
        resp = call(
            svc,
            "/OgcMap",
            getmap_query(BBOX="550700,4180850,551383.25,4181250", Width="60", Height="50"),
        )
        assert resp.headers["X-Native-Scale"] == "13"

    def test_native_scale_oracle(self, svc):
        # Linear nearest-resolution oracle over the served ladder; note the
        # exact midpoint 48 ties toward the finer scale.
        for requested, expect in [
            (1.0, 10), (1.49, 10), (1.51, 11), (3.1, 12), (11.3875, 13),
            (6.0, 12), (48.0, 15), (500.0, 16), (24.0, 14),
        ]:
            got = TileService.native_scale_for(requested)
            resolutions = {code: 2.0 ** (code - 10) for code in range(10, 17)}
            best = min(resolutions, key=lambda c: (abs(requested - resolutions[c]), c))
            assert got == best == expect, requested

    def test_exact_power_of_two_uses_pyramid_level(self, svc):
        # 400 m over 200 px is exactly 2 m/px: served straight from scale 11.
        resp = call(
            svc,
            "/OgcMap",
            getmap_query(BBOX="550800,4180800,551200,4181200", Width="200", Height="200"),
        )
        assert resp.headers["X-Native-Scale"] == "11"

    def test_rescaling_matches_native_compose(self, svc, demo_store):
        # 400 m over 300 px = 1.333 m/px: nearest native is scale 10, then
        # bilinear rescale to the requested size.
        resp = call(
            svc,
            "/OgcMap",
            getmap_query(BBOX="550800,4180800,551200,4181200", Width="300", Height="300"),
        )
        assert resp.headers["X-Native-Scale"] == "10"
        canvas = mosaic.decode(resp.body)
        native = oracles.compose_reference(
            10, 551000.0, 4181000.0, 400, 400, conftest.doq_tile_pixels
        )
        expect = mosaic.rescale(mosaic.Canvas(native), 300, 300)
        assert np.array_equal(canvas.pixels, expect.pixels)

    def test_styles_utmgrid_draws(self, svc):
        plain = call(svc, "/OgcMap", getmap_query(Width="200", Height="200"))
        gridded = call(svc, "/OgcMap", getmap_query(Width="200", Height="200", Styles="UtmGrid"))
        assert plain.body != gridded.body

    def test_jpeg_format(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Format="image/jpeg"))
        assert resp.content_type == "image/jpeg"
        assert resp.body[:2] == b"\xff\xd8"


class TestOgcMapExceptions:
    def test_se_xml_document(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Width="49"))
        assert resp.content_type == "application/vnd.ogc.se_xml"
        root = ET.fromstring(resp.body)
        assert root.tag == "ServiceExceptionReport"
        exc = root.find("ServiceException")
        assert exc.get("code") == "validation"
        assert exc.get("locator") == "width"

    def test_se_blank_exact_requested_dimensions(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Width="2001", Exceptions="se_blank"))
        canvas = mosaic.decode(resp.body)
        assert (canvas.width, canvas.height) == (2001, 50)
        assert np.all(canvas.pixels == canvas.pixels[0, 0])

    def test_se_inimage_contains_message(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Width="49", Exceptions="se_inimage"))
        canvas = mosaic.decode(resp.body)
        assert (canvas.width, canvas.height) == (49, 50)
        blank = mosaic.Canvas.blank(49, 50)
        assert (canvas.pixels != blank.pixels).any()
        assert "width" in resp.headers["X-Error-Message"]

    def test_bad_srs_zone(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(SRS="EPSG:26925"))
        root = ET.fromstring(resp.body)
        assert root.find("ServiceException").get("locator") == "srs"

    def test_unknown_layer(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Layers="TOPO"))
        assert resp.content_type == "application/vnd.ogc.se_xml"

    def test_invalid_exceptions_value_defaults_to_se_xml(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Width="49", Exceptions="se_nonsense"))
        assert resp.content_type == "application/vnd.ogc.se_xml"

    def test_unparseable_dims_fall_back_to_xml(self, svc):
        resp = call(svc, "/OgcMap", getmap_query(Width="abc", Exceptions="se_blank"))
        assert resp.content_type == "application/vnd.ogc.se_xml"

    def test_missing_required_parameter_styled(self, svc):
        query = getmap_query(Exceptions="se_inimage").replace("BBOX=550700,4180850,551300,4181250&", "")
        resp = call(svc, "/OgcMap", query)
        assert resp.content_type == "image/png"
        assert "bbox" in resp.headers["X-Error-Message"].lower()


class TestGetImageArea:
    def area_query(self, **overrides):
        center = utm_to_lon_lat(UtmPt(10, 551000.0, 4181050.0))
        base = {"T": "1", "S": "10", "Lon": str(center.lon), "Lat": str(center.lat),
                "W": "600", "H": "400"}
        base.update(overrides)
        return "&".join(f"{k}={v}" for k, v in base.items())

    def test_soil_viewer_call_shape(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query())
        assert resp.status == 200
        canvas = mosaic.decode(resp.body)
        assert (canvas.width, canvas.height) == (600, 400)
        expect = oracles.compose_reference(
            10, 551000.0, 4181050.0, 600, 400, conftest.doq_tile_pixels
        )
        assert np.array_equal(canvas.pixels, expect)

    def test_grid_zero_means_no_grid(self, svc):
        plain = call(svc, "/GetImageArea", self.area_query(G="0"))
        gridded = call(svc, "/GetImageArea", self.area_query(G="2", GC="FFFF0000"))
        assert plain.body != gridded.body
        base = call(svc, "/GetImageArea", self.area_query())
        assert plain.body == base.body

    def test_argb_font_color_accepted(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query(FC="80FF0000", LOGO="1"))
        assert resp.status == 200

    def test_bad_argb_rejected_in_image(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query(GC="XYZ", G="1"))
        assert resp.status == 400
        assert resp.content_type == "image/png"
        assert "8 hex digits" in resp.headers["X-Error-Message"]

    def test_border_and_logo(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query(B="3", BC="FF000000", LOGO="1"))
        canvas = mosaic.decode(resp.body)
        assert np.all(canvas.pixels[:3, :] == 0)

    def test_validation_error_rendered_in_image(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query(W="49"))
        assert resp.status == 400
        canvas = mosaic.decode(resp.body)
        assert (canvas.width, canvas.height) == (49, 400)
        assert resp.headers["X-Service-Error"] == "validation"

    def test_drg_theme(self, svc):
        resp = call(svc, "/GetImageArea", self.area_query(T="2", S="11"))
        assert resp.status == 200


class TestStatelessness:
    def test_identical_requests_identical_responses(self, svc):
        q = "theme=1&scale=10&scene=10&x=2755&y=20904"
        first = call(svc, "/GetTile", q)
        second = call(svc, "/GetTile", q)
        assert first.body == second.body

    def test_read_only_store_digest_stable(self, svc, demo_store):
        digest = demo_store.manifest_digest()
        for path, query in [
            ("/GetTile", "theme=1&scale=10&scene=10&x=2755&y=20904"),
            ("/GetImageArea", TestGetImageArea().area_query()),
            ("/OgcMap", getmap_query()),
            ("/GetPlaceFacts", "city=San Francisco"),
        ]:
            call(svc, path, query)
        assert demo_store.manifest_digest() == digest

    def test_unknown_endpoint_not_found(self, svc):
        resp = call(svc, "/NoSuchMethod", "")
        assert resp.status == 404
