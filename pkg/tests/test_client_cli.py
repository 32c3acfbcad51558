"""Client SDK and CLI tests against a live fixture server."""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

import conftest
from tileserv import cli, mosaic
from tileserv.client import PendingCall, RetryPolicy, ServiceClient, TransportError
from tileserv.errors import NotFoundError, ValidationError
from tileserv.gazetteer import Place
from tileserv.grid import LonLatPt, TileId, UtmPt
from tileserv.projection import utm_to_lon_lat
from tileserv.service import load_config, make_server

DEAD_URL = "http://127.0.0.1:9"  # discard port: nothing listens there


@pytest.fixture(scope="module")
def client(server_url):
    c = ServiceClient(server_url, timeout=10.0)
    yield c
    c.close()


def sf_center() -> LonLatPt:
    return utm_to_lon_lat(UtmPt(10, 551000.0, 4181050.0))


class TestSyncMethods:
    def test_place_facts_scenario(self, client):
        results = client.get_place_facts(
            Place("San Francisco", "California", "United States of America")
        )
        assert len(results) == 1
        assert results[0].population == 873965

    def test_get_tile_bytes(self, client, demo_store):
        tile = TileId(1, 10, 10, 2755, 20904)
        assert client.get_tile(tile) == demo_store.get_tile(tile).data

    def test_tile_not_found_typed(self, client):
        with pytest.raises(NotFoundError):
            client.get_tile(TileId(1, 10, 10, 1, 1))

    def test_try_get_tile_maps_holes_to_none(self, client):
        assert client.try_get_tile(TileId(1, 10, 10, 1, 1)) is None

    def test_service_error_passthrough_with_parameter(self, client):
        with pytest.raises(ValidationError) as info:
            client.get_area_from_pt(sf_center(), 1, 10, 2001, 400)
        assert info.value.parameter == "width"

    def test_get_area_typed_round_trip(self, client):
        abb = client.get_area_from_pt(sf_center(), 1, 10, 600, 400)
        assert abb.north_west.tile_meta.id.x == 2753
        assert abb.north_west.offset.x_offset == 100
        assert abb.nearest_place.name == "San Francisco"

    def test_get_tile_meta_typed(self, client):
        meta = client.get_tile_meta_from_tile_id(TileId(1, 10, 10, 2755, 20904))
        assert meta.capture_date == conftest.DOQ_DATE


class TestAsyncMethods:
    def test_async_equals_sync_for_every_method(self, client):
        cases = [
            ("get_tile", (TileId(1, 10, 10, 2755, 20904),)),
            ("get_tile_meta_from_tile_id", (TileId(1, 10, 10, 2755, 20904),)),
            ("get_tile_meta_from_lon_lat_pt", (1, 10, sf_center())),
            ("get_area_from_pt", (sf_center(), 1, 10, 600, 400)),
            ("get_place_facts", (Place("Portland", "", ""),)),
            ("get_place_list", (LonLatPt(-123.5, 38.5), LonLatPt(-121.5, 37.0), 5)),
        ]
        for name, args in cases:
            sync_value = getattr(client, name)(*args)
            pending = getattr(client, f"begin_{name}")(*args)
            assert pending.result(timeout=10) == sync_value
            assert pending.state == "done"

    def test_immediate_poll_then_done(self, server_url, demo_service):
        class SlowService:
            def handle(self, path, query):
                time.sleep(0.2)
                return demo_service.handle(path, query)

        server = make_server(SlowService(), "127.0.0.1", 0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        host, port = server.server_address[:2]
        slow = ServiceClient(f"http://{host}:{port}")
        try:
            pending = slow.begin_get_place_facts(Place("Portland", "", ""))
            assert pending.state == "inFlight"
            assert not pending.done()
            result = pending.result(timeout=10)
            assert pending.state == "done"
            assert len(result) == 2
        finally:
            slow.close()
            server.shutdown()

    def test_failed_call_state(self, client):
        pending = client.begin_get_tile(TileId(1, 10, 10, 1, 1))
        with pytest.raises(NotFoundError):
            pending.result(timeout=10)
        assert pending.state == "failed"

    def test_completion_callback_invoked_once(self, client):
        seen = []
        done = threading.Event()

        def on_complete(call: PendingCall):
            seen.append(call.state)
            done.set()

        client.begin_get_place_facts(Place("Portland", "", ""), on_complete=on_complete)
        assert done.wait(timeout=10)
        time.sleep(0.05)
        assert seen == ["done"]


class TestTransport:
    def test_transport_error_carries_attempts(self):
        c = ServiceClient(DEAD_URL, timeout=0.5, retry=RetryPolicy(attempts=3, backoff_ms=(10, 20, 40)))
        with pytest.raises(TransportError) as info:
            c.get_place_facts(Place("X", "", ""))
        assert info.value.attempts == 3
        c.close()

    def test_single_attempt_policy(self):
        c = ServiceClient(DEAD_URL, timeout=0.5, retry=RetryPolicy(attempts=1, backoff_ms=(10,)))
        start = time.monotonic()
        with pytest.raises(TransportError):
            c.get_place_facts(Place("X", "", ""))
        assert time.monotonic() - start < 2.0
        c.close()


class TestDownloadImageCli:
    def test_client_side_composition_matches_server_side(self, server_url, client, tmp_path):
        center = sf_center()
        out = tmp_path / "sf.png"
        runner = CliRunner()
        result = runner.invoke(
            cli.main,
            ["download-image", "--url", server_url, "--lon", str(center.lon),
             "--lat", str(center.lat), "--theme", "1", "--scale", "10",
             "--width", "600", "--height", "400", "--output", str(out)],
        )
        assert result.exit_code == 0, result.output
        local = mosaic.decode(out.read_bytes())
        server_bytes = client.get_image_area(
            {"T": 1, "S": 10, "Lon": center.lon, "Lat": center.lat, "W": 600, "H": 400}
        )
        remote = mosaic.decode(server_bytes)
        assert np.array_equal(local.pixels, remote.pixels)

    def test_via_server_single_request(self, server_url, tmp_path):
        center = sf_center()
        out = tmp_path / "sf_server.png"
        runner = CliRunner()
        result = runner.invoke(
            cli.main,
            ["download-image", "--url", server_url, "--lon", str(center.lon),
             "--lat", str(center.lat), "--width", "300", "--height", "200",
             "--output", str(out), "--via-server"],
        )
        assert result.exit_code == 0, result.output
        canvas = mosaic.decode(out.read_bytes())
        assert (canvas.width, canvas.height) == (300, 200)

    def test_width_49_usage_error(self, server_url, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            cli.main,
            ["download-image", "--url", server_url, "--lon", "-122.4", "--lat", "37.8",
             "--width", "49", "--output", str(tmp_path / "x.png")],
        )
        assert result.exit_code == 1

    def test_all_ocean_center_filled_gray_with_warning(self, server_url, tmp_path):
        out = tmp_path / "ocean.png"
        runner = CliRunner()
        result = runner.invoke(
            cli.main,
            ["download-image", "--url", server_url, "--lon", "-123.5", "--lat", "37.0",
             "--width", "100", "--height", "80", "--output", str(out)],
        )
        assert result.exit_code == 0
        assert "warning" in result.output
        canvas = mosaic.decode(out.read_bytes())
        assert np.all(canvas.pixels == 128)

    def test_grid_flags_change_output(self, server_url, tmp_path):
        center = sf_center()
        runner = CliRunner()
        outputs = []
        for name, extra in [("plain.png", []), ("grid.png", ["--grid-style", "utm", "--grid-width", "2"])]:
            out = tmp_path / name
            result = runner.invoke(
                cli.main,
                ["download-image", "--url", server_url, "--lon", str(center.lon),
                 "--lat", str(center.lat), "--width", "300", "--height", "200",
                 "--output", str(out), *extra],
            )
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] != outputs[1]

    def test_out_of_domain_center_service_error_exit_3(self, server_url, tmp_path):
        # lat 89 passes local arg checks but the service rejects the domain.
        result = CliRunner().invoke(
            cli.main,
            ["download-image", "--url", server_url, "--lon", "-122.4", "--lat", "89",
             "--width", "60", "--height", "60", "--output", str(tmp_path / "x.png")],
        )
        assert result.exit_code == 3

    def test_transport_failure_writes_replayable_request(self, tmp_path):
        out = tmp_path / "never.png"
        runner = CliRunner()
        result = runner.invoke(
            cli.main,
            ["download-image", "--url", DEAD_URL, "--lon", "-122.4", "--lat", "37.8",
             "--width", "60", "--height", "60", "--output", str(out)],
        )
        assert result.exit_code == 2
        replay = json.loads((tmp_path / "never.png.retry.json").read_text())
        assert replay["method"] == "download-image"
        assert replay["params"]["width"] == 60
        assert not out.exists()


class TestConvertCli:
    def test_forward_central_meridian(self):
        result = CliRunner().invoke(cli.main, ["convert", "--lon", "-123", "--lat", "0"])
        assert result.exit_code == 0
        assert "zone=10" in result.output
        assert "easting=500000.000" in result.output
        assert "northing=0.000" in result.output

    def test_forward_golden_point(self):
        result = CliRunner().invoke(
            cli.main, ["convert", "--lon", "-122.4194", "--lat", "37.7749"]
        )
        assert "easting=551130.768" in result.output
        assert "northing=4180998.881" in result.output

    def test_inverse(self):
        result = CliRunner().invoke(
            cli.main, ["convert", "--zone", "10", "--easting", "500000", "--northing", "0"]
        )
        assert "lon=-123.000000000" in result.output
        assert "lat=0.000000000" in result.output

    def test_missing_args_usage(self):
        result = CliRunner().invoke(cli.main, ["convert", "--lon", "-123"])
        assert result.exit_code == 1


class TestIngestCli:
    def write_fixture(self, tmp_path):
        from PIL import Image

        rng = np.random.default_rng(2)
        raster = rng.integers(0, 256, (400, 400, 3), dtype=np.uint8)
        raster_path = tmp_path / "raster.png"
        Image.fromarray(raster).save(raster_path)
        placement = tmp_path / "placement.json"
        # Origin tile indices are even, so the 2x2 block collapses to one parent.
        placement.write_text(json.dumps({
            "zone": 10, "originEasting": 550400.0, "originNorthing": 4180800.0,
            "scale": 10, "captureDate": "2002-06-15",
        }))
        return raster_path, placement

    def test_ingest_and_build_pyramid(self, tmp_path):
        raster_path, placement = self.write_fixture(tmp_path)
        store_path = tmp_path / "store"
        runner = CliRunner()
        result = runner.invoke(cli.main, [
            "ingest", "--store", str(store_path), "--theme", "1",
            "--raster", str(raster_path), "--placement", str(placement), "--lossless",
        ])
        assert result.exit_code == 0, result.output
        assert "ingested 4 tiles" in result.output
        result = runner.invoke(cli.main, [
            "build-pyramid", "--store", str(store_path), "--theme", "1",
        ])
        assert result.exit_code == 0, result.output
        assert "pyramid levels: 4/1" in result.output

    def test_misaligned_placement_usage_error(self, tmp_path):
        raster_path, placement = self.write_fixture(tmp_path)
        placement.write_text(json.dumps({
            "zone": 10, "originEasting": 550450.0, "originNorthing": 4180800.0,
            "scale": 10,
        }))
        result = CliRunner().invoke(cli.main, [
            "ingest", "--store", str(tmp_path / "s2"), "--theme", "1",
            "--raster", str(raster_path), "--placement", str(placement), "--lossless",
        ])
        assert result.exit_code == 1

    def test_bad_theme_usage_error(self, tmp_path):
        raster_path, placement = self.write_fixture(tmp_path)
        result = CliRunner().invoke(cli.main, [
            "ingest", "--store", str(tmp_path / "s3"), "--theme", "7",
            "--raster", str(raster_path), "--placement", str(placement),
        ])
        assert result.exit_code == 1


class TestConfig:
    def test_file_and_env_overrides(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({
            "store": "/from/file", "gazetteer": "/g.txt",
            "bind": "0.0.0.0:9999", "test_mode": False,
        }))
        config = load_config(cfg, env={})
        assert config.store_path == "/from/file"
        assert config.port == 9999
        assert config.test_mode is False
        config = load_config(cfg, env={
            "TILESERV_STORE": "/from/env",
            "TILESERV_BIND": "127.0.0.1:7070",
            "TILESERV_TEST_MODE": "1",
        })
        assert config.store_path == "/from/env"
        assert config.port == 7070
        assert config.test_mode is True

    def test_missing_store_rejected(self):
        with pytest.raises(ValidationError):
            load_config(None, env={})
