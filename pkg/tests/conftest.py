"""Shared fixtures: a deterministic lossless demo store and a live server."""

from __future__ import annotations

import threading
from pathlib import Path

import numpy as np
import pytest

from tileserv.gazetteer import Gazetteer
from tileserv.grid import TileId
from tileserv.service import TileService, make_server
from tileserv.store import RasterPlacement, TileStore

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
PLACES_FIXTURE = DATA_DIR / "places_us.txt"

# Aerial fixture: 8x8 tiles at scale 10 around the canonical 600x400 scenario
# (zone 10, easting 551000, northing 4181050).
DOQ_ORIGIN_E = 550600.0  # tile x 2753
DOQ_ORIGIN_N = 4180400.0  # tile y 20902
DOQ_TILES = 8
DOQ_DATE = "2002-06-15"

# Topo fixture: 4x4 tiles at scale 11 over the same ground.
DRG_ORIGIN_E = 550400.0  # tile x 1376
DRG_ORIGIN_N = 4180400.0  # tile y 10451
DRG_TILES = 4
DRG_DATE = "2001-03-01"


def doq_tile_pixels(tx: int, ty: int) -> np.ndarray | None:
    """Content of fixture aerial tile (tx, ty), the same function the raster
    is generated from, so oracles can look tiles up directly."""
    x0 = int(DOQ_ORIGIN_E // 200)
    y0 = int(DOQ_ORIGIN_N // 200)
    if not (x0 <= tx < x0 + DOQ_TILES and y0 <= ty < y0 + DOQ_TILES):
        return None
    cols = np.arange(200)
    rows = np.arange(200)
    r = ((tx * 37 + cols) % 256)[np.newaxis, :].repeat(200, axis=0)
    g = ((ty * 53 + rows) % 256)[:, np.newaxis].repeat(200, axis=1)
    b = np.full((200, 200), (tx * 11 + ty * 7) % 256)
    return np.stack([r, g, b], axis=-1).astype(np.uint8)


def build_demo_store(root: Path) -> TileStore:
    store = TileStore(root, lossless=True)

    x0 = int(DOQ_ORIGIN_E // 200)
    y0 = int(DOQ_ORIGIN_N // 200)
    size = DOQ_TILES * 200
    raster = np.zeros((size, size, 3), dtype=np.uint8)
    for i in range(DOQ_TILES):
        for j in range(DOQ_TILES):
            tile = doq_tile_pixels(x0 + i, y0 + j)
            raster[(DOQ_TILES - 1 - j) * 200 : (DOQ_TILES - j) * 200,
                   i * 200 : (i + 1) * 200] = tile
    store.ingest_raster(
        raster, RasterPlacement(10, DOQ_ORIGIN_E, DOQ_ORIGIN_N, 10, DOQ_DATE), theme=1
    )
    store.build_pyramid(1)

    rng = np.random.default_rng(20020601)
    palette = rng.integers(0, 256, (13, 3), dtype=np.uint8)
    idx = rng.integers(0, 13, (DRG_TILES * 200, DRG_TILES * 200))
    store.ingest_raster(
        palette[idx],
        RasterPlacement(10, DRG_ORIGIN_E, DRG_ORIGIN_N, 11, DRG_DATE),
        theme=2,
    )
    store.build_pyramid(2)
    return store


@pytest.fixture(scope="session")
def demo_store(tmp_path_factory) -> TileStore:
    return build_demo_store(tmp_path_factory.mktemp("demo") / "store")


@pytest.fixture(scope="session")
def demo_gazetteer() -> Gazetteer:
    g = Gazetteer()
    g.load(PLACES_FIXTURE)
    return g


@pytest.fixture(scope="session")
def demo_service(demo_store, demo_gazetteer) -> TileService:
    return TileService(demo_store, demo_gazetteer)


@pytest.fixture(scope="session")
def server_url(demo_service):
    server = make_server(demo_service, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
