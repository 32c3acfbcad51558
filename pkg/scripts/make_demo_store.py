#!/usr/bin/env python3
"""Build a self-contained demo store plus a service config file.

Generates synthetic imagery over downtown San Francisco (UTM zone 10):
an 8x8-tile aerial base at 1 m/px with a gradient-and-street pattern, and a
4x4-tile topo base at 2 m/px with a 13-color palette, then builds both
pyramids and points a config at the bundled gazetteer fixture.

    python3 scripts/make_demo_store.py demo/          # writes demo/store + demo/config.json
    tileserv serve --config demo/config.json
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tileserv.store import RasterPlacement, TileStore  # noqa: E402

REPO = Path(__file__).resolve().parents[1]

DOQ_ORIGIN_E, DOQ_ORIGIN_N = 550600.0, 4180400.0  # SW corner, tile (2753, 20902)
DRG_ORIGIN_E, DRG_ORIGIN_N = 550400.0, 4180400.0


def aerial_raster(tiles: int = 8) -> np.ndarray:
    size = tiles * 200
    xs = np.linspace(40, 215, size)[np.newaxis, :]
    ys = np.linspace(215, 40, size)[:, np.newaxis]
    base = ((xs + ys) / 2).astype(np.uint8)
    img = np.stack([base, base, base], axis=-1)
    # Street-like grid every 100 m so panning and zooming look alive.
    img[::100, :] = 230
    img[:, ::100] = 230
    # A dark diagonal "river".
    size_idx = np.arange(size)
    for off in range(-6, 7):
        d = np.clip(size_idx + off, 0, size - 1)
        img[size - 1 - size_idx, d] = (30, 60, 110)
    return img


def topo_raster(tiles: int = 4) -> np.ndarray:
    rng = np.random.default_rng(19980627)
    palette = np.array(
        [
            (255, 255, 255), (205, 235, 205), (160, 210, 160), (255, 225, 180),
            (230, 200, 150), (200, 170, 120), (150, 190, 230), (100, 150, 210),
            (240, 240, 200), (220, 140, 140), (180, 180, 180), (120, 120, 120),
            (60, 60, 60),
        ],
        dtype=np.uint8,
    )
    size = tiles * 200
    # Blocky contour-band look: coarse noise upsampled.
    coarse = rng.integers(0, 13, (size // 40, size // 40))
    idx = np.kron(coarse, np.ones((40, 40), dtype=int))
    return palette[idx]


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else REPO / "demo"
    store = TileStore(out / "store", lossless=True)
    n = store.ingest_raster(
        aerial_raster(),
        RasterPlacement(10, DOQ_ORIGIN_E, DOQ_ORIGIN_N, 10, "2002-06-15"),
        theme=1,
    )
    counts = store.build_pyramid(1)
    print(f"aerial: {n} base tiles, pyramid {'/'.join(map(str, counts))}")
    n = store.ingest_raster(
        topo_raster(),
        RasterPlacement(10, DRG_ORIGIN_E, DRG_ORIGIN_N, 11, "2001-03-01"),
        theme=2,
    )
    counts = store.build_pyramid(2)
    print(f"topo:   {n} base tiles, pyramid {'/'.join(map(str, counts))}")

    config = {
        "store": str((out / "store").resolve()),
        "gazetteer": str((REPO / "data" / "places_us.txt").resolve()),
        "bind": "127.0.0.1:8080",
        "test_mode": True,
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"wrote {out / 'config.json'}")
    print("serve with: tileserv serve --config", out / "config.json")


if __name__ == "__main__":
    main()
