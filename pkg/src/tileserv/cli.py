"""Command-line tools: serve, ingest, build-pyramid, download-image, convert.

Exit codes: 0 success, 1 usage error, 2 transport failure, 3 service error.
On transport failure, image downloads write a replayable request file next to
the intended output so the call can be retried later.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import errors, mosaic, projection
from .client import ServiceClient, TransportError
from .gazetteer import Place
from .grid import (
    MAX_IMAGE_PX,
    MIN_IMAGE_PX,
    WIRE_SCALE_MAX,
    WIRE_SCALE_MIN,
    LonLatPt,
    TileId,
    UtmPt,
)
from .service import ServiceConfig, load_config, run
from .store import RasterPlacement, TileStore

EXIT_USAGE = 1
EXIT_TRANSPORT = 2
EXIT_SERVICE = 3


class UsageFailure(click.UsageError):
    exit_code = EXIT_USAGE


def _check_range(name: str, value: int, lo: int, hi: int) -> int:
    if not lo <= value <= hi:
        raise UsageFailure(f"{name} must be in [{lo}, {hi}], got {value}")
    return value


@click.group()
def main():
    """UTM tile-pyramid imagery service tools."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_path", type=click.Path(), default=None)
@click.option("--gazetteer", "gazetteer_path", type=click.Path(), default=None)
@click.option("--bind", default=None, help="host:port (default 127.0.0.1:8080)")
@click.option("--test-mode", is_flag=True, default=False)
def serve(config_path, store_path, gazetteer_path, bind, test_mode):
    """Run the HTTP service."""
    if config_path:
        config = load_config(config_path)
    elif store_path:
        host, _, port = (bind or "127.0.0.1:8080").partition(":")
        config = ServiceConfig(
            store_path=store_path,
            gazetteer_path=gazetteer_path,
            host=host,
            port=int(port or 8080),
            test_mode=test_mode,
        )
    else:
        raise UsageFailure("pass --config or --store")
    run(config)


@main.command()
@click.option("--lon", type=float, default=None)
@click.option("--lat", type=float, default=None)
@click.option("--zone", type=int, default=None)
@click.option("--easting", type=float, default=None)
@click.option("--northing", type=float, default=None)
def convert(lon, lat, zone, easting, northing):
    """Spot-check coordinate conversion: lon/lat -> UTM or zone/E/N -> lon/lat."""
    try:
        if lon is not None and lat is not None:
            p = projection.lon_lat_to_utm(LonLatPt(lon, lat))
            click.echo(f"zone={p.zone} easting={p.easting:.3f} northing={p.northing:.3f}")
        elif zone is not None and easting is not None and northing is not None:
            ll = projection.utm_to_lon_lat(UtmPt(zone, easting, northing))
            click.echo(f"lon={ll.lon:.9f} lat={ll.lat:.9f}")
        else:
            raise UsageFailure("pass --lon/--lat or --zone/--easting/--northing")
    except errors.ServiceError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_SERVICE)


@main.command()
@click.option("--store", "store_path", type=click.Path(), required=True)
@click.option("--theme", type=int, required=True)
@click.option("--raster", "raster_path", type=click.Path(exists=True), required=True)
@click.option("--placement", "placement_path", type=click.Path(exists=True), required=True,
              help="JSON sidecar: zone, originEasting, originNorthing, scale, captureDate")
@click.option("--lossless", is_flag=True, default=False, help="create store in lossless mode")
def ingest(store_path, theme, raster_path, placement_path, lossless):
    """Cut a PNG/PPM raster into base tiles and store them."""
    _check_range("theme", theme, 1, 2)
    doc = json.loads(Path(placement_path).read_text())
    try:
        placement = RasterPlacement(
            zone=doc["zone"],
            origin_easting=doc["originEasting"],
            origin_northing=doc["originNorthing"],
            scale=doc["scale"],
            capture_date=doc.get("captureDate", "unknown"),
        )
        pixels = np.array(Image.open(raster_path).convert("RGB"))
        store = TileStore(store_path, lossless=lossless if not Path(store_path, "manifest.json").exists() else None)
        count = store.ingest_raster(pixels, placement, theme)
    except errors.ValidationError as exc:
        raise UsageFailure(exc.message)
    except errors.ServiceError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_SERVICE)
    click.echo(f"ingested {count} tiles at scale {placement.scale}")


@main.command("build-pyramid")
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
@click.option("--theme", type=int, required=True)
def build_pyramid(store_path, theme):
    """Build coarser pyramid levels until one tile covers each scene."""
    _check_range("theme", theme, 1, 2)
    try:
        store = TileStore(store_path)
        counts = store.build_pyramid(theme)
    except errors.ServiceError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_SERVICE)
    click.echo(f"pyramid levels: {'/'.join(str(c) for c in counts)}")


@main.command("download-image")
@click.option("--url", required=True, help="service base URL")
@click.option("--lon", type=float, required=True)
@click.option("--lat", type=float, required=True)
@click.option("--theme", type=int, default=1)
@click.option("--scale", type=int, default=10)
@click.option("--width", type=int, default=600)
@click.option("--height", type=int, default=400)
@click.option("--output", type=click.Path(), required=True)
@click.option("--grid-style", type=click.Choice(["none", "utm", "geo"]), default="none")
@click.option("--grid-width", type=int, default=1)
@click.option("--grid-color", default="80FFFFFF")
@click.option("--via-server", is_flag=True, default=False,
              help="let the service compose the image in one request")
@click.option("--retry-file", type=click.Path(), default=None,
              help="where to write the replayable request on transport failure")
def download_image(url, lon, lat, theme, scale, width, height, output,
                   grid_style, grid_width, grid_color, via_server, retry_file):
    """Compose a mosaic image around a center point and write it to a file.

    By default the client fetches the area description plus each tile and
    composes locally; --via-server issues a single GetImageArea request.
    """
    _check_range("theme", theme, 1, 2)
    _check_range("scale", scale, WIRE_SCALE_MIN, WIRE_SCALE_MAX)
    _check_range("width", width, MIN_IMAGE_PX, MAX_IMAGE_PX)
    _check_range("height", height, MIN_IMAGE_PX, MAX_IMAGE_PX)
    request_doc = {
        "method": "download-image",
        "params": {
            "url": url, "lon": lon, "lat": lat, "theme": theme, "scale": scale,
            "width": width, "height": height, "via_server": via_server,
        },
    }
    client = ServiceClient(url)
    try:
        if via_server:
            data = client.get_image_area(
                {"T": theme, "S": scale, "Lon": lon, "Lat": lat, "W": width, "H": height}
            )
            Path(output).write_bytes(data)
        else:
            _compose_locally(client, lon, lat, theme, scale, width, height, output,
                             grid_style, grid_width, grid_color)
    except TransportError as exc:
        replay = Path(retry_file) if retry_file else Path(str(output) + ".retry.json")
        replay.write_text(json.dumps(request_doc, indent=2))
        click.echo(f"transport failure: {exc}; request saved to {replay}", err=True)
        sys.exit(EXIT_TRANSPORT)
    except errors.ServiceError as exc:
        click.echo(f"service error: {exc.message}", err=True)
        sys.exit(EXIT_SERVICE)
    click.echo(f"wrote {output}")


def _compose_locally(client, lon, lat, theme, scale, width, height, output,
                     grid_style, grid_width, grid_color):
    abb = client.get_area_from_pt(LonLatPt(lon, lat), theme, scale, width, height)
    missing: list[str] = []

    def fetch(tile: TileId):
        data = client.try_get_tile(tile)
        if data is None:
            missing.append(tile.key())
        return data

    canvas = mosaic.compose_area(abb, fetch)
    if grid_style != "none" and grid_width > 0:
        style = mosaic.RenderStyle(
            grid_style=grid_style, grid_width_px=grid_width, grid_color=grid_color
        )
        canvas = mosaic.draw_grid(canvas, abb, style)
    suffix = Path(output).suffix.lower().lstrip(".")
    encoding = {"jpg": "jpeg", "jpeg": "jpeg", "gif": "gif"}.get(suffix, "png")
    Path(output).write_bytes(mosaic.encode(canvas, encoding))
    for key in missing:
        click.echo(f"warning: tile {key} not found; filled gray", err=True)


if __name__ == "__main__":
    main()
