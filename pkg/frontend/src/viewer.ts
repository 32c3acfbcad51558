/** Map viewer core: every gesture (pan, zoom, theme switch, search, click)
 *  decides the next tile fetches from the area description's tile span.
 *
 *  Rendering is painter-agnostic so the logic runs headless in tests; the
 *  browser supplies a canvas painter. Tile bytes go through a 256-entry LRU,
 *  and a generation counter discards responses for superseded viewports.
 */

import { TileCache } from "./cache.js";
import type { Transport } from "./transport.js";
import {
  MAX_SCALE,
  MIN_SCALE,
  TILE_SIZE,
  centerUtmOfArea,
  metersPerPixel,
  tileKeyString,
} from "./types.js";
import type {
  AreaBoundingBox,
  LonLatPt,
  PlaceFacts,
  TileKey,
  TileMeta,
  Viewport,
} from "./types.js";

export interface Painter {
  /** Called once per render before any tiles are drawn. */
  begin(widthPx: number, heightPx: number): void;
  /** Draw a decoded tile with its top-left corner at canvas (dx, dy). */
  drawTile(key: TileKey, bytes: Uint8Array, dx: number, dy: number): void | Promise<void>;
  /** Gray placeholder for a hole in coverage. */
  drawPlaceholder(key: TileKey, dx: number, dy: number): void;
}

export interface ViewerOptions {
  cacheSize?: number;
}

export class Viewer {
  readonly viewport: Viewport;
  readonly cache: TileCache;
  /** TileId keys actually requested over the wire (cache misses), in order. */
  readonly wireLog: string[] = [];

  private generation = 0;
  private lastArea: AreaBoundingBox | null = null;

  constructor(
    private readonly transport: Transport,
    private readonly painter: Painter,
    viewport: Viewport,
    options: ViewerOptions = {},
  ) {
    this.viewport = { ...viewport, center: { ...viewport.center } };
    this.cache = new TileCache(options.cacheSize ?? 256);
  }

  get area(): AreaBoundingBox | null {
    return this.lastArea;
  }

  /** Fetch the area description for the current viewport, then exactly the
   *  tiles in its span, painting each at the offset-cropped position. */
  async render(): Promise<AreaBoundingBox | null> {
    const gen = ++this.generation;
    const vp = this.viewport;
    const area = (await this.transport.getJson("/GetAreaFromPt", {
      theme: vp.theme,
      scale: vp.scale,
      lon: vp.center.lon,
      lat: vp.center.lat,
      width: vp.widthPx,
      height: vp.heightPx,
    })) as AreaBoundingBox;
    if (gen !== this.generation) {
      return null; // a newer gesture superseded this render
    }
    this.lastArea = area;
    this.painter.begin(vp.widthPx, vp.heightPx);

    const nw = area.northWest.tileMeta.id;
    const xEnd = area.northEast.tileMeta.id.x;
    const yEnd = area.southWest.tileMeta.id.y;
    const xOff = area.northWest.offset.xOffset;
    const yOff = area.northWest.offset.yOffset;
    const jobs: Promise<void>[] = [];
    for (let x = nw.x; x <= xEnd; x++) {
      for (let y = nw.y; y >= yEnd; y--) {
        const key: TileKey = { theme: nw.theme, scale: nw.scale, scene: nw.scene, x, y };
        const dx = (x - nw.x) * TILE_SIZE - xOff;
        const dy = (nw.y - y) * TILE_SIZE - yOff;
        jobs.push(this.paintTile(gen, key, dx, dy));
      }
    }
    await Promise.all(jobs);
    return area;
  }

  private async paintTile(gen: number, key: TileKey, dx: number, dy: number): Promise<void> {
    const cacheKey = tileKeyString(key);
    let bytes: Uint8Array | null;
    if (this.cache.has(cacheKey)) {
      bytes = this.cache.get(cacheKey);
    } else {
      this.wireLog.push(cacheKey);
      bytes = await this.transport.getTile(key);
      this.cache.set(cacheKey, bytes);
    }
    if (gen !== this.generation) {
      return; // stale response for a superseded viewport
    }
    if (bytes === null) {
      this.painter.drawPlaceholder(key, dx, dy);
    } else {
      await this.painter.drawTile(key, bytes, dx, dy);
    }
  }

  /** Lon/lat per screen pixel, derived from the last area's corner points. */
  degreesPerPixel(): { lon: number; lat: number } {
    const area = this.lastArea;
    if (!area) {
      // Fallback before the first render: mid-latitude small-angle estimate.
      const res = metersPerPixel(this.viewport.scale);
      const latRad = (this.viewport.center.lat * Math.PI) / 180;
      return { lon: res / (111320 * Math.cos(latRad)), lat: res / 110574 };
    }
    const w = this.viewport.widthPx;
    const h = this.viewport.heightPx;
    return {
      lon:
        (area.northEast.offset.point.lon - area.northWest.offset.point.lon) /
        Math.max(w - 1, 1),
      lat:
        (area.northWest.offset.point.lat - area.southWest.offset.point.lat) /
        Math.max(h - 1, 1),
    };
  }

  /** Pan the view by screen pixels (positive dx looks east, dy south),
   *  clamped so the viewport never leaves the current UTM zone. */
  async panByPixels(dxPx: number, dyPx: number): Promise<AreaBoundingBox | null> {
    const dpp = this.degreesPerPixel();
    const lon = this.clampLonToZone(this.viewport.center.lon + dxPx * dpp.lon);
    const lat = this.viewport.center.lat - dyPx * dpp.lat;
    this.viewport.center = { lon, lat };
    return this.render();
  }

  /** Pan by exactly one tile width; east = +1 column of new tile fetches. */
  panByTiles(dxTiles: number, dyTiles: number): Promise<AreaBoundingBox | null> {
    return this.panByPixels(dxTiles * TILE_SIZE, dyTiles * TILE_SIZE);
  }

  private clampLonToZone(lon: number): number {
    const area = this.lastArea;
    if (!area) {
      return lon;
    }
    const zone = area.northWest.tileMeta.id.scene;
    const west = zone * 6 - 186;
    const east = zone * 6 - 180;
    const margin = 1e-3;
    return Math.min(Math.max(lon, west + margin), east - margin);
  }

  /** Step the scale ladder: negative = finer (zoom in). */
  async zoom(deltaScaleCode: number): Promise<AreaBoundingBox | null> {
    const next = this.viewport.scale + deltaScaleCode;
    if (next < MIN_SCALE || next > MAX_SCALE) {
      return this.lastArea;
    }
    this.viewport.scale = next;
    return this.render();
  }

  async setTheme(theme: number): Promise<AreaBoundingBox | null> {
    this.viewport.theme = theme;
    return this.render();
  }

  /** Place search by name; selecting a result recenters the viewport. */
  async searchPlaces(text: string): Promise<PlaceFacts[]> {
    if (!text.trim()) {
      return [];
    }
    return (await this.transport.getJson("/GetPlaceFacts", {
      city: text.trim(),
    })) as PlaceFacts[];
  }

  async selectPlace(place: PlaceFacts): Promise<AreaBoundingBox | null> {
    this.viewport.center = { ...place.center };
    return this.render();
  }

  /** Geographic location of a canvas pixel, bilinearly interpolated from the
   *  area's corner pixel-center points (sub-centimeter over a viewport). */
  pixelToLonLat(px: number, py: number): LonLatPt {
    const area = this.lastArea;
    if (!area) {
      throw new Error("render() must complete before inspect");
    }
    const w = Math.max(this.viewport.widthPx - 1, 1);
    const h = Math.max(this.viewport.heightPx - 1, 1);
    const fx = px / w;
    const fy = py / h;
    const nw = area.northWest.offset.point;
    const ne = area.northEast.offset.point;
    const sw = area.southWest.offset.point;
    const se = area.southEast.offset.point;
    const top = { lon: nw.lon + fx * (ne.lon - nw.lon), lat: nw.lat + fx * (ne.lat - nw.lat) };
    const bottom = { lon: sw.lon + fx * (se.lon - sw.lon), lat: sw.lat + fx * (se.lat - sw.lat) };
    return {
      lon: top.lon + fy * (bottom.lon - top.lon),
      lat: top.lat + fy * (bottom.lat - top.lat),
    };
  }

  /** Click-to-inspect: tile metadata for the clicked pixel. */
  async inspect(px: number, py: number): Promise<TileMeta> {
    const point = this.pixelToLonLat(px, py);
    return (await this.transport.getJson("/GetTileMetaFromLonLatPt", {
      theme: this.viewport.theme,
      scale: this.viewport.scale,
      lon: point.lon,
      lat: point.lat,
    })) as TileMeta;
  }

  /** Half-pixel recentering check used by tests: distance in native meters
   *  between the rendered center pixel and a target point's projection. */
  centerErrorMeters(targetUtm: { easting: number; northing: number }): number {
    const area = this.lastArea;
    if (!area) {
      return Number.POSITIVE_INFINITY;
    }
    const got = centerUtmOfArea(area);
    return Math.hypot(got.easting - targetUtm.easting, got.northing - targetUtm.northing);
  }
}
