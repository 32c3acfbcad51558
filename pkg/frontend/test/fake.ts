/** In-memory fake of the service wire contract for viewer tests.
 *
 *  Implements the documented GetAreaFromPt pixel-center layout rule with a
 *  linear projection (lon/lat scale linearly to easting/northing), logs every
 *  GetTile request, and serves a tiny place table. Per-path delay hooks let
 *  tests exercise the stale-generation behavior.
 */

import type { Transport } from "../src/transport.js";
import type {
  AreaBoundingBox,
  AreaCoordinate,
  LonLatPt,
  PlaceFacts,
  TileKey,
  TileMeta,
} from "../src/types.js";
import { TILE_SIZE, metersPerPixel } from "../src/types.js";

export const ZONE = 10;

// Linear fake projection: exact, invertible, keeps coordinates positive.
export function forward(p: LonLatPt): { easting: number; northing: number } {
  return { easting: (p.lon + 130) * 100000, northing: p.lat * 110000 };
}

export function inverse(easting: number, northing: number): LonLatPt {
  return { lon: easting / 100000 - 130, lat: northing / 110000 };
}

export function tileForPoint(theme: number, scale: number, p: LonLatPt): TileKey {
  const span = TILE_SIZE * metersPerPixel(scale);
  const utm = forward(p);
  return {
    theme,
    scale,
    scene: ZONE,
    x: Math.floor(utm.easting / span),
    y: Math.floor(utm.northing / span),
  };
}

function tileMetaFor(key: TileKey): TileMeta {
  const span = TILE_SIZE * metersPerPixel(key.scale);
  const minE = key.x * span;
  const minN = key.y * span;
  return {
    id: key,
    nw: inverse(minE, minN + span),
    ne: inverse(minE + span, minN + span),
    sw: inverse(minE, minN),
    se: inverse(minE + span, minN),
    center: inverse(minE + span / 2, minN + span / 2),
    captureDate: "2002-06-15",
  };
}

export const PLACES: PlaceFacts[] = [
  {
    city: "San Francisco",
    state: "California",
    country: "United States of America",
    center: { lon: -122.4194, lat: 37.7749 },
    placeType: "city",
    population: 873965,
  },
  {
    city: "Oakland",
    state: "California",
    country: "United States of America",
    center: { lon: -122.2712, lat: 37.8044 },
    placeType: "city",
    population: 440646,
  },
];

export class FakeTransport implements Transport {
  /** Every GetTile request, as "x,y" strings in request order. */
  readonly tileLog: string[] = [];
  /** Tiles that 404; everything else returns 2-byte fake content. */
  readonly holes = new Set<string>();
  /** Optional artificial latency per endpoint path. */
  readonly delaysMs = new Map<string, number>();

  private async delay(path: string): Promise<void> {
    const ms = this.delaysMs.get(path);
    if (ms) {
      await new Promise((resolve) => setTimeout(resolve, ms));
    }
  }

  async getJson(path: string, params: Record<string, string | number>): Promise<unknown> {
    await this.delay(path);
    if (path === "/GetAreaFromPt") {
      return this.areaFromPt(params);
    }
    if (path === "/GetPlaceFacts") {
      const city = String(params["city"] ?? "").toLowerCase();
      return PLACES.filter((p) => p.city.toLowerCase() === city);
    }
    if (path === "/GetTileMetaFromLonLatPt") {
      const key = tileForPoint(Number(params["theme"]), Number(params["scale"]), {
        lon: Number(params["lon"]),
        lat: Number(params["lat"]),
      });
      return tileMetaFor(key);
    }
    throw new Error(`fake transport: no endpoint ${path}`);
  }

  async getTile(key: TileKey): Promise<Uint8Array | null> {
    await this.delay("/GetTile");
    this.tileLog.push(`${key.x},${key.y}`);
    if (this.holes.has(`${key.x},${key.y}`)) {
      return null;
    }
    return new Uint8Array([key.x % 256, key.y % 256]);
  }

  private areaFromPt(params: Record<string, string | number>): AreaBoundingBox {
    const theme = Number(params["theme"]);
    const scale = Number(params["scale"]);
    const width = Number(params["width"]);
    const height = Number(params["height"]);
    const center = { lon: Number(params["lon"]), lat: Number(params["lat"]) };
    const res = metersPerPixel(scale);
    const span = TILE_SIZE * res;
    const utm = forward(center);
    const left = utm.easting - (width * res) / 2;
    const top = utm.northing + (height * res) / 2;

    const coordinate = (col: number, row: number): AreaCoordinate => {
      const easting = left + (col + 0.5) * res;
      const northing = top - (row + 0.5) * res;
      const x = Math.floor(easting / span);
      const y = Math.floor(northing / span);
      return {
        tileMeta: tileMetaFor({ theme, scale, scene: ZONE, x, y }),
        offset: {
          point: inverse(easting, northing),
          xOffset: Math.floor((easting - x * span) / res),
          yOffset: Math.floor(((y + 1) * span - northing) / res),
        },
      };
    };

    return {
      northWest: coordinate(0, 0),
      northEast: coordinate(width - 1, 0),
      southWest: coordinate(0, height - 1),
      southEast: coordinate(width - 1, height - 1),
      center: coordinate(Math.floor(width / 2), Math.floor(height / 2)),
      nearestPlace: { name: "San Francisco", distanceMeters: 1200, direction: "NE" },
    };
  }
}

export class RecordingPainter {
  /** (key, dx, dy, kind) per draw call since the last begin(). */
  drawn: Array<{ x: number; y: number; dx: number; dy: number; kind: string }> = [];
  begins = 0;

  begin(_widthPx: number, _heightPx: number): void {
    this.begins++;
    this.drawn = [];
  }

  drawTile(key: TileKey, _bytes: Uint8Array, dx: number, dy: number): void {
    this.drawn.push({ x: key.x, y: key.y, dx, dy, kind: "tile" });
  }

  drawPlaceholder(key: TileKey, dx: number, dy: number): void {
    this.drawn.push({ x: key.x, y: key.y, dx, dy, kind: "placeholder" });
  }
}
