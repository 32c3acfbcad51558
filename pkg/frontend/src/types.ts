/** Shared types mirroring the service wire format. */

export const TILE_SIZE = 200;
export const MIN_SCALE = 10;
export const MAX_SCALE = 16;

export interface LonLatPt {
  lon: number;
  lat: number;
}

export interface TileKey {
  theme: number;
  scale: number;
  scene: number;
  x: number;
  y: number;
}

export interface TileMeta {
  id: TileKey;
  nw: LonLatPt;
  ne: LonLatPt;
  sw: LonLatPt;
  se: LonLatPt;
  center: LonLatPt;
  captureDate: string;
}

export interface PixelOffset {
  point: LonLatPt;
  xOffset: number;
  yOffset: number;
}

export interface AreaCoordinate {
  tileMeta: TileMeta;
  offset: PixelOffset;
}

export interface NearestPlace {
  name: string;
  distanceMeters: number;
  direction: string;
}

export interface AreaBoundingBox {
  northWest: AreaCoordinate;
  northEast: AreaCoordinate;
  southWest: AreaCoordinate;
  southEast: AreaCoordinate;
  center: AreaCoordinate;
  nearestPlace: NearestPlace | null;
}

export interface PlaceFacts {
  city: string;
  state: string;
  country: string;
  center: LonLatPt;
  placeType: string;
  population: number | null;
}

export interface Viewport {
  center: LonLatPt;
  scale: number;
  theme: number;
  widthPx: number;
  heightPx: number;
}

export function metersPerPixel(scale: number): number {
  return 2 ** (scale - 10);
}

export function tileKeyString(key: TileKey): string {
  return `${key.theme}/${key.scale}/${key.scene}/${key.x}/${key.y}`;
}

/** Exact UTM easting/northing of the viewport's center pixel center,
 *  reconstructed from the area description's tile id and offsets. */
export function centerUtmOfArea(area: AreaBoundingBox): { easting: number; northing: number } {
  const id = area.center.tileMeta.id;
  const res = metersPerPixel(id.scale);
  const span = TILE_SIZE * res;
  return {
    easting: id.x * span + (area.center.offset.xOffset + 0.5) * res,
    northing: (id.y + 1) * span - (area.center.offset.yOffset + 0.5) * res,
  };
}
