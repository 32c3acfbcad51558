/** HTTP access to the tile service; injectable so tests can fake the wire. */

import type { TileKey } from "./types.js";

export interface Transport {
  /** GET a method endpoint; resolves to the envelope's decoded `result`. */
  getJson(path: string, params: Record<string, string | number>): Promise<unknown>;
  /** GET /GetTile; resolves to encoded bytes, or null when the tile is a hole. */
  getTile(key: TileKey): Promise<Uint8Array | null>;
}

export class ServiceTransport implements Transport {
  constructor(private readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private url(path: string, params: Record<string, string | number>): string {
    const q = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      q.set(key, String(value));
    }
    return `${this.baseUrl}${path}?${q.toString()}`;
  }

  async getJson(path: string, params: Record<string, string | number>): Promise<unknown> {
    const resp = await fetch(this.url(path, params));
    const doc = (await resp.json()) as { result?: unknown; error?: { message?: string } };
    if (!resp.ok || doc.error) {
      throw new Error(doc.error?.message ?? `HTTP ${resp.status}`);
    }
    return doc.result;
  }

  async getTile(key: TileKey): Promise<Uint8Array | null> {
    const resp = await fetch(
      this.url("/GetTile", {
        theme: key.theme,
        scale: key.scale,
        scene: key.scene,
        x: key.x,
        y: key.y,
      }),
    );
    if (resp.status === 404) {
      return null;
    }
    if (!resp.ok) {
      throw new Error(`GetTile failed: HTTP ${resp.status}`);
    }
    return new Uint8Array(await resp.arrayBuffer());
  }
}
