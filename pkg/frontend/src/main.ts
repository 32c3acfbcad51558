/** Browser bootstrap: canvas painter, input wiring, search and inspect UI.
 *
 *  Service base URL comes from the `?service=` query parameter, defaulting
 *  to http://127.0.0.1:8080.
 */

import { ServiceTransport } from "./transport.js";
import { Viewer } from "./viewer.js";
import type { Painter } from "./viewer.js";
import type { PlaceFacts, TileKey } from "./types.js";

const PLACEHOLDER_GRAY = "#808080";

class CanvasPainter implements Painter {
  private readonly ctx: CanvasRenderingContext2D;
  private epoch = 0;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    this.ctx = ctx;
  }

  begin(widthPx: number, heightPx: number): void {
    this.epoch++;
    this.canvas.width = widthPx;
    this.canvas.height = heightPx;
    this.ctx.fillStyle = PLACEHOLDER_GRAY;
    this.ctx.fillRect(0, 0, widthPx, heightPx);
  }

  async drawTile(_key: TileKey, bytes: Uint8Array, dx: number, dy: number): Promise<void> {
    const epoch = this.epoch;
    const bitmap = await createImageBitmap(new Blob([bytes as BlobPart]));
    if (epoch === this.epoch) {
      this.ctx.drawImage(bitmap, dx, dy);
    }
    bitmap.close();
  }

  drawPlaceholder(_key: TileKey, dx: number, dy: number): void {
    this.ctx.fillStyle = PLACEHOLDER_GRAY;
    this.ctx.fillRect(dx, dy, 200, 200);
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function formatMeta(meta: {
  id: TileKey;
  captureDate: string;
  nw: { lon: number; lat: number };
  se: { lon: number; lat: number };
}): string {
  const id = meta.id;
  return [
    `tile theme=${id.theme} scale=${id.scale} scene=${id.scene} x=${id.x} y=${id.y}`,
    `nw ${meta.nw.lat.toFixed(6)}, ${meta.nw.lon.toFixed(6)}`,
    `se ${meta.se.lat.toFixed(6)}, ${meta.se.lon.toFixed(6)}`,
    `captured ${meta.captureDate}`,
  ].join("\n");
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const serviceUrl = params.get("service") ?? "http://127.0.0.1:8080";
  const canvas = el<HTMLCanvasElement>("map");
  const status = el<HTMLPreElement>("status");

  const viewer = new Viewer(new ServiceTransport(serviceUrl), new CanvasPainter(canvas), {
    center: { lon: -122.4208, lat: 37.7745 },
    scale: 10,
    theme: 1,
    widthPx: canvas.width,
    heightPx: canvas.height,
  });

  const report = (err: unknown) => {
    status.textContent = err instanceof Error ? err.message : String(err);
  };
  const rerender = () => viewer.render().catch(report);

  // Drag to pan.
  let dragging: { x: number; y: number } | null = null;
  canvas.addEventListener("mousedown", (ev) => {
    dragging = { x: ev.offsetX, y: ev.offsetY };
  });
  canvas.addEventListener("mouseup", (ev) => {
    if (!dragging) {
      return;
    }
    const dx = dragging.x - ev.offsetX;
    const dy = dragging.y - ev.offsetY;
    dragging = null;
    if (Math.abs(dx) < 3 && Math.abs(dy) < 3) {
      // A click, not a drag: inspect the tile under the cursor.
      viewer
        .inspect(ev.offsetX, ev.offsetY)
        .then((meta) => {
          status.textContent = formatMeta(meta);
        })
        .catch(report);
      return;
    }
    viewer.panByPixels(dx, dy).catch(report);
  });

  window.addEventListener("keydown", (ev) => {
    const step = 100;
    if (ev.key === "ArrowRight") viewer.panByPixels(step, 0).catch(report);
    else if (ev.key === "ArrowLeft") viewer.panByPixels(-step, 0).catch(report);
    else if (ev.key === "ArrowUp") viewer.panByPixels(0, -step).catch(report);
    else if (ev.key === "ArrowDown") viewer.panByPixels(0, step).catch(report);
  });

  el<HTMLButtonElement>("zoom-in").addEventListener("click", () => {
    viewer.zoom(-1).catch(report);
  });
  el<HTMLButtonElement>("zoom-out").addEventListener("click", () => {
    viewer.zoom(1).catch(report);
  });
  el<HTMLSelectElement>("theme").addEventListener("change", (ev) => {
    viewer.setTheme(Number((ev.target as HTMLSelectElement).value)).catch(report);
  });

  const results = el<HTMLUListElement>("results");
  el<HTMLFormElement>("search").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = el<HTMLInputElement>("query").value;
    viewer
      .searchPlaces(text)
      .then((places: PlaceFacts[]) => {
        results.replaceChildren();
        if (places.length === 0) {
          status.textContent = `no places named "${text}"`;
          return;
        }
        for (const place of places) {
          const item = document.createElement("li");
          item.textContent = `${place.city}, ${place.state}`;
          item.addEventListener("click", () => {
            results.replaceChildren();
            viewer.selectPlace(place).catch(report);
          });
          results.appendChild(item);
        }
      })
      .catch(report);
  });

  rerender();
}

main();
