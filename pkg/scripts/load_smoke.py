#!/usr/bin/env python3
"""Standalone load smoke: 10 concurrent clients, 1000 mixed requests, prints
a per-endpoint latency table (the same gate the acceptance suite enforces).

    python3 scripts/load_smoke.py http://127.0.0.1:8080 [--requests 1000] [--clients 10]
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys
import time
import urllib.error
import urllib.request

SF = ("-122.42078244685606", "37.77454998648085")  # projects to zone-10 demo area


def endpoint_table(base: str) -> dict[str, str]:
    lon, lat = SF
    return {
        "GetTile": f"{base}/GetTile?theme=1&scale=10&scene=10&x=2755&y=20904",
        "GetTileMetaFromTileId": f"{base}/GetTileMetaFromTileId?theme=1&scale=10&scene=10&x=2755&y=20904",
        "GetTileMetaFromLonLatPt": f"{base}/GetTileMetaFromLonLatPt?theme=1&scale=10&lon={lon}&lat={lat}",
        "GetAreaFromPt": f"{base}/GetAreaFromPt?theme=1&scale=10&lon={lon}&lat={lat}&width=600&height=400",
        "GetPlaceFacts": f"{base}/GetPlaceFacts?city=San%20Francisco",
        "GetPlaceList": f"{base}/GetPlaceList?ulLon=-123&ulLat=39&lrLon=-121&lrLat=37",
        "GetImageArea": f"{base}/GetImageArea?T=1&S=10&Lon={lon}&Lat={lat}&W=200&H=160",
        "OgcMap": (
            f"{base}/OgcMap?Version=1.1.1&Request=GetMap&Layers=DOQ&SRS=EPSG:26910"
            f"&BBOX=550800,4180800,551200,4181200&Width=100&Height=100&Format=image/jpeg"
        ),
    }


def fetch(url: str) -> int:
    try:
        with urllib.request.urlopen(url, timeout=30) as resp:
            resp.read()
            return resp.status
    except urllib.error.HTTPError as exc:
        exc.read()
        return exc.code


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("base_url")
    parser.add_argument("--requests", type=int, default=1000)
    parser.add_argument("--clients", type=int, default=10)
    args = parser.parse_args()

    endpoints = endpoint_table(args.base_url.rstrip("/"))
    names = list(endpoints)
    plan = [names[i % len(names)] for i in range(args.requests)]
    latencies: dict[str, list[float]] = {name: [] for name in names}
    failures = 0

    def worker(chunk: list[str]):
        out = []
        for name in chunk:
            t0 = time.perf_counter()
            status = fetch(endpoints[name])
            out.append((name, time.perf_counter() - t0, status))
        return out

    t_start = time.perf_counter()
    chunks = [plan[i :: args.clients] for i in range(args.clients)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=args.clients) as pool:
        for result in pool.map(worker, chunks):
            for name, dt, status in result:
                if status != 200:
                    failures += 1
                latencies[name].append(dt)
    wall = time.perf_counter() - t_start

    print(f"{args.requests} requests, {args.clients} clients, {wall:.2f} s wall, "
          f"{args.requests / wall:.0f} req/s, {failures} failures")
    print(f"{'endpoint':<26} {'n':>5} {'p50 ms':>8} {'p99 ms':>8} {'max ms':>8}")
    worst = 0.0
    for name, values in latencies.items():
        values.sort()
        p50 = values[len(values) // 2]
        p99 = values[min(len(values) - 1, int(len(values) * 0.99))]
        worst = max(worst, p99)
        print(f"{name:<26} {len(values):>5} {p50 * 1000:>8.1f} {p99 * 1000:>8.1f} "
              f"{values[-1] * 1000:>8.1f}")
    if failures or worst >= 1.0:
        print("SMOKE: FAIL")
        return 1
    print("SMOKE: PASS (all endpoint p99 < 1 s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
