/** LRU tile cache keyed by TileId string; also remembers holes (null) so
 *  known-absent tiles are not refetched. */

export class TileCache {
  private readonly entries = new Map<string, Uint8Array | null>();

  constructor(readonly capacity: number = 256) {
    if (capacity < 1) {
      throw new Error(`cache capacity must be >= 1, got ${capacity}`);
    }
  }

  get size(): number {
    return this.entries.size;
  }

  has(key: string): boolean {
    return this.entries.has(key);
  }

  /** Returns the cached bytes (or null for a known hole); refreshes LRU order.
   *  Throws on a miss: call has() first. */
  get(key: string): Uint8Array | null {
    if (!this.entries.has(key)) {
      throw new Error(`cache miss for ${key}`);
    }
    const value = this.entries.get(key) as Uint8Array | null;
    this.entries.delete(key);
    this.entries.set(key, value);
    return value;
  }

  set(key: string, value: Uint8Array | null): void {
    this.entries.delete(key);
    this.entries.set(key, value);
    while (this.entries.size > this.capacity) {
      const oldest = this.entries.keys().next().value as string;
      this.entries.delete(oldest);
    }
  }

  clear(): void {
    this.entries.clear();
  }
}
