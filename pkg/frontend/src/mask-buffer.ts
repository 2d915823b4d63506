// Mask editing model, independent of the DOM.
//
// The mask lives at the image's native resolution as strictly binary bytes
// (255 = known, 0 = hole); the canvas only ever displays a scaled view, so
// no resampling of mask data can introduce anti-aliased grays. Undo history
// is stroke-granular: one snapshot per brush stroke.

import { encodeGrayPng } from "./png";

export type BrushMode = "paint" | "erase";

export interface BrushState {
  radius: number;
  mode: BrushMode;
}

export const KNOWN = 255;
export const HOLE = 0;

const MAX_HISTORY = 64;

export function clampRadius(radius: number): number {
  return Math.max(1, Math.round(radius));
}

export class MaskBuffer {
  readonly width: number;
  readonly height: number;
  private data: Uint8Array;
  private history: Uint8Array[] = [];
  private strokeOpen = false;

  constructor(width: number, height: number) {
    if (width < 1 || height < 1) throw new Error(`bad mask dims ${width}x${height}`);
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height).fill(KNOWN);
  }

  /** Import grayscale bytes, thresholding at 128 so the result is binary. */
  static fromGray(gray: Uint8Array, width: number, height: number): MaskBuffer {
    if (gray.length !== width * height) {
      throw new Error(`byte count ${gray.length} != ${width}x${height}`);
    }
    const buf = new MaskBuffer(width, height);
    for (let i = 0; i < gray.length; i++) {
      buf.data[i] = gray[i] >= 128 ? KNOWN : HOLE;
    }
    return buf;
  }

  /** Raw bytes (for rendering); always strictly {0, 255}. */
  bytes(): Uint8Array {
    return this.data;
  }

  snapshot(): Uint8Array {
    return this.data.slice();
  }

  restore(bytes: Uint8Array): void {
    if (bytes.length !== this.data.length) throw new Error("snapshot size mismatch");
    this.data.set(bytes);
  }

  /** Fraction of hole pixels. */
  coverage(): number {
    let holes = 0;
    for (let i = 0; i < this.data.length; i++) {
      if (this.data[i] === HOLE) holes++;
    }
    return holes / this.data.length;
  }

  beginStroke(): void {
    if (this.strokeOpen) return;
    this.history.push(this.snapshot());
    if (this.history.length > MAX_HISTORY) this.history.shift();
    this.strokeOpen = true;
  }

  endStroke(): void {
    this.strokeOpen = false;
  }

  canUndo(): boolean {
    return this.history.length > 0;
  }

  /** Restore the bitmap exactly as it was before the last stroke. */
  undo(): boolean {
    const prev = this.history.pop();
    if (!prev) return false;
    this.data.set(prev);
    this.strokeOpen = false;
    return true;
  }

  clearHistory(): void {
    this.history = [];
    this.strokeOpen = false;
  }

  paintDisc(cx: number, cy: number, radius: number, mode: BrushMode): void {
    const r = clampRadius(radius);
    const value = mode === "paint" ? HOLE : KNOWN;
    const x0 = Math.round(cx);
    const y0 = Math.round(cy);
    const r2 = r * r;
    for (let dy = -r; dy <= r; dy++) {
      const y = y0 + dy;
      if (y < 0 || y >= this.height) continue;
      for (let dx = -r; dx <= r; dx++) {
        if (dx * dx + dy * dy > r2) continue;
        const x = x0 + dx;
        if (x < 0 || x >= this.width) continue;
        this.data[y * this.width + x] = value;
      }
    }
  }

  /** Stamp discs along a segment so fast pointer moves leave no gaps. */
  paintLine(x0: number, y0: number, x1: number, y1: number, radius: number, mode: BrushMode): void {
    const steps = Math.max(Math.abs(x1 - x0), Math.abs(y1 - y0), 1);
    for (let k = 0; k <= steps; k++) {
      const t = k / steps;
      this.paintDisc(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius, mode);
    }
  }

  fillAll(mode: BrushMode): void {
    this.data.fill(mode === "paint" ? HOLE : KNOWN);
  }

  /**
   * Export as a single-channel PNG (0 = hole, 255 = known). The buffer is
   * already binary; the defensive threshold keeps the contract even if
   * callers hand-patch bytes.
   */
  exportPng(): Uint8Array {
    const binary = new Uint8Array(this.data.length);
    for (let i = 0; i < this.data.length; i++) {
      binary[i] = this.data[i] >= 128 ? KNOWN : HOLE;
    }
    return encodeGrayPng(binary, this.width, this.height);
  }

  /** RGBA overlay bytes for display: holes tinted, known transparent. */
  toOverlayRGBA(r = 255, g = 64, b = 64, alpha = 150): Uint8ClampedArray<ArrayBuffer> {
    const out = new Uint8ClampedArray(new ArrayBuffer(this.data.length * 4));
    for (let i = 0; i < this.data.length; i++) {
      if (this.data[i] === HOLE) {
        out[i * 4] = r;
        out[i * 4 + 1] = g;
        out[i * 4 + 2] = b;
        out[i * 4 + 3] = alpha;
      }
    }
    return out;
  }
}
