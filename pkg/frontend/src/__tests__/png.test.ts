import { describe, expect, it } from "vitest";
import { inflateSync } from "node:zlib";

import { adler32, base64ToBytes, bytesToBase64, crc32, encodeGrayPng } from "../png";

describe("checksums", () => {
  it("crc32 matches known vectors", () => {
    const enc = new TextEncoder();
    expect(crc32(enc.encode(""))).toBe(0x00000000);
    expect(crc32(enc.encode("123456789"))).toBe(0xcbf43926);
  });

  it("adler32 matches known vectors", () => {
    const enc = new TextEncoder();
    expect(adler32(enc.encode(""))).toBe(1);
    expect(adler32(enc.encode("Wikipedia"))).toBe(0x11e60398);
  });
});

describe("grayscale png", () => {
  it("node zlib inflates the stored-deflate IDAT back to the scanlines", () => {
    const w = 5;
    const h = 3;
    const pixels = new Uint8Array([...Array(w * h).keys()].map((i) => (i * 17) % 256));
    const png = encodeGrayPng(pixels, w, h);

    // find IDAT
    let pos = 8;
    let idat: Uint8Array | null = null;
    while (pos < png.length) {
      const len = (png[pos] << 24) | (png[pos + 1] << 16) | (png[pos + 2] << 8) | png[pos + 3];
      const type = String.fromCharCode(...png.subarray(pos + 4, pos + 8));
      if (type === "IDAT") idat = png.subarray(pos + 8, pos + 8 + len);
      pos += 8 + len + 4;
    }
    expect(idat).not.toBeNull();
    const raw = inflateSync(Buffer.from(idat!));
    expect(raw.length).toBe(h * (w + 1));
    for (let y = 0; y < h; y++) {
      expect(raw[y * (w + 1)]).toBe(0);
      expect(Array.from(raw.subarray(y * (w + 1) + 1, (y + 1) * (w + 1)))).toEqual(
        Array.from(pixels.subarray(y * w, (y + 1) * w)),
      );
    }
  });

  it("is deterministic", () => {
    const pixels = new Uint8Array(64).fill(255);
    const a = encodeGrayPng(pixels, 8, 8);
    const b = encodeGrayPng(pixels, 8, 8);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("rejects bad dimensions", () => {
    expect(() => encodeGrayPng(new Uint8Array(10), 3, 4)).toThrow();
  });

  it("handles multi-block payloads (> 64 KiB)", () => {
    const w = 300;
    const h = 300; // raw stream 300*301 = 90300 bytes -> two stored blocks
    const pixels = new Uint8Array(w * h).fill(7);
    const png = encodeGrayPng(pixels, w, h);
    let pos = 8;
    const idatParts: Buffer[] = [];
    while (pos < png.length) {
      const len = (png[pos] << 24) | (png[pos + 1] << 16) | (png[pos + 2] << 8) | png[pos + 3];
      const type = String.fromCharCode(...png.subarray(pos + 4, pos + 8));
      if (type === "IDAT") idatParts.push(Buffer.from(png.subarray(pos + 8, pos + 8 + len)));
      pos += 8 + len + 4;
    }
    const raw = inflateSync(Buffer.concat(idatParts));
    expect(raw.length).toBe(h * (w + 1));
  });
});

describe("base64", () => {
  it("round-trips arbitrary bytes", () => {
    const bytes = new Uint8Array(257).map((_, i) => (i * 31) % 256);
    expect(Array.from(base64ToBytes(bytesToBase64(bytes)))).toEqual(Array.from(bytes));
  });

  it("matches the platform encoder", () => {
    const bytes = new Uint8Array([0, 1, 2, 250, 251, 252, 253]);
    expect(bytesToBase64(bytes)).toBe(Buffer.from(bytes).toString("base64"));
  });

  it("rejects invalid characters", () => {
    expect(() => base64ToBytes("ab!d")).toThrow();
  });
});
