/** Plain-text PPM (P3) encode/decode, matching the service's byte layout. */

export interface PpmImage {
  width: number;
  height: number;
  /** row-major RGB triplets, length = width * height * 3 */
  rgb: Uint8ClampedArray<ArrayBuffer>;
}

export function decodePpm(text: string): PpmImage {
  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  if (tokens[0] !== "P3") throw new Error("not a P3 PPM");
  const width = Number(tokens[1]);
  const height = Number(tokens[2]);
  const maxval = Number(tokens[3]);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new Error("bad PPM dimensions");
  }
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  const expected = width * height * 3;
  if (tokens.length - 4 < expected) throw new Error("pixel data truncated");
  const rgb = new Uint8ClampedArray(expected);
  for (let i = 0; i < expected; i++) {
    rgb[i] = Number(tokens[4 + i]);
  }
  return { width, height, rgb };
}

/** Inverse of decodePpm; one text line per pixel row, like the service writes. */
export function encodePpm(image: PpmImage): string {
  const { width, height, rgb } = image;
  const lines = [`P3\n${width} ${height}\n255\n`];
  for (let row = 0; row < height; row++) {
    const parts: string[] = [];
    for (let i = row * width * 3; i < (row + 1) * width * 3; i++) {
      parts.push(String(rgb[i]));
    }
    lines.push(parts.join(" ") + "\n");
  }
  return lines.join("");
}

export function decodeBase64Ppm(b64: string): PpmImage {
  return decodePpm(base64ToText(b64));
}

function base64ToText(b64: string): string {
  // atob in the browser, Buffer in node test runs
  if (typeof atob === "function") {
    return atob(b64);
  }
  const buffer = (globalThis as Record<string, any>).Buffer;
  return buffer.from(b64, "base64").toString("latin1");
}

/** RGBA expansion for drawing into a browser canvas. */
export function toRgba(image: PpmImage): Uint8ClampedArray<ArrayBuffer> {
  const { width, height, rgb } = image;
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let p = 0; p < width * height; p++) {
    rgba[p * 4] = rgb[p * 3];
    rgba[p * 4 + 1] = rgb[p * 3 + 1];
    rgba[p * 4 + 2] = rgb[p * 3 + 2];
    rgba[p * 4 + 3] = 255;
  }
  return rgba;
}
