/**
 * Minimal PNG decoder for dataset frame files.
 *
 * Frame assets are always 8-bit, non-interlaced, grayscale or RGB PNGs,
 * so only that subset is supported; anything else is rejected loudly.
 * All five scanline filters (None, Sub, Up, Average, Paeth) are handled
 * and every chunk CRC is verified.
 */

import { inflateSync } from 'node:zlib';

import { ValidationError } from './errors';

export interface DecodedImage {
  width: number;
  height: number;
  /** 1 = grayscale, 3 = RGB; samples are interleaved row-major. */
  channels: 1 | 3;
  data: Uint8Array;
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

interface Header {
  width: number;
  height: number;
  channels: 1 | 3;
}

function parseHeader(data: Buffer, source: string): Header {
  if (data.length !== 13) {
    throw new ValidationError(`${source}: IHDR chunk has ${data.length} bytes, expected 13`);
  }
  const width = data.readUInt32BE(0);
  const height = data.readUInt32BE(4);
  const bitDepth = data[8];
  const colorType = data[9];
  const compression = data[10];
  const filterMethod = data[11];
  const interlace = data[12];
  if (width < 1 || height < 1) {
    throw new ValidationError(`${source}: image size ${width}x${height} is invalid`);
  }
  if (bitDepth !== 8) {
    throw new ValidationError(`${source}: only 8-bit PNGs are supported, got bit depth ${bitDepth}`);
  }
  if (colorType !== 0 && colorType !== 2) {
    throw new ValidationError(
      `${source}: only grayscale and RGB PNGs are supported, got color type ${colorType}`,
    );
  }
  if (compression !== 0) {
    throw new ValidationError(`${source}: unknown compression method ${compression}`);
  }
  if (filterMethod !== 0) {
    throw new ValidationError(`${source}: unknown filter method ${filterMethod}`);
  }
  if (interlace !== 0) {
    throw new ValidationError(`${source}: interlaced PNGs are not supported`);
  }
  return { width, height, channels: colorType === 0 ? 1 : 3 };
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

function unfilter(raw: Buffer, header: Header, source: string): Uint8Array {
  const { width, height, channels } = header;
  const bpp = channels;
  const rowBytes = width * channels;
  if (raw.length !== (rowBytes + 1) * height) {
    throw new ValidationError(
      `${source}: decompressed pixel data is ${raw.length} bytes, ` +
        `expected ${(rowBytes + 1) * height}`,
    );
  }
  const out = new Uint8Array(rowBytes * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[(rowBytes + 1) * y];
    const rowIn = (rowBytes + 1) * y + 1;
    const rowOut = rowBytes * y;
    const prevOut = rowOut - rowBytes;
    switch (filter) {
      case 0:
        out.set(raw.subarray(rowIn, rowIn + rowBytes), rowOut);
        break;
      case 1:
        for (let i = 0; i < rowBytes; i++) {
          const left = i >= bpp ? out[rowOut + i - bpp] : 0;
          out[rowOut + i] = (raw[rowIn + i] + left) & 0xff;
        }
        break;
      case 2:
        for (let i = 0; i < rowBytes; i++) {
          const up = y > 0 ? out[prevOut + i] : 0;
          out[rowOut + i] = (raw[rowIn + i] + up) & 0xff;
        }
        break;
      case 3:
        for (let i = 0; i < rowBytes; i++) {
          const left = i >= bpp ? out[rowOut + i - bpp] : 0;
          const up = y > 0 ? out[prevOut + i] : 0;
          out[rowOut + i] = (raw[rowIn + i] + ((left + up) >> 1)) & 0xff;
        }
        break;
      case 4:
        for (let i = 0; i < rowBytes; i++) {
          const left = i >= bpp ? out[rowOut + i - bpp] : 0;
          const up = y > 0 ? out[prevOut + i] : 0;
          const upLeft = y > 0 && i >= bpp ? out[prevOut + i - bpp] : 0;
          out[rowOut + i] = (raw[rowIn + i] + paeth(left, up, upLeft)) & 0xff;
        }
        break;
      default:
        throw new ValidationError(`${source}: unknown PNG filter type ${filter} on row ${y}`);
    }
  }
  return out;
}

/**
 * Decode an 8-bit grayscale or RGB PNG into raw interleaved samples.
 *
 * `source` names the image in error messages (typically the file path).
 */
export function decodePng(bytes: Uint8Array, source = '<png>'): DecodedImage {
  const buf = Buffer.isBuffer(bytes)
    ? bytes
    : Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (buf.length < SIGNATURE.length || !buf.subarray(0, SIGNATURE.length).equals(SIGNATURE)) {
    throw new ValidationError(`${source} is not a PNG file`);
  }
  let offset = SIGNATURE.length;
  let header: Header | null = null;
  const pixelChunks: Buffer[] = [];
  let sawEnd = false;
  while (offset < buf.length && !sawEnd) {
    if (offset + 8 > buf.length) {
      throw new ValidationError(`${source} is truncated inside a chunk header`);
    }
    const length = buf.readUInt32BE(offset);
    const type = buf.toString('latin1', offset + 4, offset + 8);
    const dataStart = offset + 8;
    if (dataStart + length + 4 > buf.length) {
      throw new ValidationError(`${source} is truncated inside a ${type} chunk`);
    }
    const data = buf.subarray(dataStart, dataStart + length);
    const stored = buf.readUInt32BE(dataStart + length);
    const computed = crc32(buf.subarray(offset + 4, dataStart + length));
    if (stored !== computed) {
      throw new ValidationError(`${source}: CRC mismatch in ${type} chunk`);
    }
    if (type === 'IHDR') {
      header = parseHeader(data, source);
    } else if (type === 'IDAT') {
      if (header === null) {
        throw new ValidationError(`${source}: IDAT chunk appears before IHDR`);
      }
      pixelChunks.push(Buffer.from(data));
    } else if (type === 'IEND') {
      sawEnd = true;
    }
    // Ancillary chunks (tEXt, pHYs, ...) carry no pixel data; skip them.
    offset = dataStart + length + 4;
  }
  if (header === null) {
    throw new ValidationError(`${source} has no IHDR chunk`);
  }
  if (!sawEnd) {
    throw new ValidationError(`${source} is missing its IEND chunk`);
  }
  if (pixelChunks.length === 0) {
    throw new ValidationError(`${source} has no IDAT chunks`);
  }
  let raw: Buffer;
  try {
    raw = inflateSync(Buffer.concat(pixelChunks));
  } catch (error) {
    throw new ValidationError(`${source}: pixel data does not inflate: ${(error as Error).message}`);
  }
  return {
    width: header.width,
    height: header.height,
    channels: header.channels,
    data: unfilter(raw, header, source),
  };
}
