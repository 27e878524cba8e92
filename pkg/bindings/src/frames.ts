/**
 * Frame-directory reader.
 *
 * Every clip or mask asset is a directory of single-frame PNGs named
 * frame_000001.png onward (zero-padded, 1-based, gapless). Tri-state
 * masks additionally carry a frame_states.txt sidecar with one line per
 * frame, either `annotated` or `unknown`.
 */

import { existsSync, readdirSync, readFileSync, statSync } from 'node:fs';
import { join } from 'node:path';

import { ValidationError } from './errors';
import { decodePng } from './png';

const FRAME_RE = /^frame_(\d{6})\.png$/;

export const STATE_SIDECAR = 'frame_states.txt';
export const STATE_ANNOTATED = 'annotated';
export const STATE_UNKNOWN = 'unknown';

/** A stack of equally sized frames, samples interleaved row-major. */
export interface FrameStack {
  frames: number;
  height: number;
  width: number;
  channels: 1 | 3;
  data: Uint8Array;
}

/** A tri-state mask stack plus its per-frame annotated flags. */
export interface TriMaskStack extends FrameStack {
  channels: 1;
  annotated: boolean[];
}

function splitLines(text: string): string[] {
  const lines = text.split(/\r\n|\r|\n/);
  if (lines.length > 0 && lines[lines.length - 1] === '') {
    lines.pop();
  }
  return lines;
}

/** List a directory's frame files in order, checking gapless numbering. */
export function listFramePaths(directory: string): string[] {
  if (!existsSync(directory) || !statSync(directory).isDirectory()) {
    throw new ValidationError(`frame directory ${directory} does not exist`);
  }
  const names = readdirSync(directory)
    .filter((name) => FRAME_RE.test(name))
    .sort();
  if (names.length === 0) {
    throw new ValidationError(`no frame files in ${directory}`);
  }
  names.forEach((name, i) => {
    const match = FRAME_RE.exec(name) as RegExpExecArray;
    const index = Number(match[1]);
    if (index !== i + 1) {
      const expected = String(i + 1).padStart(6, '0');
      throw new ValidationError(
        `frame numbering gap in ${directory}: expected frame ${expected}, found ${name}`,
      );
    }
  });
  return names.map((name) => join(directory, name));
}

/** Decode a whole frame directory into one contiguous byte stack. */
export function readFrameStack(directory: string, channels: 1 | 3): FrameStack {
  const paths = listFramePaths(directory);
  let height = 0;
  let width = 0;
  let data = new Uint8Array(0);
  paths.forEach((path, t) => {
    const image = decodePng(readFileSync(path), path);
    if (image.channels !== channels) {
      throw new ValidationError(
        `${path} has ${image.channels} channel(s), expected ${channels}`,
      );
    }
    if (t === 0) {
      height = image.height;
      width = image.width;
      data = new Uint8Array(paths.length * height * width * channels);
    } else if (image.height !== height || image.width !== width) {
      throw new ValidationError(
        `${path} is ${image.height}x${image.width}, expected ${height}x${width}`,
      );
    }
    data.set(image.data, t * height * width * channels);
  });
  return { frames: paths.length, height, width, channels, data };
}

/** Read a tri-state mask directory together with its state sidecar. */
export function readTriMaskStack(directory: string): TriMaskStack {
  const stack = readFrameStack(directory, 1);
  const sidecar = join(directory, STATE_SIDECAR);
  if (!existsSync(sidecar) || !statSync(sidecar).isFile()) {
    throw new ValidationError(`tri-mask sidecar ${sidecar} is missing`);
  }
  const lines = splitLines(readFileSync(sidecar, 'utf-8'));
  if (lines.length !== stack.frames) {
    throw new ValidationError(
      `${sidecar} lists ${lines.length} frames but ${stack.frames} are stored`,
    );
  }
  const annotated = lines.map((line, i) => {
    const state = line.trim();
    if (state === STATE_ANNOTATED) return true;
    if (state === STATE_UNKNOWN) return false;
    throw new ValidationError(`${sidecar} line ${i + 1}: unknown frame state '${state}'`);
  });
  return { ...stack, channels: 1, annotated };
}
