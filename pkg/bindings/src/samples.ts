/**
 * Sample assembly: turn manifest records into training-ready arrays.
 *
 * A handle iterates a manifest in order; every sample is assembled
 * fresh from disk into caller-owned arrays (copy-out semantics, no
 * shared buffers). Distinct handles on one manifest are independent and
 * may be consumed concurrently; each handle is single-consumer.
 */

import { dirname, join, resolve } from 'node:path';

import { ShapeError, ValidationError } from './errors';
import { readFrameStack, readTriMaskStack, type FrameStack } from './frames';
import { readManifestFile, type ManifestData, type SampleKind, type SampleRecord } from './manifest';

/** Mid-gray tri-mask level marking pixels with unknown effect state. */
export const TRIMASK_UNKNOWN = 128;

/**
 * One sample as contiguous numeric arrays.
 *
 * `gt` and `over` are (frames, height, width, 3) stacks flattened in
 * row-major order with values in [0, 1]; `trimask` is the matching
 * (frames, height, width) stack of raw levels {0, 128, 255}. Unpaired
 * samples expose placeholder conditioning — an all-zero `over`, a
 * uniform-unknown `trimask`, no annotated frames — with
 * `conditioningPresent` false.
 */
export interface BoundSample {
  id: string;
  kind: SampleKind;
  caption: string;
  conditioningPresent: boolean;
  frames: number;
  height: number;
  width: number;
  gt: Float32Array;
  over: Float32Array;
  trimask: Uint8Array;
  /** Per-frame flag: true = annotated, false = unknown. */
  frameStates: boolean[];
}

/** A single-consumer cursor over one manifest. */
export interface DatasetHandle {
  readonly manifest: ManifestData;
  readonly root: string;
  cursor: number;
}

const AXES = ['T', 'H', 'W'] as const;

function requireSameExtent(
  a: { frames: number; height: number; width: number },
  b: { frames: number; height: number; width: number },
  aName: string,
  bName: string,
): void {
  const aDims = [a.frames, a.height, a.width];
  const bDims = [b.frames, b.height, b.width];
  for (let axis = 0; axis < 3; axis++) {
    if (aDims[axis] !== bDims[axis]) {
      throw new ShapeError(
        `axis ${AXES[axis]} mismatch: ${aName} has ${AXES[axis]}=${aDims[axis]}, ` +
          `${bName} has ${AXES[axis]}=${bDims[axis]}`,
      );
    }
  }
}

function dequantize(levels: Uint8Array): Float32Array {
  const out = new Float32Array(levels.length);
  for (let i = 0; i < levels.length; i++) {
    out[i] = levels[i] / 255;
  }
  return out;
}

function assembleSample(record: SampleRecord, root: string): BoundSample {
  const gt = readFrameStack(join(root, record.gtRef), 3);
  const base = {
    id: record.id,
    kind: record.kind,
    caption: record.caption,
    frames: gt.frames,
    height: gt.height,
    width: gt.width,
    gt: dequantize(gt.data),
  };
  if (record.kind === 'unpaired') {
    const pixels = gt.frames * gt.height * gt.width;
    return {
      ...base,
      conditioningPresent: false,
      over: new Float32Array(pixels * 3),
      trimask: new Uint8Array(pixels).fill(TRIMASK_UNKNOWN),
      frameStates: new Array<boolean>(gt.frames).fill(false),
    };
  }
  const over: FrameStack = readFrameStack(join(root, record.overRef as string), 3);
  requireSameExtent(gt, over, 'gt', 'over');
  const mask = readTriMaskStack(join(root, record.trimaskRef as string));
  requireSameExtent(gt, mask, 'gt', 'trimask');
  return {
    ...base,
    conditioningPresent: true,
    over: dequantize(over.data),
    trimask: Uint8Array.from(mask.data),
    frameStates: mask.annotated,
  };
}

/** Open a manifest for iteration; assets resolve against its directory. */
export function openManifest(path: string): DatasetHandle {
  const manifest = readManifestFile(path);
  return { manifest, root: dirname(resolve(path)), cursor: 0 };
}

/** Assemble the next sample in manifest order, or null at end-of-dataset. */
export function nextSample(handle: DatasetHandle): BoundSample | null {
  if (handle.cursor >= handle.manifest.samples.length) {
    return null;
  }
  const record = handle.manifest.samples[handle.cursor];
  handle.cursor += 1;
  return assembleSample(record, handle.root);
}

/** Assemble one sample by id without moving the handle's cursor. */
export function sampleById(handle: DatasetHandle, id: string): BoundSample {
  const record = handle.manifest.samples.find((sample) => sample.id === id);
  if (record === undefined) {
    throw new ValidationError(`no sample with id '${id}'`);
  }
  return assembleSample(record, handle.root);
}
