/**
 * Dataset manifest reader.
 *
 * A manifest is newline-delimited JSON: the first line is a header object
 * carrying the format version and the corpus's default resolution, and
 * every following line is one sample record. Optional fields are omitted,
 * never null. Anything malformed is reported with its line number.
 */

import { readFileSync } from 'node:fs';

import { ManifestError } from './errors';

export const MANIFEST_VERSION = 1;
export const DEFAULT_RESOLUTION: readonly [number, number] = [384, 672];

export type SampleKind = 'paired_real' | 'paired_synthetic' | 'unpaired';

const KINDS: readonly string[] = ['paired_real', 'paired_synthetic', 'unpaired'];
const SAMPLE_FIELDS = new Set(['id', 'kind', 'gt', 'over', 'trimask', 'caption', 'provenance']);
const REQUIRED_FIELDS = ['id', 'kind', 'gt', 'caption'] as const;

/** One manifest line; refs are paths relative to the manifest directory. */
export interface SampleRecord {
  id: string;
  kind: SampleKind;
  gtRef: string;
  caption: string;
  overRef?: string;
  trimaskRef?: string;
  provenance: string;
}

/** A parsed manifest: ordered samples plus shared corpus metadata. */
export interface ManifestData {
  version: number;
  defaultResolution: [number, number];
  samples: SampleRecord[];
}

function asOptionalString(record: Record<string, unknown>, field: string): string | undefined {
  const value = record[field];
  if (value === undefined) return undefined;
  if (typeof value !== 'string') {
    throw new ManifestError(`manifest field '${field}' must be a string`);
  }
  return value;
}

function parseRecord(record: Record<string, unknown>): SampleRecord {
  const unknown = Object.keys(record).filter((key) => !SAMPLE_FIELDS.has(key));
  if (unknown.length > 0) {
    throw new ManifestError(`unknown manifest fields [${unknown.sort().join(', ')}]`);
  }
  const missing = REQUIRED_FIELDS.filter((field) => !(field in record));
  if (missing.length > 0) {
    throw new ManifestError(`manifest record missing fields [${missing.join(', ')}]`);
  }
  const id = asOptionalString(record, 'id') ?? '';
  const kind = asOptionalString(record, 'kind') ?? '';
  const gtRef = asOptionalString(record, 'gt') ?? '';
  const caption = asOptionalString(record, 'caption') ?? '';
  const overRef = asOptionalString(record, 'over');
  const trimaskRef = asOptionalString(record, 'trimask');
  const provenance = asOptionalString(record, 'provenance') ?? '';
  if (!id) throw new ManifestError('sample id must be non-empty');
  if (!KINDS.includes(kind)) {
    throw new ManifestError(`sample ${id}: unknown kind '${kind}'`);
  }
  if (!gtRef) throw new ManifestError(`sample ${id}: gt ref must be non-empty`);
  if (!caption) throw new ManifestError(`sample ${id}: caption must be non-empty`);
  const paired = kind !== 'unpaired';
  if (paired && (!overRef || !trimaskRef)) {
    throw new ManifestError(`sample ${id}: paired samples need over and trimask refs`);
  }
  if (!paired && (overRef !== undefined || trimaskRef !== undefined)) {
    throw new ManifestError(`sample ${id}: unpaired samples must omit over and trimask refs`);
  }
  return {
    id,
    kind: kind as SampleKind,
    gtRef,
    caption,
    ...(overRef !== undefined ? { overRef } : {}),
    ...(trimaskRef !== undefined ? { trimaskRef } : {}),
    provenance,
  };
}

function parseResolution(header: Record<string, unknown>, source: string): [number, number] {
  const value = header['resolution'];
  if (value === undefined) return [DEFAULT_RESOLUTION[0], DEFAULT_RESOLUTION[1]];
  if (!Array.isArray(value) || value.length !== 2) {
    throw new ManifestError(`${source}: header resolution must be [height, width]`);
  }
  const [height, width] = value as [unknown, unknown];
  if (!Number.isInteger(height) || !Number.isInteger(width)) {
    throw new ManifestError(`${source}: header resolution must hold integers`);
  }
  if ((height as number) < 1 || (width as number) < 1) {
    throw new ManifestError(
      `${source}: default resolution must be positive, got [${height}, ${width}]`,
    );
  }
  return [height as number, width as number];
}

/**
 * Parse manifest text, naming `source` and the line number of anything
 * malformed. Blank lines are skipped.
 */
export function parseManifest(text: string, source: string): ManifestData {
  let header: Record<string, unknown> | null = null;
  const samples: SampleRecord[] = [];
  const seen = new Set<string>();
  const lines = text.split(/\r\n|\r|\n/);
  for (let i = 0; i < lines.length; i++) {
    const lineNo = i + 1;
    const line = lines[i].trim();
    if (!line) continue;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch (error) {
      throw new ManifestError(
        `${source}: line ${lineNo}: invalid JSON: ${(error as Error).message}`,
      );
    }
    if (typeof record !== 'object' || record === null || Array.isArray(record)) {
      throw new ManifestError(`${source}: line ${lineNo}: expected a JSON object`);
    }
    const fields = record as Record<string, unknown>;
    if (header === null) {
      if (!('version' in fields)) {
        throw new ManifestError(
          `${source}: line ${lineNo}: first line must be a header with a version`,
        );
      }
      header = fields;
      continue;
    }
    let sample: SampleRecord;
    try {
      sample = parseRecord(fields);
    } catch (error) {
      throw new ManifestError(`${source}: line ${lineNo}: ${(error as Error).message}`);
    }
    if (seen.has(sample.id)) {
      throw new ManifestError(`${source}: line ${lineNo}: duplicate sample id '${sample.id}'`);
    }
    seen.add(sample.id);
    samples.push(sample);
  }
  if (header === null) {
    throw new ManifestError(`${source} is empty`);
  }
  const version = header['version'];
  if (typeof version !== 'number' || !Number.isInteger(version)) {
    throw new ManifestError(`${source}: header version must be an integer`);
  }
  if (version !== MANIFEST_VERSION) {
    throw new ManifestError(
      `unsupported manifest version ${version}; this build reads version ${MANIFEST_VERSION}`,
    );
  }
  return { version, defaultResolution: parseResolution(header, source), samples };
}

/** Read and parse a manifest file. */
export function readManifestFile(path: string): ManifestData {
  let text: string;
  try {
    text = readFileSync(path, 'utf-8');
  } catch {
    throw new ManifestError(`manifest ${path} does not exist`);
  }
  return parseManifest(text, path);
}
