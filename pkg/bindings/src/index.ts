export { ManifestError, ShapeError, ValidationError } from './errors';
export { decodePng, type DecodedImage } from './png';
export {
  DEFAULT_RESOLUTION,
  MANIFEST_VERSION,
  parseManifest,
  readManifestFile,
  type ManifestData,
  type SampleKind,
  type SampleRecord,
} from './manifest';
export {
  STATE_ANNOTATED,
  STATE_SIDECAR,
  STATE_UNKNOWN,
  listFramePaths,
  readFrameStack,
  readTriMaskStack,
  type FrameStack,
  type TriMaskStack,
} from './frames';
export {
  TRIMASK_UNKNOWN,
  nextSample,
  openManifest,
  sampleById,
  type BoundSample,
  type DatasetHandle,
} from './samples';
