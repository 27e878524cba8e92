/** Raised when a manifest file is missing, malformed, or versioned wrong. */
export class ManifestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'ManifestError';
  }
}

/** Raised when on-disk assets violate the dataset contract. */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'ValidationError';
  }
}

/** Raised when two assets of one sample disagree on extent. */
export class ShapeError extends ValidationError {
  constructor(message: string) {
    super(message);
    this.name = 'ShapeError';
  }
}
